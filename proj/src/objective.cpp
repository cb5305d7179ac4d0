#include "tfsep/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tfsep::objective {

namespace {

constexpr double kClampDb = 60.0;
constexpr double kLogEps = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_pair(const std::vector<double>& est, const std::vector<double>& ref) {
  if (est.size() != ref.size()) throw std::invalid_argument("loss: length mismatch");
  if (est.empty()) throw std::invalid_argument("loss: empty signals");
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double mag_l1(const std::vector<double>& a, const std::vector<double>& b, const StftConfig& cfg,
              double* tf_cells) {
  Waveform wa(1, static_cast<std::int64_t>(a.size()), cfg.sample_rate);
  Waveform wb(1, static_cast<std::int64_t>(b.size()), cfg.sample_rate);
  std::copy(a.begin(), a.end(), wa.data.begin());
  std::copy(b.begin(), b.end(), wb.data.begin());
  const Spectrogram sa = stft(wa, cfg);
  const Spectrogram sb = stft(wb, cfg);
  double s = 0.0;
  for (std::size_t i = 0; i < sa.data.size(); ++i)
    s += std::abs(std::abs(sa.data[i]) - std::abs(sb.data[i]));
  *tf_cells = static_cast<double>(sa.frames) * sa.freqs;
  return s;
}

std::vector<double> scaled(const std::vector<double>& x, double a) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "sisdr") return LossKind::SISDR_SE;
  if (s == "sisdr_mc") return LossKind::SISDR_SE_MC;
  if (s == "wavmag") return LossKind::WavMag;
  if (s == "wavmag_mc") return LossKind::WavMagMC;
  if (s == "wavmag_geq") return LossKind::WavMagGEQ;
  throw std::invalid_argument("loss: unknown kind '" + s + "'");
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::SISDR_SE: return "sisdr";
    case LossKind::SISDR_SE_MC: return "sisdr_mc";
    case LossKind::WavMag: return "wavmag";
    case LossKind::WavMagMC: return "wavmag_mc";
    case LossKind::WavMagGEQ: return "wavmag_geq";
  }
  return "?";
}

double ls_gain(const std::vector<double>& est, const std::vector<double>& ref) {
  check_pair(est, ref);
  const double ee = dot(est, est);
  if (ee == 0.0) throw std::invalid_argument("loss: zero-norm estimate");
  return dot(est, ref) / ee;
}

double si_sdr_se(const std::vector<double>& est, const std::vector<double>& ref) {
  check_pair(est, ref);
  const double ss = dot(ref, ref);
  if (ss == 0.0) throw std::invalid_argument("loss: zero-norm reference");
  const double alpha = ls_gain(est, ref);
  double resid = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = alpha * est[i] - ref[i];
    resid += d * d;
  }
  const double db = 10.0 * std::log10(ss / (resid + kLogEps));
  return std::clamp(db, -kClampDb, kClampDb);
}

double si_sdr_eval(const std::vector<double>& est, const std::vector<double>& ref) {
  check_pair(est, ref);
  const double ss = dot(ref, ref);
  if (ss == 0.0) throw std::invalid_argument("metric: zero-norm reference");
  const double ee = dot(est, est);
  if (ee == 0.0) throw std::invalid_argument("metric: zero-norm estimate");
  const double alpha = dot(est, ref) / ss;  // scale the source
  double target = 0.0, resid = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double tgt = alpha * ref[i];
    const double d = est[i] - tgt;
    target += tgt * tgt;
    resid += d * d;
  }
  const double db = 10.0 * std::log10((target + kLogEps) / (resid + kLogEps));
  return std::clamp(db, -kClampDb, kClampDb);
}

double si_sdri(const std::vector<double>& est, const std::vector<double>& ref,
               const std::vector<double>& mixture) {
  return si_sdr_eval(est, ref) - si_sdr_eval(mixture, ref);
}

double loss_sisdr_se_mc(const std::vector<std::vector<double>>& est,
                        const std::vector<std::vector<double>>& ref) {
  if (est.size() != ref.size() || est.empty())
    throw std::invalid_argument("loss: source count mismatch");
  const std::size_t n = est.front().size();
  double total = 0.0;
  std::vector<double> sum_est(n, 0.0), sum_ref(n, 0.0);
  for (std::size_t c = 0; c < est.size(); ++c) {
    check_pair(est[c], ref[c]);
    if (est[c].size() != n) throw std::invalid_argument("loss: ragged sources");
    total -= si_sdr_se(est[c], ref[c]);
    const double alpha = ls_gain(est[c], ref[c]);
    for (std::size_t i = 0; i < n; ++i) {
      sum_est[i] += alpha * est[c][i];
      sum_ref[i] += ref[c][i];
    }
  }
  total += l1(sum_est, sum_ref) / static_cast<double>(n);
  return total;
}

double loss_wav_mag(const std::vector<std::vector<double>>& est,
                    const std::vector<std::vector<double>>& ref, const StftConfig& cfg,
                    bool with_mc) {
  if (est.size() != ref.size() || est.empty())
    throw std::invalid_argument("loss: source count mismatch");
  const std::size_t n = est.front().size();
  double total = 0.0;
  for (std::size_t c = 0; c < est.size(); ++c) {
    check_pair(est[c], ref[c]);
    double tf = 0.0;
    total += l1(est[c], ref[c]) / static_cast<double>(n);
    total += mag_l1(est[c], ref[c], cfg, &tf) / tf;
  }
  if (with_mc) {
    std::vector<double> sum_est(n, 0.0), sum_ref(n, 0.0);
    for (std::size_t c = 0; c < est.size(); ++c)
      for (std::size_t i = 0; i < n; ++i) {
        sum_est[i] += est[c][i];
        sum_ref[i] += ref[c][i];
      }
    double tf = 0.0;
    total += l1(sum_est, sum_ref) / static_cast<double>(n);
    total += mag_l1(sum_est, sum_ref, cfg, &tf) / tf;
  }
  return total;
}

double loss_wav_mag_geq(const std::vector<std::vector<double>>& est,
                        const std::vector<std::vector<double>>& ref, const StftConfig& cfg) {
  std::vector<std::vector<double>> equalized(est.size());
  for (std::size_t c = 0; c < est.size(); ++c) {
    check_pair(est[c], ref[c]);
    equalized[c] = scaled(est[c], ls_gain(est[c], ref[c]));
  }
  return loss_wav_mag(equalized, ref, cfg, false);
}

double total_loss(const std::vector<std::vector<double>>& est,
                  const std::vector<std::vector<double>>& ref, LossKind kind,
                  const StftConfig& cfg) {
  switch (kind) {
    case LossKind::SISDR_SE: {
      double total = 0.0;
      for (std::size_t c = 0; c < est.size(); ++c) total -= si_sdr_se(est[c], ref[c]);
      return total;
    }
    case LossKind::SISDR_SE_MC:
      return loss_sisdr_se_mc(est, ref);
    case LossKind::WavMag:
      return loss_wav_mag(est, ref, cfg, false);
    case LossKind::WavMagMC:
      return loss_wav_mag(est, ref, cfg, true);
    case LossKind::WavMagGEQ:
      return loss_wav_mag_geq(est, ref, cfg);
  }
  throw std::invalid_argument("loss: unknown kind");
}

PitResult pit_assign(const std::vector<std::vector<double>>& est,
                     const std::vector<std::vector<double>>& ref, LossKind kind,
                     const StftConfig& cfg) {
  const int C = static_cast<int>(est.size());
  if (C == 0 || ref.size() != est.size())
    throw std::invalid_argument("pit: source count mismatch");
  if (C > 4) throw std::invalid_argument("pit: more than 4 sources is unsupported");

  std::vector<int> perm(C);
  std::iota(perm.begin(), perm.end(), 0);

  PitResult best;
  bool first = true;
  do {
    std::vector<std::vector<double>> assigned(C);
    for (int c = 0; c < C; ++c) assigned[c] = est[perm[c]];
    const double loss = total_loss(assigned, ref, kind, cfg);
    if (first || loss < best.loss) {
      best.loss = loss;
      best.permutation = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "loss_kind: " << objective::to_string(loss_kind) << "\n";
  os << "loss_value: " << loss_value << "\n";
  os << "permutation:";
  for (int p : permutation) os << " " << p;
  os << "\n";
  for (std::size_t c = 0; c < si_sdr.size(); ++c) {
    os << "source " << c << ": si_sdr " << si_sdr[c] << " dB";
    if (c < si_sdri.size()) os << ", si_sdri " << si_sdri[c] << " dB";
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  std::ostringstream os;
  os.precision(10);
  os << "{\"loss_kind\":\"" << objective::to_string(loss_kind) << "\",\"loss_value\":" << loss_value
     << ",\"permutation\":[";
  for (std::size_t i = 0; i < permutation.size(); ++i) os << (i ? "," : "") << permutation[i];
  os << "],\"si_sdr\":[";
  for (std::size_t i = 0; i < si_sdr.size(); ++i) os << (i ? "," : "") << si_sdr[i];
  os << "],\"si_sdri\":[";
  for (std::size_t i = 0; i < si_sdri.size(); ++i) os << (i ? "," : "") << si_sdri[i];
  os << "]}";
  return os.str();
}

EvalReport evaluate(const std::vector<std::vector<double>>& est,
                    const std::vector<std::vector<double>>& ref,
                    const std::vector<double>& mixture_ref_channel, LossKind kind,
                    const StftConfig& cfg, bool use_pit) {
  const int C = static_cast<int>(est.size());
  EvalReport report;
  report.loss_kind = kind;
  if (use_pit) {
    const PitResult pit = pit_assign(est, ref, kind, cfg);
    report.permutation = pit.permutation;
    report.loss_value = pit.loss;
  } else {
    report.permutation.resize(C);
    std::iota(report.permutation.begin(), report.permutation.end(), 0);
    report.loss_value = total_loss(est, ref, kind, cfg);
  }
  for (int c = 0; c < C; ++c) {
    const std::vector<double>& e = est[report.permutation[c]];
    report.si_sdr.push_back(si_sdr_eval(e, ref[c]));
    report.si_sdri.push_back(si_sdri(e, ref[c], mixture_ref_channel));
  }
  return report;
}

}  // namespace tfsep::objective
