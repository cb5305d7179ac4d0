#include "tfsep/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tfsep/parallel.hpp"

namespace tfsep::filters {

using linalg::CMatrix;

void FilterSpec::validate() const {
  if (delta_l < 0 || delta_r < 0) throw std::invalid_argument("filter: negative taps");
  if (!(epsilon > 0.0)) throw std::invalid_argument("filter: epsilon must be positive");
  if (loading < 0.0) throw std::invalid_argument("filter: negative loading");
  if (kind != FilterKind::MFWF) {
    if (delta_d < 1) throw std::invalid_argument("filter: prediction delay must be >= 1");
    if (delta_r != 0) throw std::invalid_argument("filter: future taps not allowed for this kind");
    if (kind == FilterKind::WPE && delta_l < 1)
      throw std::invalid_argument("filter: WPE needs at least one past tap");
  }
}

int FilterSpec::taps(int mics) const {
  switch (kind) {
    case FilterKind::MFWF:
      return (delta_l + 1 + delta_r) * mics;
    case FilterKind::ConvBF:
      return (delta_l + 1) * mics;
    case FilterKind::WPE:
      return delta_l;
  }
  return 0;
}

CVector stack_frames(const Spectrogram& y, int t, int f, int delta_l, int delta_r) {
  const int P = y.channels;
  CVector out(static_cast<std::size_t>(delta_l + 1 + delta_r) * P, cd{});
  std::size_t k = 0;
  for (int dt = -delta_l; dt <= delta_r; ++dt) {
    const int tt = t + dt;
    for (int p = 0; p < P; ++p, ++k)
      if (tt >= 0 && tt < y.frames) out[k] = y.at(p, tt, f);
  }
  return out;
}

CVector stack_frames_delayed(const Spectrogram& y, int t, int f, int delta_l, int delta_d) {
  const int P = y.channels;
  CVector out(static_cast<std::size_t>(delta_l + 1) * P, cd{});
  std::size_t k = 0;
  for (int tap = 0; tap < delta_l; ++tap) {
    const int tt = t - delta_d - delta_l + 1 + tap;
    for (int p = 0; p < P; ++p, ++k)
      if (tt >= 0 && tt < y.frames) out[k] = y.at(p, tt, f);
  }
  for (int p = 0; p < P; ++p, ++k) out[k] = y.at(p, t, f);
  return out;
}

namespace {

bool all_zero(const std::vector<CVector>& frames) {
  for (const CVector& v : frames)
    for (const cd& e : v)
      if (e != cd{}) return false;
  return true;
}

void check_match(const Spectrogram& y, const Spectrogram& s1) {
  if (y.frames != s1.frames || y.freqs != s1.freqs)
    throw std::invalid_argument("filter: mixture/estimate shape mismatch");
}

}  // namespace

FilterResult mfwf(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec) {
  spec.validate();
  check_match(y, s1);
  const int C = s1.channels, T = y.frames, F = y.freqs;
  const int dim = spec.taps(y.channels);

  FilterResult res;
  res.bank = FilterBank(C, F);
  res.output = Spectrogram(C, T, F, y.config);

  parallel_for(0, C * F, [&](int idx) {
    const int c = idx / F, f = idx % F;
    std::vector<CVector> frames(T);
    CVector targets(T);
    for (int t = 0; t < T; ++t) {
      frames[t] = stack_frames(y, t, f, spec.delta_l, spec.delta_r);
      targets[t] = s1.at(c, t, f);
    }
    CVector w(dim, cd{});
    if (!all_zero(frames)) {
      const std::vector<double> unit(T, 1.0);
      w = linalg::weighted_normal_equations(frames, targets, unit, spec.loading);
    }
    res.bank.at(c, f) = w;
    for (int t = 0; t < T; ++t) res.output.at(c, t, f) = linalg::dot_h(w, frames[t]);
  });
  return res;
}

std::vector<double> compute_lambda(const Spectrogram& s1, int channel, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("lambda: epsilon must be positive");
  const int T = s1.frames, F = s1.freqs;
  std::vector<double> lam(static_cast<std::size_t>(T) * F);
  double peak = 0.0;
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f) {
      const double p = std::norm(s1.at(channel, t, f));
      lam[static_cast<std::size_t>(t) * F + f] = p;
      peak = std::max(peak, p);
    }
  if (peak == 0.0) throw std::runtime_error("lambda: all-zero source estimate");
  const double floor = epsilon * peak;
  for (double& v : lam) v = std::max(v, floor);
  return lam;
}

std::vector<CVector> compute_mask_and_rtf(const Spectrogram& y, const Spectrogram& s1, int source,
                                          int ref_mic) {
  check_match(y, s1);
  if (ref_mic < 0 || ref_mic >= y.channels) throw std::invalid_argument("rtf: bad reference mic");
  const int P = y.channels, T = y.frames, F = y.freqs;

  std::vector<CVector> steering(F);
  for (int f = 0; f < F; ++f) {
    CMatrix phi(P, P);
    for (int t = 0; t < T; ++t) {
      const double est = std::abs(s1.at(source, t, f));
      const double err = std::abs(y.at(ref_mic, t, f) - s1.at(source, t, f));
      const double denom = est + err;
      const double mask = denom > 0.0 ? est / denom : 0.0;
      if (mask == 0.0) continue;
      for (int p = 0; p < P; ++p) {
        const cd yp = mask * y.at(p, t, f);
        for (int q2 = 0; q2 < P; ++q2) phi.at(p, q2) += yp * std::conj(y.at(q2, t, f));
      }
    }
    for (int p = 0; p < P; ++p) {
      for (int q2 = p + 1; q2 < P; ++q2) {
        const cd m = 0.5 * (phi.at(p, q2) + std::conj(phi.at(q2, p)));
        phi.at(p, q2) = m;
        phi.at(q2, p) = std::conj(m);
      }
      phi.at(p, p) = phi.at(p, p).real();
    }
    CVector d;
    try {
      d = linalg::principal_eigvec(phi);
    } catch (const std::exception& e) {
      throw std::runtime_error("rtf: frequency " + std::to_string(f) + ": " + e.what());
    }
    const cd ref = d[ref_mic];
    if (std::abs(ref) < 1e-12)
      throw std::runtime_error("rtf: frequency " + std::to_string(f) +
                               ": reference-mic component vanishes");
    for (cd& e : d) e /= ref;
    steering[f] = std::move(d);
  }
  return steering;
}

FilterResult convbf(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec,
                    int ref_mic) {
  spec.validate();
  if (spec.kind != FilterKind::ConvBF) throw std::invalid_argument("convbf: wrong filter kind");
  check_match(y, s1);
  const int C = s1.channels, T = y.frames, F = y.freqs, P = y.channels;
  const int dim = spec.taps(P);

  FilterResult res;
  res.bank = FilterBank(C, F);
  res.output = Spectrogram(C, T, F, y.config);

  for (int c = 0; c < C; ++c) {
    const std::vector<double> lam = compute_lambda(s1, c, spec.epsilon);
    const std::vector<CVector> steering = compute_mask_and_rtf(y, s1, c, ref_mic);
    parallel_for(0, F, [&, c](int f) {
      CMatrix r(dim, dim);
      std::vector<CVector> stacks(T);
      for (int t = 0; t < T; ++t) {
        stacks[t] = stack_frames_delayed(y, t, f, spec.delta_l, spec.delta_d);
        const double wgt = 1.0 / lam[static_cast<std::size_t>(t) * F + f];
        for (int i = 0; i < dim; ++i) {
          const cd yi = wgt * stacks[t][i];
          for (int j = 0; j < dim; ++j) r.at(i, j) += yi * std::conj(stacks[t][j]);
        }
      }
      for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
          const cd m = 0.5 * (r.at(i, j) + std::conj(r.at(j, i)));
          r.at(i, j) = m;
          r.at(j, i) = std::conj(m);
        }
        r.at(i, i) = r.at(i, i).real();
      }

      // Constraint vector: steering embedded in the current-frame block.
      CVector dt(dim, cd{});
      double d_norm = 0.0;
      for (int p = 0; p < P; ++p) {
        dt[static_cast<std::size_t>(spec.delta_l) * P + p] = steering[f][p];
        d_norm += std::norm(steering[f][p]);
      }
      if (d_norm == 0.0)
        throw std::runtime_error("convbf: zero steering vector at frequency " + std::to_string(f));

      const CVector rinv_d = linalg::hermitian_solve(r, dt, spec.loading);
      const cd denom = linalg::dot_h(dt, rinv_d);
      if (std::abs(denom) < 1e-300)
        throw std::runtime_error("convbf: degenerate constraint at frequency " + std::to_string(f));
      CVector w(dim);
      for (int i = 0; i < dim; ++i) w[i] = rinv_d[i] / denom;

      res.bank.at(c, f) = w;
      for (int t = 0; t < T; ++t) res.output.at(c, t, f) = linalg::dot_h(w, stacks[t]);
    });
  }
  return res;
}

FilterResult wpe(const Spectrogram& y_ref, const Spectrogram& s1, const FilterSpec& spec) {
  spec.validate();
  if (spec.kind != FilterKind::WPE) throw std::invalid_argument("wpe: wrong filter kind");
  if (y_ref.channels != 1) throw std::invalid_argument("wpe: expects a single-channel mixture");
  check_match(y_ref, s1);
  const int C = s1.channels, T = y_ref.frames, F = y_ref.freqs;
  const int dim = spec.delta_l;

  FilterResult res;
  res.bank = FilterBank(C, F);
  res.output = Spectrogram(C, T, F, y_ref.config);

  for (int c = 0; c < C; ++c) {
    const std::vector<double> lam = compute_lambda(s1, c, spec.epsilon);
    parallel_for(0, F, [&, c](int f) {
      std::vector<CVector> frames(T);
      CVector targets(T);
      std::vector<double> weights(T);
      for (int t = 0; t < T; ++t) {
        // Delayed past stack: [Y(t-dd-dl+1), ..., Y(t-dd)].
        CVector v(dim, cd{});
        for (int tap = 0; tap < dim; ++tap) {
          const int tt = t - spec.delta_d - dim + 1 + tap;
          if (tt >= 0 && tt < T) v[tap] = y_ref.at(0, tt, f);
        }
        frames[t] = std::move(v);
        targets[t] = y_ref.at(0, t, f);
        weights[t] = 1.0 / lam[static_cast<std::size_t>(t) * F + f];
      }
      CVector w(dim, cd{});
      if (!all_zero(frames))
        w = linalg::weighted_normal_equations(frames, targets, weights, spec.loading);
      res.bank.at(c, f) = w;
      for (int t = 0; t < T; ++t)
        res.output.at(c, t, f) = y_ref.at(0, t, f) - linalg::dot_h(w, frames[t]);
    });
  }
  return res;
}

FilterResult apply_filter(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec,
                          int ref_mic) {
  switch (spec.kind) {
    case FilterKind::MFWF:
      return mfwf(y, s1, spec);
    case FilterKind::ConvBF:
      return convbf(y, s1, spec, ref_mic);
    case FilterKind::WPE:
      return wpe(y.channel(ref_mic), s1, spec);
  }
  throw std::invalid_argument("filter: unknown kind");
}

}  // namespace tfsep::filters
