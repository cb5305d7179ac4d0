#include <cmath>
#include <numeric>

#include "doctest.h"
#include "tfsep/objective.hpp"
#include "tfsep/rng.hpp"

using namespace tfsep;
using namespace tfsep::objective;

namespace {

std::vector<double> random_sig(int n, std::uint64_t seed) {
  std::vector<double> x(n);
  Rng rng(seed);
  for (double& v : x) v = rng.gaussian();
  return x;
}

const StftConfig kCfg = StftConfig::for_sample_rate(8000);

}  // namespace

TEST_CASE("si_sdr_se hand-computed case") {
  // s = (1, 0), est = (1, 1): alpha = 0.5, residual 0.5 -> ~3.0103 dB.
  CHECK(si_sdr_se({1.0, 1.0}, {1.0, 0.0}) == doctest::Approx(3.010299957).epsilon(1e-7));
}

TEST_CASE("si_sdr_se scale and sign invariance with clamp") {
  const std::vector<double> s = random_sig(256, 1);
  std::vector<double> half(s), neg(s);
  for (double& v : half) v *= 0.5;
  for (double& v : neg) v *= -1.0;
  CHECK(si_sdr_se(half, s) == doctest::Approx(60.0));
  CHECK(si_sdr_se(neg, s) == doctest::Approx(60.0));
  const std::vector<double> zeros(256, 0.0);
  CHECK_THROWS(si_sdr_se(zeros, s));
  CHECK_THROWS(si_sdr_se(s, zeros));
}

TEST_CASE("evaluation si_sdr reproduces a constructed SNR") {
  const std::vector<double> s = random_sig(4096, 2);
  std::vector<double> noise = random_sig(4096, 3);
  // Orthogonalize the noise against s, then set the SNR to exactly -10 dB.
  double sn = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sn += s[i] * noise[i];
    ss += s[i] * s[i];
  }
  for (std::size_t i = 0; i < s.size(); ++i) noise[i] -= sn / ss * s[i];
  double nn = 0.0;
  for (double v : noise) nn += v * v;
  const double scale = std::sqrt(ss / nn * 10.0);  // noise 10x signal energy
  std::vector<double> mix(s);
  for (std::size_t i = 0; i < s.size(); ++i) mix[i] += scale * noise[i];
  CHECK(si_sdr_eval(mix, s) == doctest::Approx(-10.0).epsilon(0.01));
  CHECK(si_sdri(mix, s, mix) == doctest::Approx(0.0));
}

TEST_CASE("mixture-constraint term vanishes under exact and gain-scaled matches") {
  const std::vector<double> a = random_sig(512, 4);
  const std::vector<double> b = random_sig(512, 5);
  const std::vector<std::vector<double>> ref = {a, b};

  CHECK(loss_sisdr_se_mc(ref, ref) == doctest::Approx(-120.0));  // two clamped-perfect sources

  // est = 2*ref: the gains absorb the scale, MC term stays 0.
  std::vector<std::vector<double>> doubled = ref;
  for (auto& sig : doubled)
    for (double& v : sig) v *= 2.0;
  CHECK(loss_sisdr_se_mc(doubled, ref) == doctest::Approx(-120.0));
}

TEST_CASE("sisdr_se_mc matches an independent recomputation") {
  const std::vector<std::vector<double>> ref = {random_sig(300, 6), random_sig(300, 7)};
  const std::vector<std::vector<double>> est = {random_sig(300, 8), random_sig(300, 9)};
  const double got = loss_sisdr_se_mc(est, ref);

  double want = 0.0;
  std::vector<double> sum_scaled(300, 0.0), sum_ref(300, 0.0);
  for (int c = 0; c < 2; ++c) {
    double es = 0.0, ee = 0.0, ss = 0.0;
    for (int i = 0; i < 300; ++i) {
      es += est[c][i] * ref[c][i];
      ee += est[c][i] * est[c][i];
      ss += ref[c][i] * ref[c][i];
    }
    const double alpha = es / ee;
    double resid = 0.0;
    for (int i = 0; i < 300; ++i) {
      const double d = alpha * est[c][i] - ref[c][i];
      resid += d * d;
      sum_scaled[i] += alpha * est[c][i];
      sum_ref[i] += ref[c][i];
    }
    want -= std::min(60.0, std::max(-60.0, 10.0 * std::log10(ss / (resid + 1e-12))));
  }
  double mc = 0.0;
  for (int i = 0; i < 300; ++i) mc += std::abs(sum_scaled[i] - sum_ref[i]);
  want += mc / 300.0;
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("wav+mag loss: zero at equality, offset case matches recomputation") {
  const std::vector<std::vector<double>> ref = {random_sig(2048, 10), random_sig(2048, 11)};
  CHECK(loss_wav_mag(ref, ref, kCfg, false) == doctest::Approx(0.0));
  CHECK(loss_wav_mag(ref, ref, kCfg, true) == doctest::Approx(0.0));

  // Constant offset on one source: waveform term is exactly |delta|.
  const double delta = 0.37;
  std::vector<std::vector<double>> est = ref;
  for (double& v : est[0]) v += delta;
  const double loss = loss_wav_mag(est, ref, kCfg, false);

  Waveform wa(1, 2048, 8000), wb(1, 2048, 8000);
  std::copy(est[0].begin(), est[0].end(), wa.data.begin());
  std::copy(ref[0].begin(), ref[0].end(), wb.data.begin());
  const Spectrogram sa = stft(wa, kCfg), sb = stft(wb, kCfg);
  double mag = 0.0;
  for (std::size_t i = 0; i < sa.data.size(); ++i)
    mag += std::abs(std::abs(sa.data[i]) - std::abs(sb.data[i]));
  const double want = delta + mag / (static_cast<double>(sa.frames) * sa.freqs);
  CHECK(loss == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("wav+mag MC decomposition: cancelling per-source errors") {
  const std::vector<double> base = random_sig(1024, 12);
  const std::vector<double> bump = random_sig(1024, 13);
  std::vector<std::vector<double>> ref = {base, base};
  std::vector<std::vector<double>> est = ref;
  for (int i = 0; i < 1024; ++i) {
    est[0][i] += bump[i];
    est[1][i] -= bump[i];  // sums match exactly
  }
  const double no_mc = loss_wav_mag(est, ref, kCfg, false);
  const double with_mc = loss_wav_mag(est, ref, kCfg, true);
  CHECK(no_mc > 0.0);
  CHECK(with_mc == doctest::Approx(no_mc).epsilon(1e-12));
}

TEST_CASE("GEQ loss ignores per-source gain errors") {
  const std::vector<std::vector<double>> ref = {random_sig(1024, 14)};
  std::vector<std::vector<double>> est = ref;
  for (double& v : est[0]) v *= 3.0;
  CHECK(loss_wav_mag_geq(est, ref, kCfg) == doctest::Approx(0.0));
  CHECK(loss_wav_mag_geq(ref, ref, kCfg) == doctest::Approx(0.0));

  const std::vector<std::vector<double>> other = {random_sig(1024, 15)};
  const double a = loss_wav_mag_geq(other, ref, kCfg);
  const double b = loss_wav_mag(other, ref, kCfg, false);
  CHECK(a > 0.0);
  CHECK(std::isfinite(b));
}

TEST_CASE("pit: identity, swap, and exhaustive agreement for C=3") {
  const std::vector<double> s0 = random_sig(600, 16);
  const std::vector<double> s1 = random_sig(600, 17);
  const std::vector<std::vector<double>> ref2 = {s0, s1};

  const PitResult id = pit_assign(ref2, ref2, LossKind::SISDR_SE, kCfg);
  CHECK(id.permutation == std::vector<int>{0, 1});

  const std::vector<std::vector<double>> swapped = {s1, s0};
  const PitResult sw = pit_assign(swapped, ref2, LossKind::SISDR_SE, kCfg);
  CHECK(sw.permutation == std::vector<int>{1, 0});
  CHECK(sw.loss == doctest::Approx(id.loss));

  // C = 3 exhaustive oracle.
  Rng rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> ref3, est3;
    for (int c = 0; c < 3; ++c) {
      ref3.push_back(random_sig(200, 100 + trial * 7 + c));
      est3.push_back(random_sig(200, 200 + trial * 7 + c));
    }
    const PitResult got = pit_assign(est3, ref3, LossKind::SISDR_SE, kCfg);

    std::vector<int> perm = {0, 1, 2};
    double best = 0.0;
    std::vector<int> best_perm;
    bool first = true;
    do {
      double loss = 0.0;
      for (int c = 0; c < 3; ++c) loss -= si_sdr_se(est3[perm[c]], ref3[c]);
      if (first || loss < best) {
        best = loss;
        best_perm = perm;
        first = false;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got.loss == doctest::Approx(best));
    CHECK(got.permutation == best_perm);
  }

  std::vector<std::vector<double>> five(5, s0);
  CHECK_THROWS(pit_assign(five, five, LossKind::SISDR_SE, kCfg));
}

TEST_CASE("pit permutation equivariance") {
  std::vector<std::vector<double>> ref, est;
  for (int c = 0; c < 3; ++c) {
    ref.push_back(random_sig(256, 20 + c));
    est.push_back(random_sig(256, 30 + c));
  }
  const PitResult base = pit_assign(est, ref, LossKind::SISDR_SE_MC, kCfg);
  const std::vector<std::vector<double>> shuffled = {est[2], est[0], est[1]};
  const PitResult moved = pit_assign(shuffled, ref, LossKind::SISDR_SE_MC, kCfg);
  CHECK(moved.loss == doctest::Approx(base.loss).epsilon(1e-12));
}

TEST_CASE("losses are minimized at est = ref") {
  std::vector<std::vector<double>> ref = {random_sig(512, 40), random_sig(512, 41)};
  std::vector<std::vector<double>> noisy = ref;
  Rng rng(42);
  for (auto& sig : noisy)
    for (double& v : sig) v += 0.3 * rng.gaussian();
  for (LossKind kind : {LossKind::SISDR_SE, LossKind::SISDR_SE_MC, LossKind::WavMag,
                        LossKind::WavMagMC, LossKind::WavMagGEQ}) {
    CHECK(total_loss(ref, ref, kind, kCfg) <= total_loss(noisy, ref, kind, kCfg));
  }
}

TEST_CASE("eval report wiring") {
  const std::vector<double> s0 = random_sig(512, 50);
  const std::vector<double> s1 = random_sig(512, 51);
  std::vector<double> mix(512);
  for (int i = 0; i < 512; ++i) mix[i] = s0[i] + s1[i];

  const EvalReport rep = evaluate({s1, s0}, {s0, s1}, mix, LossKind::SISDR_SE, kCfg, true);
  CHECK(rep.permutation == std::vector<int>{1, 0});
  CHECK(rep.si_sdr[0] == doctest::Approx(60.0));
  const std::string text = rep.to_text();
  CHECK(text.find("si_sdr") != std::string::npos);
  const std::string json = rep.to_json();
  CHECK(json.find("\"permutation\":[1,0]") != std::string::npos);

  // est = mixture: improvement is exactly zero.
  CHECK(si_sdri(mix, s0, mix) == doctest::Approx(0.0));
}
