#include <cmath>

#include "doctest.h"
#include "tfsep/rng.hpp"
#include "tfsep/stft.hpp"
#include "tfsep/wav_io.hpp"

using namespace tfsep;

namespace {

Waveform random_wave(int channels, std::int64_t n, int sr, std::uint64_t seed) {
  Waveform w(channels, n, sr);
  Rng rng(seed);
  for (double& v : w.data) v = rng.gaussian();
  return w;
}

double max_abs_diff(const Waveform& a, const Waveform& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("paper window configurations") {
  const StftConfig c8 = StftConfig::for_sample_rate(8000);
  CHECK(c8.win_len == 256);
  CHECK(c8.hop_len == 64);
  CHECK(c8.dft_size == 256);
  CHECK(c8.freq_bins() == 129);

  const StftConfig c16 = StftConfig::for_sample_rate(16000);
  CHECK(c16.win_len == 512);
  CHECK(c16.freq_bins() == 257);
}

TEST_CASE("all-zero waveform maps to an all-zero spectrogram") {
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  Waveform x(1, 8000, 8000);
  const Spectrogram s = stft(x, cfg);
  for (const cd& v : s.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("round trip at both sample rates") {
  for (int sr : {8000, 16000}) {
    const StftConfig cfg = StftConfig::for_sample_rate(sr);
    const Waveform x = random_wave(2, sr, sr, 77 + sr);
    const Spectrogram s = stft(x, cfg);
    const Waveform y = istft(s, x.samples);
    CHECK(max_abs_diff(x, y) < 1e-6);
  }
}

TEST_CASE("impulse position is preserved") {
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  Waveform x(1, 4000, 8000);
  x.at(0, 1234) = 1.0;
  const Waveform y = istft(stft(x, cfg), x.samples);
  CHECK(std::abs(y.at(0, 1234) - 1.0) < 1e-6);
  double rest = 0.0;
  for (std::int64_t i = 0; i < x.samples; ++i)
    if (i != 1234) rest = std::max(rest, std::abs(y.at(0, i)));
  CHECK(rest < 1e-6);
}

TEST_CASE("linearity") {
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  const Waveform a = random_wave(1, 2000, 8000, 5);
  const Waveform b = random_wave(1, 2000, 8000, 6);
  Waveform combo(1, 2000, 8000);
  for (std::size_t i = 0; i < combo.data.size(); ++i)
    combo.data[i] = 0.7 * a.data[i] - 1.3 * b.data[i];
  const Spectrogram sa = stft(a, cfg), sb = stft(b, cfg), sc = stft(combo, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < sc.data.size(); ++i)
    worst = std::max(worst, std::abs(sc.data[i] - (0.7 * sa.data[i] - 1.3 * sb.data[i])));
  CHECK(worst < 1e-10);
}

TEST_CASE("parseval with the analysis window envelope") {
  // Energy identity: sum_t |frame_t|^2 = (1/dft) sum_{t,full f} |X|^2, and
  // windowed frame energy equals sum_n x[n]^2 * env[n] with env the
  // accumulated squared analysis window.
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  const Waveform x = random_wave(1, 8000, 8000, 9);
  const Spectrogram s = stft(x, cfg);

  double lhs = 0.0;  // window-compensated spectral energy
  for (int t = 0; t < s.frames; ++t)
    for (int f = 0; f < s.freqs; ++f) {
      const double e = std::norm(s.at(0, t, f));
      const bool edge = (f == 0 || f == s.freqs - 1);
      lhs += (edge ? 1.0 : 2.0) * e;
    }
  lhs /= cfg.dft_size;

  // Direct time-domain energy with the envelope of the padded framing.
  const std::vector<double> win = make_window(cfg);
  const std::int64_t left = cfg.win_len - cfg.hop_len;
  double rhs = 0.0;
  for (std::int64_t n = 0; n < x.samples; ++n) {
    double env = 0.0;
    for (int t = 0; t < s.frames; ++t) {
      const std::int64_t k = n + left - static_cast<std::int64_t>(t) * cfg.hop_len;
      if (k >= 0 && k < cfg.win_len) env += win[k] * win[k];
    }
    rhs += x.at(0, n) * x.at(0, n) * env;
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("frame count formula") {
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  // T = 1 + ceil(max(0, N - hop) / hop)
  CHECK(num_frames(64, cfg) == 1);
  CHECK(num_frames(65, cfg) == 2);
  CHECK(num_frames(32000, cfg) == 500);
  const Waveform x = random_wave(1, 32000, 8000, 3);
  CHECK(stft(x, cfg).frames == 500);
}

TEST_CASE("stft error paths") {
  StftConfig cfg = StftConfig::for_sample_rate(8000);
  Waveform empty;
  CHECK_THROWS(stft(empty, cfg));
  cfg.win_len = 512;  // longer than dft_size
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("istft rejects complex DC bins but zeroes tiny imaginary parts") {
  const StftConfig cfg = StftConfig::for_sample_rate(8000);
  const Waveform x = random_wave(1, 1000, 8000, 13);
  Spectrogram s = stft(x, cfg);
  Spectrogram tweaked = s;
  for (int t = 0; t < tweaked.frames; ++t) tweaked.at(0, t, 0) += cd(0.0, 5e-7);
  const Waveform y = istft(tweaked, x.samples);  // tolerated and zeroed
  CHECK(max_abs_diff(x, y) < 1e-4);
  tweaked.at(0, 0, 0) += cd(0.0, 1.0);
  CHECK_THROWS(istft(tweaked, x.samples));
}

TEST_CASE("wav io round trip") {
  const Waveform x = random_wave(3, 500, 16000, 17);
  write_wav("wavio_test_f32.wav", x, WavFormat::Float32);
  const Waveform y = read_wav("wavio_test_f32.wav");
  CHECK(y.channels == 3);
  CHECK(y.samples == 500);
  CHECK(y.sample_rate == 16000);
  CHECK(max_abs_diff(x, y) < 1e-6);

  Waveform small = x;
  for (double& v : small.data) v *= 0.1;  // keep inside [-1, 1] for PCM
  write_wav("wavio_test_p16.wav", small, WavFormat::Pcm16);
  const Waveform z = read_wav("wavio_test_p16.wav");
  CHECK(max_abs_diff(small, z) < 1.0 / 32000.0);
}
