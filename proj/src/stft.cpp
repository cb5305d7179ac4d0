#include "tfsep/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tfsep {

StftConfig StftConfig::for_sample_rate(int sr, double win_ms, double hop_ms) {
  StftConfig cfg;
  cfg.sample_rate = sr;
  cfg.win_len = static_cast<int>(std::lround(win_ms * sr / 1000.0));
  cfg.hop_len = static_cast<int>(std::lround(hop_ms * sr / 1000.0));
  cfg.dft_size = cfg.win_len;
  cfg.validate();
  return cfg;
}

void StftConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("stft: sample_rate must be positive");
  if (hop_len <= 0 || win_len <= 0) throw std::invalid_argument("stft: window/hop must be positive");
  if (hop_len > win_len) throw std::invalid_argument("stft: hop longer than window");
  if (win_len > dft_size) throw std::invalid_argument("stft: window longer than dft_size");
  if (dft_size % 2 != 0) throw std::invalid_argument("stft: dft_size must be even");
}

std::vector<double> Waveform::channel(int ch) const {
  return {data.begin() + static_cast<std::size_t>(ch) * samples,
          data.begin() + static_cast<std::size_t>(ch + 1) * samples};
}

Waveform Waveform::mono(int ch) const {
  Waveform out(1, samples, sample_rate);
  std::copy_n(data.begin() + static_cast<std::size_t>(ch) * samples, samples, out.data.begin());
  return out;
}

Spectrogram Spectrogram::channel(int ch) const {
  Spectrogram out(1, frames, freqs, config);
  std::copy_n(data.begin() + static_cast<std::size_t>(ch) * frames * freqs,
              static_cast<std::size_t>(frames) * freqs, out.data.begin());
  return out;
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.win_len);
  for (int k = 0; k < cfg.win_len; ++k) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / cfg.win_len);
    w[k] = std::sqrt(hann);
  }
  return w;
}

void fft_inplace(std::vector<cd>& buf, bool inverse) {
  const std::size_t n = buf.size();
  if (n == 0) return;
  if ((n & (n - 1)) == 0) {
    // Iterative radix-2.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(buf[i], buf[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
      const cd wlen(std::cos(ang), std::sin(ang));
      for (std::size_t i = 0; i < n; i += len) {
        cd w(1.0);
        for (std::size_t k = 0; k < len / 2; ++k) {
          const cd u = buf[i + k];
          const cd v = buf[i + k + len / 2] * w;
          buf[i + k] = u + v;
          buf[i + k + len / 2] = u - v;
          w *= wlen;
        }
      }
    }
  } else {
    std::vector<cd> out(n, cd{});
    const double sign = inverse ? 2.0 : -2.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = sign * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
        out[k] += buf[t] * cd(std::cos(ang), std::sin(ang));
      }
    }
    buf = std::move(out);
  }
  if (inverse)
    for (cd& v : buf) v /= static_cast<double>(n);
}

std::vector<cd> rfft(const std::vector<double>& x, int n) {
  std::vector<cd> buf(n, cd{});
  const std::size_t m = std::min<std::size_t>(x.size(), n);
  for (std::size_t i = 0; i < m; ++i) buf[i] = x[i];
  fft_inplace(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

std::vector<double> irfft(const std::vector<cd>& half, int n) {
  std::vector<cd> full(n);
  for (int f = 0; f <= n / 2; ++f) full[f] = half[f];
  for (int f = n / 2 + 1; f < n; ++f) full[f] = std::conj(half[n - f]);
  fft_inplace(full, true);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = full[i].real();
  return out;
}

int num_frames(std::int64_t samples, const StftConfig& cfg) {
  if (samples <= 0) throw std::invalid_argument("stft: empty signal");
  const std::int64_t hop = cfg.hop_len;
  const std::int64_t over = std::max<std::int64_t>(0, samples - hop);
  return static_cast<int>(1 + (over + hop - 1) / hop);
}

Spectrogram stft(const Waveform& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.samples <= 0 || x.channels <= 0) throw std::invalid_argument("stft: empty signal");
  const int T = num_frames(x.samples, cfg);
  const int F = cfg.freq_bins();
  const std::vector<double> win = make_window(cfg);
  const std::int64_t left = cfg.win_len - cfg.hop_len;

  Spectrogram out(x.channels, T, F, cfg);
  std::vector<double> frame(cfg.win_len);
  for (int ch = 0; ch < x.channels; ++ch) {
    const double* sig = &x.data[static_cast<std::size_t>(ch) * x.samples];
    for (int t = 0; t < T; ++t) {
      const std::int64_t start = static_cast<std::int64_t>(t) * cfg.hop_len - left;
      for (int k = 0; k < cfg.win_len; ++k) {
        const std::int64_t idx = start + k;
        frame[k] = (idx >= 0 && idx < x.samples) ? sig[idx] * win[k] : 0.0;
      }
      const std::vector<cd> spec = rfft(frame, cfg.dft_size);
      std::copy(spec.begin(), spec.end(),
                out.data.begin() + (static_cast<std::size_t>(ch) * T + t) * F);
    }
  }
  return out;
}

Waveform istft(const Spectrogram& X, std::int64_t out_len) {
  const StftConfig& cfg = X.config;
  cfg.validate();
  if (X.freqs != cfg.freq_bins()) throw std::invalid_argument("istft: freq count disagrees with config");
  if (out_len <= 0) throw std::invalid_argument("istft: out_len must be positive");
  const int T = X.frames;
  const int F = X.freqs;
  const std::vector<double> win = make_window(cfg);
  const std::int64_t left = cfg.win_len - cfg.hop_len;
  const std::int64_t buf_len = static_cast<std::int64_t>(T - 1) * cfg.hop_len + cfg.win_len;

  Waveform out(X.channels, out_len, cfg.sample_rate);
  std::vector<double> acc(buf_len), env(buf_len);
  std::vector<cd> half(F);
  for (int ch = 0; ch < X.channels; ++ch) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(env.begin(), env.end(), 0.0);
    for (int t = 0; t < T; ++t) {
      for (int f = 0; f < F; ++f) half[f] = X.at(ch, t, f);
      for (int f : {0, F - 1}) {
        if (std::abs(half[f].imag()) > 1e-6)
          throw std::invalid_argument("istft: DC/Nyquist bin has non-real value");
        half[f] = half[f].real();
      }
      const std::vector<double> frame = irfft(half, cfg.dft_size);
      const std::int64_t start = static_cast<std::int64_t>(t) * cfg.hop_len;
      for (int k = 0; k < cfg.win_len; ++k) {
        acc[start + k] += frame[k] * win[k];
        env[start + k] += win[k] * win[k];
      }
    }
    for (std::int64_t n = 0; n < out_len; ++n) {
      const std::int64_t idx = n + left;
      if (idx < buf_len && env[idx] > 1e-10) out.at(ch, n) = acc[idx] / env[idx];
    }
  }
  return out;
}

}  // namespace tfsep
