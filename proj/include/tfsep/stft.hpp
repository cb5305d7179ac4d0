#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace tfsep {

using cd = std::complex<double>;

enum class WindowKind { SqrtHann };

struct StftConfig {
  int sample_rate = 8000;
  int win_len = 256;   // samples
  int hop_len = 64;    // samples
  int dft_size = 256;  // even, >= win_len
  WindowKind window = WindowKind::SqrtHann;

  int freq_bins() const { return dft_size / 2 + 1; }

  // 32 ms window / 8 ms hop / DFT size = window length.
  static StftConfig for_sample_rate(int sr, double win_ms = 32.0, double hop_ms = 8.0);

  void validate() const;
  bool operator==(const StftConfig&) const = default;
};

struct Waveform {
  int channels = 0;
  std::int64_t samples = 0;
  int sample_rate = 0;
  std::vector<double> data;  // [channel][sample]

  Waveform() = default;
  Waveform(int ch, std::int64_t n, int sr)
      : channels(ch), samples(n), sample_rate(sr), data(static_cast<std::size_t>(ch) * n, 0.0) {}

  double& at(int ch, std::int64_t n) { return data[static_cast<std::size_t>(ch) * samples + n]; }
  double at(int ch, std::int64_t n) const {
    return data[static_cast<std::size_t>(ch) * samples + n];
  }
  std::vector<double> channel(int ch) const;
  Waveform mono(int ch) const;
};

struct Spectrogram {
  int channels = 0;
  int frames = 0;  // T
  int freqs = 0;   // F
  std::vector<cd> data;  // [channel][t][f]
  StftConfig config;

  Spectrogram() = default;
  Spectrogram(int ch, int t, int f, const StftConfig& cfg)
      : channels(ch),
        frames(t),
        freqs(f),
        data(static_cast<std::size_t>(ch) * t * f, cd{}),
        config(cfg) {}

  cd& at(int ch, int t, int f) {
    return data[(static_cast<std::size_t>(ch) * frames + t) * freqs + f];
  }
  cd at(int ch, int t, int f) const {
    return data[(static_cast<std::size_t>(ch) * frames + t) * freqs + f];
  }
  Spectrogram channel(int ch) const;
};

// Frame count for an N-sample signal: frames are hop-spaced over the signal
// left-padded with (win - hop) zeros and right-padded to a whole frame, so
// T = 1 + ceil(max(0, N - hop) / hop).
int num_frames(std::int64_t samples, const StftConfig& cfg);

// One-sided STFT with sqrt-Hann analysis window.  Frame t covers padded
// samples [t*hop, t*hop + win); the windowed frame is zero-extended to
// dft_size on the right before the DFT.
Spectrogram stft(const Waveform& x, const StftConfig& cfg);

// Overlap-add synthesis with the sqrt-Hann synthesis window and exact
// division by the accumulated squared-window envelope.  DC/Nyquist bins must
// be real within 1e-6 (imaginary parts are zeroed).  Output is cut/padded to
// out_len samples.
Waveform istft(const Spectrogram& X, std::int64_t out_len);

std::vector<double> make_window(const StftConfig& cfg);

// Radix-2 complex FFT for power-of-two n; plain O(n^2) DFT otherwise
// (desk-scale configs are always power-of-two).
void fft_inplace(std::vector<cd>& buf, bool inverse);
std::vector<cd> rfft(const std::vector<double>& x, int n);
std::vector<double> irfft(const std::vector<cd>& half, int n);

}  // namespace tfsep
