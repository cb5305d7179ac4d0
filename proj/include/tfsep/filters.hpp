#pragma once

#include <vector>

#include "tfsep/linalg.hpp"
#include "tfsep/stft.hpp"

namespace tfsep::filters {

using linalg::CVector;

enum class FilterKind { MFWF, ConvBF, WPE };

struct FilterSpec {
  FilterKind kind = FilterKind::MFWF;
  int delta_l = 0;  // past taps
  int delta_r = 0;  // future taps (MFWF only)
  int delta_d = 3;  // prediction delay (ConvBF/WPE)
  double epsilon = 1e-5;
  double loading = linalg::kDefaultLoading;

  void validate() const;
  // Filter length per (source, frequency).
  int taps(int mics) const;
};

// Per (source, frequency) filters; outer index c, inner f.
struct FilterBank {
  int sources = 0;
  int freqs = 0;
  std::vector<CVector> w;  // [c * freqs + f]

  FilterBank() = default;
  FilterBank(int c, int f) : sources(c), freqs(f), w(static_cast<std::size_t>(c) * f) {}
  CVector& at(int c, int f) { return w[static_cast<std::size_t>(c) * freqs + f]; }
  const CVector& at(int c, int f) const { return w[static_cast<std::size_t>(c) * freqs + f]; }
};

struct FilterResult {
  FilterBank bank;
  Spectrogram output;  // C channels
};

// [Y(t-dl,f)^T, ..., Y(t,f)^T, ..., Y(t+dr,f)^T]^T; out-of-range frames are
// zero-filled.
CVector stack_frames(const Spectrogram& y, int t, int f, int delta_l, int delta_r);

// Past-tap stack with prediction delay: [Y(t-dd-dl+1)^T, ..., Y(t-dd)^T, Y(t)^T]^T.
CVector stack_frames_delayed(const Spectrogram& y, int t, int f, int delta_l, int delta_d);

// Per-frequency least-squares projection of the stacked mixture onto the
// stage-1 estimate; all-zero frequencies yield a zero filter and output.
FilterResult mfwf(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec);

// max(eps * max|S|^2, |S(t,f)|^2) power floor; s1 is one source channel.
std::vector<double> compute_lambda(const Spectrogram& s1, int channel, double epsilon);

// Magnitude-ratio mask, mask-weighted spatial covariance, and the principal
// eigenvector normalized at the reference mic; one steering vector per
// frequency for source c.
std::vector<CVector> compute_mask_and_rtf(const Spectrogram& y, const Spectrogram& s1, int source,
                                          int ref_mic);

// lambda-weighted minimum-power filter over delayed stacks under the
// distortionless constraint w_0^H d = 1, solved in closed form as
// R^-1 dt / (dt^H R^-1 dt) with dt embedding d in the current-frame block.
FilterResult convbf(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec,
                    int ref_mic);

// Per-frequency 1/lambda-weighted linear prediction of the current frame
// from delta_l delayed frames; output is mixture minus prediction.
FilterResult wpe(const Spectrogram& y_ref, const Spectrogram& s1, const FilterSpec& spec);

// Dispatch on spec.kind (WPE uses channel ref_mic of y).
FilterResult apply_filter(const Spectrogram& y, const Spectrogram& s1, const FilterSpec& spec,
                          int ref_mic);

}  // namespace tfsep::filters
