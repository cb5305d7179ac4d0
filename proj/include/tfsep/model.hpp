#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfsep/stft.hpp"
#include "tfsep/weights.hpp"

namespace tfsep::model {

enum class UnfoldOrder { UnfoldLN, LNUnfold };
enum class InputSet { MixtureOnly, MixtureDnn1Filter };

struct ModelConfig {
  int D = 64;   // embedding dimension per T-F unit
  int B = 6;    // block count
  int I = 4;    // unfold kernel
  int J = 1;    // unfold stride
  int H = 256;  // BLSTM hidden units per direction
  int L = 4;    // attention heads
  int E = 4;    // attention key/query channels
  int C = 2;    // output sources
  int P = 1;    // input microphones
  int F = 129;  // frequency bins
  UnfoldOrder unfold_order = UnfoldOrder::LNUnfold;
  InputSet inputs = InputSet::MixtureOnly;

  void validate() const;
  int value_channels() const { return D / L; }
  int num_features() const { return inputs == InputSet::MixtureOnly ? 1 : 3; }
};

// Dense row-major [d0][d1][d2] real tensor (embeddings are D x T x F).
struct Tensor3 {
  std::size_t d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c) : d0(a), d1(b), d2(c), v(a * b * c, 0.0) {}

  double& at(std::size_t i, std::size_t j, std::size_t k) { return v[(i * d1 + j) * d2 + k]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return v[(i * d1 + j) * d2 + k]; }
};

// Full list of learnable tensors for a config, in manifest order.
std::vector<TensorSpec> required_tensors(const ModelConfig& cfg);

// Sum of tensor element counts over required_tensors.
std::int64_t count_params(const ModelConfig& cfg);

// Analytic multiply-accumulate estimate for a T-frame input (see the
// per-module formulas in model.cpp; normalizations, activations and softmax
// are not counted).
std::int64_t estimate_macs(const ModelConfig& cfg, int frames);

// RI-stacked feature embedding: one Conv2D(3x3, pad 1) + gLN per feature,
// summed into a D x T x F tensor.
Tensor3 embed_inputs(const std::vector<Spectrogram>& features, const ModelConfig& cfg,
                     const WeightStore& w);

// Per-frame sequence module over frequency: unfold/LN (configured order),
// BLSTM, Deconv1D back to D channels, residual add.
Tensor3 intra_frame_module(const Tensor3& r, const ModelConfig& cfg, const WeightStore& w,
                           const std::string& prefix);

// Same structure over time, one weight set shared across frequencies.
Tensor3 subband_module(const Tensor3& u, const ModelConfig& cfg, const WeightStore& w,
                       const std::string& prefix);

// Multi-head frame-level self-attention with per-head pointwise Conv2D +
// PReLU + cfLN stacks, softmax(QK^T/sqrt(F*E))V, concat, output projection,
// residual add.
Tensor3 attention_module(const Tensor3& z, const ModelConfig& cfg, const WeightStore& w,
                         const std::string& prefix);

// Embed -> B x (intra, sub-band, attention) -> Deconv2D head; output has C
// complex channels (source-major RI pairing).
Spectrogram forward(const std::vector<Spectrogram>& features, const ModelConfig& cfg,
                    const WeightStore& w);

// Unfold geometry: padded length and step count along an axis of extent n.
int unfold_steps(int n, int kernel, int stride);
int unfold_padded(int n, int kernel, int stride);

}  // namespace tfsep::model
