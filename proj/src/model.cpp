#include "tfsep/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfsep::model {

namespace {

constexpr double kLnEps = 1e-5;

std::vector<double> widen(const std::vector<float>& v) {
  return {v.begin(), v.end()};
}

// Conv2D 3x3, stride 1, zero pad 1: out[o,t,f] = b[o] + sum w[o,i,a,c] * in[i,t+a-1,f+c-1].
Tensor3 conv2d_3x3(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b,
                   int out_ch) {
  const int Cin = static_cast<int>(in.d0);
  const int T = static_cast<int>(in.d1);
  const int F = static_cast<int>(in.d2);
  Tensor3 out(out_ch, T, F);
  for (int o = 0; o < out_ch; ++o) {
    for (int t = 0; t < T; ++t) {
      for (int f = 0; f < F; ++f) {
        double s = b[o];
        for (int i = 0; i < Cin; ++i) {
          for (int a = 0; a < 3; ++a) {
            const int tt = t + a - 1;
            if (tt < 0 || tt >= T) continue;
            for (int c = 0; c < 3; ++c) {
              const int ff = f + c - 1;
              if (ff < 0 || ff >= F) continue;
              s += w[((o * Cin + i) * 3 + a) * 3 + c] * in.at(i, tt, ff);
            }
          }
        }
        out.at(o, t, f) = s;
      }
    }
  }
  return out;
}

// Transposed Conv2D 3x3, stride 1, pad 1 (weight layout [in, out, 3, 3]):
// out[o,t,f] = b[o] + sum w[i,o,a,c] * in[i,t+1-a,f+1-c].
Tensor3 deconv2d_3x3(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b,
                     int out_ch) {
  const int Cin = static_cast<int>(in.d0);
  const int T = static_cast<int>(in.d1);
  const int F = static_cast<int>(in.d2);
  Tensor3 out(out_ch, T, F);
  for (int o = 0; o < out_ch; ++o) {
    for (int t = 0; t < T; ++t) {
      for (int f = 0; f < F; ++f) {
        double s = b[o];
        for (int i = 0; i < Cin; ++i) {
          for (int a = 0; a < 3; ++a) {
            const int tt = t + 1 - a;
            if (tt < 0 || tt >= T) continue;
            for (int c = 0; c < 3; ++c) {
              const int ff = f + 1 - c;
              if (ff < 0 || ff >= F) continue;
              s += w[((i * out_ch + o) * 3 + a) * 3 + c] * in.at(i, tt, ff);
            }
          }
        }
        out.at(o, t, f) = s;
      }
    }
  }
  return out;
}

// Mean/variance over the whole tensor, per-channel affine.
void global_layer_norm(Tensor3& x, const std::vector<double>& gamma,
                       const std::vector<double>& beta) {
  double mean = 0.0;
  for (double v : x.v) mean += v;
  mean /= static_cast<double>(x.v.size());
  double var = 0.0;
  for (double v : x.v) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.v.size());
  const double inv = 1.0 / std::sqrt(var + kLnEps);
  for (std::size_t d = 0; d < x.d0; ++d) {
    const double g = gamma[d], bb = beta[d];
    double* row = &x.v[d * x.d1 * x.d2];
    for (std::size_t i = 0; i < x.d1 * x.d2; ++i) row[i] = g * (row[i] - mean) * inv + bb;
  }
}

// Normalize over the channel axis at each (t, f), per-channel affine.
void layer_norm_channels(Tensor3& x, const std::vector<double>& gamma,
                         const std::vector<double>& beta) {
  const std::size_t D = x.d0, TF = x.d1 * x.d2;
  for (std::size_t i = 0; i < TF; ++i) {
    double mean = 0.0;
    for (std::size_t d = 0; d < D; ++d) mean += x.v[d * TF + i];
    mean /= static_cast<double>(D);
    double var = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double c = x.v[d * TF + i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(D);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    for (std::size_t d = 0; d < D; ++d) {
      double& v = x.v[d * TF + i];
      v = gamma[d] * (v - mean) * inv + beta[d];
    }
  }
}

// Normalize over (channel, freq) within each frame; affine is per (channel, freq).
void cf_layer_norm(Tensor3& x, const std::vector<double>& gamma, const std::vector<double>& beta) {
  const std::size_t D = x.d0, T = x.d1, F = x.d2;
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t f = 0; f < F; ++f) mean += x.at(d, t, f);
    mean /= static_cast<double>(D * F);
    double var = 0.0;
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t f = 0; f < F; ++f) {
        const double c = x.at(d, t, f) - mean;
        var += c * c;
      }
    var /= static_cast<double>(D * F);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t f = 0; f < F; ++f) {
        double& v = x.at(d, t, f);
        v = gamma[d * F + f] * (v - mean) * inv + beta[d * F + f];
      }
  }
}

void prelu(Tensor3& x, const std::vector<double>& alpha) {
  for (std::size_t d = 0; d < x.d0; ++d) {
    const double a = alpha[d];
    double* row = &x.v[d * x.d1 * x.d2];
    for (std::size_t i = 0; i < x.d1 * x.d2; ++i)
      if (row[i] < 0.0) row[i] *= a;
  }
}

Tensor3 conv1x1(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b,
                int out_ch) {
  const std::size_t Cin = in.d0, TF = in.d1 * in.d2;
  Tensor3 out(out_ch, in.d1, in.d2);
  for (int o = 0; o < out_ch; ++o) {
    double* dst = &out.v[static_cast<std::size_t>(o) * TF];
    std::fill_n(dst, TF, b[o]);
    for (std::size_t i = 0; i < Cin; ++i) {
      const double wi = w[o * Cin + i];
      const double* src = &in.v[i * TF];
      for (std::size_t k = 0; k < TF; ++k) dst[k] += wi * src[k];
    }
  }
  return out;
}

struct BlstmWeights {
  std::vector<double> fw_ih, fw_hh, fw_b, bw_ih, bw_hh, bw_b;
  int input = 0, hidden = 0;
};

BlstmWeights load_blstm(const WeightStore& w, const std::string& prefix, int input, int hidden) {
  BlstmWeights b;
  b.input = input;
  b.hidden = hidden;
  b.fw_ih = widen(w.data(prefix + ".fw.w_ih"));
  b.fw_hh = widen(w.data(prefix + ".fw.w_hh"));
  b.fw_b = widen(w.data(prefix + ".fw.bias"));
  b.bw_ih = widen(w.data(prefix + ".bw.w_ih"));
  b.bw_hh = widen(w.data(prefix + ".bw.w_hh"));
  b.bw_b = widen(w.data(prefix + ".bw.bias"));
  return b;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One direction over `steps` positions; gates ordered i, f, g, o; zero
// initial state; single bias per direction.
void lstm_direction(const std::vector<double>& x, int steps, int input, int hidden,
                    const std::vector<double>& w_ih, const std::vector<double>& w_hh,
                    const std::vector<double>& bias, bool reverse, std::vector<double>& out,
                    int out_stride, int out_offset) {
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0), gates(4 * hidden);
  for (int step = 0; step < steps; ++step) {
    const int s = reverse ? steps - 1 - step : step;
    const double* xs = &x[static_cast<std::size_t>(s) * input];
    for (int g = 0; g < 4 * hidden; ++g) {
      double acc = bias[g];
      const double* wi = &w_ih[static_cast<std::size_t>(g) * input];
      for (int k = 0; k < input; ++k) acc += wi[k] * xs[k];
      const double* wh = &w_hh[static_cast<std::size_t>(g) * hidden];
      for (int k = 0; k < hidden; ++k) acc += wh[k] * h[k];
      gates[g] = acc;
    }
    for (int k = 0; k < hidden; ++k) {
      const double ig = sigmoid(gates[k]);
      const double fg = sigmoid(gates[hidden + k]);
      const double gg = std::tanh(gates[2 * hidden + k]);
      const double og = sigmoid(gates[3 * hidden + k]);
      c[k] = fg * c[k] + ig * gg;
      h[k] = og * std::tanh(c[k]);
    }
    double* dst = &out[static_cast<std::size_t>(s) * out_stride + out_offset];
    std::copy(h.begin(), h.end(), dst);
  }
}

// x: steps x input (row-major); returns steps x 2*hidden (fw then bw halves).
std::vector<double> blstm(const std::vector<double>& x, int steps, const BlstmWeights& w) {
  std::vector<double> out(static_cast<std::size_t>(steps) * 2 * w.hidden, 0.0);
  lstm_direction(x, steps, w.input, w.hidden, w.fw_ih, w.fw_hh, w.fw_b, false, out, 2 * w.hidden, 0);
  lstm_direction(x, steps, w.input, w.hidden, w.bw_ih, w.bw_hh, w.bw_b, true, out, 2 * w.hidden,
                 w.hidden);
  return out;
}

// Shared core of the intra-frame and sub-band modules: one sequence of
// extent `n` with D-channel input laid out as seq[pos * D + d].
struct SeqModuleWeights {
  std::vector<double> norm_gamma, norm_beta;
  BlstmWeights rnn;
  std::vector<double> proj_w, proj_b;  // Deconv1D [2H, D, I], [D]
};

SeqModuleWeights load_seq_module(const WeightStore& w, const std::string& prefix,
                                 const ModelConfig& cfg) {
  SeqModuleWeights m;
  m.norm_gamma = widen(w.data(prefix + ".norm.gamma"));
  m.norm_beta = widen(w.data(prefix + ".norm.beta"));
  m.rnn = load_blstm(w, prefix, cfg.I * cfg.D, cfg.H);
  m.proj_w = widen(w.data(prefix + ".proj.weight"));
  m.proj_b = widen(w.data(prefix + ".proj.bias"));
  return m;
}

// seq: n x D (row-major, position-major).  Returns the module output of the
// same extent (before the residual add, cropped from the padded length).
std::vector<double> run_sequence(const std::vector<double>& seq, int n, const ModelConfig& cfg,
                                 const SeqModuleWeights& w) {
  const int D = cfg.D, I = cfg.I, J = cfg.J, H = cfg.H;
  const int steps = unfold_steps(n, I, J);
  const int padded = unfold_padded(n, I, J);

  // Unfold with optional pre/post LN.  Feature index within a step is
  // d * I + i (channel-major), matching the documented layout.
  std::vector<double> unf(static_cast<std::size_t>(steps) * I * D, 0.0);
  if (cfg.unfold_order == UnfoldOrder::LNUnfold) {
    // LN over channels first, then unfold the normalized sequence.
    std::vector<double> normed(seq);
    for (int p = 0; p < n; ++p) {
      double* col = &normed[static_cast<std::size_t>(p) * D];
      double mean = 0.0;
      for (int d = 0; d < D; ++d) mean += col[d];
      mean /= D;
      double var = 0.0;
      for (int d = 0; d < D; ++d) var += (col[d] - mean) * (col[d] - mean);
      var /= D;
      const double inv = 1.0 / std::sqrt(var + kLnEps);
      for (int d = 0; d < D; ++d) col[d] = w.norm_gamma[d] * (col[d] - mean) * inv + w.norm_beta[d];
    }
    for (int s = 0; s < steps; ++s)
      for (int i = 0; i < I; ++i) {
        const int p = s * J + i;
        if (p >= n) continue;
        for (int d = 0; d < D; ++d)
          unf[(static_cast<std::size_t>(s) * I * D) + d * I + i] =
              normed[static_cast<std::size_t>(p) * D + d];
      }
  } else {
    for (int s = 0; s < steps; ++s)
      for (int i = 0; i < I; ++i) {
        const int p = s * J + i;
        if (p >= n) continue;
        for (int d = 0; d < D; ++d)
          unf[(static_cast<std::size_t>(s) * I * D) + d * I + i] =
              seq[static_cast<std::size_t>(p) * D + d];
      }
    // LN over the unfolded channel axis (I*D) at each step.
    const int ID = I * D;
    for (int s = 0; s < steps; ++s) {
      double* col = &unf[static_cast<std::size_t>(s) * ID];
      double mean = 0.0;
      for (int k = 0; k < ID; ++k) mean += col[k];
      mean /= ID;
      double var = 0.0;
      for (int k = 0; k < ID; ++k) var += (col[k] - mean) * (col[k] - mean);
      var /= ID;
      const double inv = 1.0 / std::sqrt(var + kLnEps);
      for (int k = 0; k < ID; ++k) col[k] = w.norm_gamma[k] * (col[k] - mean) * inv + w.norm_beta[k];
    }
  }

  const std::vector<double> hidden = blstm(unf, steps, w.rnn);

  // Deconv1D (2H -> D, kernel I, stride J) over the step axis, then crop
  // the padded tail.
  std::vector<double> full(static_cast<std::size_t>(padded) * D, 0.0);
  for (int s = 0; s < steps; ++s) {
    const double* hs = &hidden[static_cast<std::size_t>(s) * 2 * H];
    for (int i = 0; i < I; ++i) {
      const int p = s * J + i;
      double* dst = &full[static_cast<std::size_t>(p) * D];
      for (int h = 0; h < 2 * H; ++h) {
        const double hv = hs[h];
        if (hv == 0.0) continue;
        const double* wrow = &w.proj_w[(static_cast<std::size_t>(h) * D) * I + i];
        for (int d = 0; d < D; ++d) dst[d] += hv * wrow[static_cast<std::size_t>(d) * I];
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n) * D);
  for (int p = 0; p < n; ++p)
    for (int d = 0; d < D; ++d)
      out[static_cast<std::size_t>(p) * D + d] =
          full[static_cast<std::size_t>(p) * D + d] + w.proj_b[d];
  return out;
}

void check_weight_shapes(const WeightStore& w, const ModelConfig& cfg) {
  w.validate_against(required_tensors(cfg));
}

}  // namespace

void ModelConfig::validate() const {
  if (D <= 0 || B <= 0 || I <= 0 || J <= 0 || H <= 0 || L <= 0 || E <= 0 || C <= 0 || P <= 0 ||
      F <= 0)
    throw std::invalid_argument("model: all hyper-parameters must be positive");
  if (D % L != 0) throw std::invalid_argument("model: D must be divisible by L");
  if (I < J) throw std::invalid_argument("model: kernel I must be >= stride J");
}

int unfold_steps(int n, int kernel, int stride) {
  return 1 + (std::max(0, n - kernel) + stride - 1) / stride;
}

int unfold_padded(int n, int kernel, int stride) {
  return (unfold_steps(n, kernel, stride) - 1) * stride + kernel;
}

std::vector<TensorSpec> required_tensors(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<TensorSpec> out;
  const int Dv = cfg.value_channels();
  const int ln_dim = cfg.unfold_order == UnfoldOrder::LNUnfold ? cfg.D : cfg.I * cfg.D;

  const std::vector<int> feat_ch = cfg.inputs == InputSet::MixtureOnly
                                       ? std::vector<int>{2 * cfg.P}
                                       : std::vector<int>{2 * cfg.P, 2 * cfg.C, 2 * cfg.C};
  for (std::size_t i = 0; i < feat_ch.size(); ++i) {
    const std::string p = "embed" + std::to_string(i);
    out.push_back({p + ".conv.weight", {cfg.D, feat_ch[i], 3, 3}});
    out.push_back({p + ".conv.bias", {cfg.D}});
    out.push_back({p + ".norm.gamma", {cfg.D}});
    out.push_back({p + ".norm.beta", {cfg.D}});
  }

  for (int b = 0; b < cfg.B; ++b) {
    const std::string bp = "block" + std::to_string(b);
    for (const char* mod : {".intra", ".sub"}) {
      const std::string mp = bp + mod;
      out.push_back({mp + ".norm.gamma", {ln_dim}});
      out.push_back({mp + ".norm.beta", {ln_dim}});
      for (const char* dir : {".fw", ".bw"}) {
        out.push_back({mp + dir + ".w_ih", {4 * cfg.H, cfg.I * cfg.D}});
        out.push_back({mp + dir + ".w_hh", {4 * cfg.H, cfg.H}});
        out.push_back({mp + dir + ".bias", {4 * cfg.H}});
      }
      out.push_back({mp + ".proj.weight", {2 * cfg.H, cfg.D, cfg.I}});
      out.push_back({mp + ".proj.bias", {cfg.D}});
    }
    for (int l = 0; l < cfg.L; ++l) {
      for (const auto& [tag, ch] :
           {std::pair<const char*, int>{"q", cfg.E}, {"k", cfg.E}, {"v", Dv}}) {
        const std::string hp = bp + ".attn." + tag + std::to_string(l);
        out.push_back({hp + ".conv.weight", {ch, cfg.D}});
        out.push_back({hp + ".conv.bias", {ch}});
        out.push_back({hp + ".prelu", {ch}});
        out.push_back({hp + ".norm.gamma", {ch, cfg.F}});
        out.push_back({hp + ".norm.beta", {ch, cfg.F}});
      }
    }
    const std::string op = bp + ".attn.out";
    out.push_back({op + ".conv.weight", {cfg.D, cfg.D}});
    out.push_back({op + ".conv.bias", {cfg.D}});
    out.push_back({op + ".prelu", {cfg.D}});
    out.push_back({op + ".norm.gamma", {cfg.D, cfg.F}});
    out.push_back({op + ".norm.beta", {cfg.D, cfg.F}});
  }

  out.push_back({"head.deconv.weight", {cfg.D, 2 * cfg.C, 3, 3}});
  out.push_back({"head.deconv.bias", {2 * cfg.C}});
  return out;
}

std::int64_t count_params(const ModelConfig& cfg) {
  std::int64_t n = 0;
  for (const TensorSpec& spec : required_tensors(cfg)) n += static_cast<std::int64_t>(spec.numel());
  return n;
}

std::int64_t estimate_macs(const ModelConfig& cfg, int frames) {
  cfg.validate();
  const std::int64_t T = frames, F = cfg.F, D = cfg.D, H = cfg.H, I = cfg.I, J = cfg.J, L = cfg.L,
                     E = cfg.E;
  const std::int64_t Dv = D / L;

  std::int64_t total = 0;
  // Embedding Conv2D(3x3) per feature: Cin*9 MACs per output element.
  const std::vector<int> feat_ch = cfg.inputs == InputSet::MixtureOnly
                                       ? std::vector<int>{2 * cfg.P}
                                       : std::vector<int>{2 * cfg.P, 2 * cfg.C, 2 * cfg.C};
  for (int ch : feat_ch) total += static_cast<std::int64_t>(ch) * 9 * D * T * F;

  // Per block, intra: T sequences of S_f steps; sub-band: F sequences of
  // S_t steps.  BLSTM: 4H*(ID+H) per step and direction.  Deconv1D as a
  // linear layer (2H -> I*D) + overlap-add: 2H*I*D per step.
  const std::int64_t Sf = unfold_steps(static_cast<int>(F), cfg.I, cfg.J);
  const std::int64_t St = unfold_steps(static_cast<int>(T), cfg.I, cfg.J);
  const std::int64_t lstm_step = 2 * 4 * H * (I * D + H);
  const std::int64_t proj_step = 2 * H * I * D;
  const std::int64_t intra = T * Sf * (lstm_step + proj_step);
  const std::int64_t sub = F * St * (lstm_step + proj_step);

  // Attention: per head, Q/K convs (E*D), V conv (Dv*D), QK^T (T^2*F*E),
  // AV (T^2*F*Dv); plus the D->D output projection.
  const std::int64_t attn =
      L * (2 * E * D * T * F + Dv * D * T * F + T * T * F * E + T * T * F * Dv) + D * D * T * F;

  total += cfg.B * (intra + sub + attn);
  // Output Deconv2D(3x3).
  total += static_cast<std::int64_t>(2 * cfg.C) * 9 * D * T * F;
  return total;
}

Tensor3 embed_inputs(const std::vector<Spectrogram>& features, const ModelConfig& cfg,
                     const WeightStore& w) {
  cfg.validate();
  if (features.size() != static_cast<std::size_t>(cfg.num_features()))
    throw std::invalid_argument("model: expected " + std::to_string(cfg.num_features()) +
                                " input features");
  const std::vector<int> feat_ch = cfg.inputs == InputSet::MixtureOnly
                                       ? std::vector<int>{cfg.P}
                                       : std::vector<int>{cfg.P, cfg.C, cfg.C};
  const int T = features.front().frames;
  const int F = features.front().freqs;
  if (F != cfg.F) throw std::invalid_argument("model: feature freq count disagrees with config");

  Tensor3 out(cfg.D, T, F);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Spectrogram& sp = features[i];
    if (sp.channels != feat_ch[i])
      throw std::invalid_argument("model: feature " + std::to_string(i) + " has " +
                                  std::to_string(sp.channels) + " channels, expected " +
                                  std::to_string(feat_ch[i]));
    if (sp.frames != T || sp.freqs != F)
      throw std::invalid_argument("model: feature shapes disagree");

    // RI stacking, channel-pairwise: [ch0.re, ch0.im, ch1.re, ...].
    Tensor3 ri(2 * sp.channels, T, F);
    for (int ch = 0; ch < sp.channels; ++ch)
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
          const cd v = sp.at(ch, t, f);
          ri.at(2 * ch, t, f) = v.real();
          ri.at(2 * ch + 1, t, f) = v.imag();
        }

    const std::string p = "embed" + std::to_string(i);
    Tensor3 emb = conv2d_3x3(ri, widen(w.data(p + ".conv.weight")),
                             widen(w.data(p + ".conv.bias")), cfg.D);
    global_layer_norm(emb, widen(w.data(p + ".norm.gamma")), widen(w.data(p + ".norm.beta")));
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += emb.v[k];
  }
  return out;
}

Tensor3 intra_frame_module(const Tensor3& r, const ModelConfig& cfg, const WeightStore& w,
                           const std::string& prefix) {
  const int D = cfg.D, T = static_cast<int>(r.d1), F = static_cast<int>(r.d2);
  const SeqModuleWeights mw = load_seq_module(w, prefix, cfg);

  Tensor3 out = r;
  std::vector<double> seq(static_cast<std::size_t>(F) * D);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f)
      for (int d = 0; d < D; ++d) seq[static_cast<std::size_t>(f) * D + d] = r.at(d, t, f);
    const std::vector<double> res = run_sequence(seq, F, cfg, mw);
    for (int f = 0; f < F; ++f)
      for (int d = 0; d < D; ++d) out.at(d, t, f) += res[static_cast<std::size_t>(f) * D + d];
  }
  return out;
}

Tensor3 subband_module(const Tensor3& u, const ModelConfig& cfg, const WeightStore& w,
                       const std::string& prefix) {
  const int D = cfg.D, T = static_cast<int>(u.d1), F = static_cast<int>(u.d2);
  const SeqModuleWeights mw = load_seq_module(w, prefix, cfg);

  Tensor3 out = u;
  std::vector<double> seq(static_cast<std::size_t>(T) * D);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) seq[static_cast<std::size_t>(t) * D + d] = u.at(d, t, f);
    const std::vector<double> res = run_sequence(seq, T, cfg, mw);
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) out.at(d, t, f) += res[static_cast<std::size_t>(t) * D + d];
  }
  return out;
}

Tensor3 attention_module(const Tensor3& z, const ModelConfig& cfg, const WeightStore& w,
                         const std::string& prefix) {
  const int D = cfg.D, T = static_cast<int>(z.d1), F = static_cast<int>(z.d2);
  const int E = cfg.E, Dv = cfg.value_channels(), L = cfg.L;
  if (F != cfg.F) throw std::invalid_argument("model: attention freq count disagrees with config");

  auto qkv = [&](const std::string& p, int ch) {
    Tensor3 x = conv1x1(z, widen(w.data(p + ".conv.weight")), widen(w.data(p + ".conv.bias")), ch);
    prelu(x, widen(w.data(p + ".prelu")));
    cf_layer_norm(x, widen(w.data(p + ".norm.gamma")), widen(w.data(p + ".norm.beta")));
    return x;
  };

  // Frame vectors flatten channel-major: index = c * F + f.
  Tensor3 heads(D, T, F);
  const double scale = 1.0 / std::sqrt(static_cast<double>(F) * E);
  std::vector<double> scores(static_cast<std::size_t>(T) * T);
  for (int l = 0; l < L; ++l) {
    const std::string hp = prefix + "." + std::to_string(l);
    const Tensor3 Q = qkv(prefix + ".q" + std::to_string(l), E);
    const Tensor3 K = qkv(prefix + ".k" + std::to_string(l), E);
    const Tensor3 V = qkv(prefix + ".v" + std::to_string(l), Dv);

    for (int t = 0; t < T; ++t) {
      for (int u = 0; u < T; ++u) {
        double s = 0.0;
        for (int e = 0; e < E; ++e)
          for (int f = 0; f < F; ++f) s += Q.at(e, t, f) * K.at(e, u, f);
        scores[static_cast<std::size_t>(t) * T + u] = s * scale;
      }
      // Row softmax with max subtraction.
      double* row = &scores[static_cast<std::size_t>(t) * T];
      double mx = row[0];
      for (int u = 1; u < T; ++u) mx = std::max(mx, row[u]);
      double sum = 0.0;
      for (int u = 0; u < T; ++u) {
        row[u] = std::exp(row[u] - mx);
        sum += row[u];
      }
      for (int u = 0; u < T; ++u) row[u] /= sum;
    }

    // A = scores * V; head l occupies output channels [l*Dv, (l+1)*Dv).
    for (int t = 0; t < T; ++t) {
      const double* row = &scores[static_cast<std::size_t>(t) * T];
      for (int d = 0; d < Dv; ++d)
        for (int f = 0; f < F; ++f) {
          double s = 0.0;
          for (int u = 0; u < T; ++u) s += row[u] * V.at(d, u, f);
          heads.at(l * Dv + d, t, f) = s;
        }
    }
  }

  Tensor3 proj = conv1x1(heads, widen(w.data(prefix + ".out.conv.weight")),
                         widen(w.data(prefix + ".out.conv.bias")), D);
  prelu(proj, widen(w.data(prefix + ".out.prelu")));
  cf_layer_norm(proj, widen(w.data(prefix + ".out.norm.gamma")),
                widen(w.data(prefix + ".out.norm.beta")));

  Tensor3 out = z;
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += proj.v[k];
  return out;
}

Spectrogram forward(const std::vector<Spectrogram>& features, const ModelConfig& cfg,
                    const WeightStore& w) {
  cfg.validate();
  check_weight_shapes(w, cfg);
  Tensor3 r = embed_inputs(features, cfg, w);
  const int T = static_cast<int>(r.d1), F = static_cast<int>(r.d2);

  for (int b = 0; b < cfg.B; ++b) {
    const std::string bp = "block" + std::to_string(b);
    try {
      r = intra_frame_module(r, cfg, w, bp + ".intra");
      r = subband_module(r, cfg, w, bp + ".sub");
      r = attention_module(r, cfg, w, bp + ".attn");
    } catch (const std::exception& e) {
      throw std::runtime_error("model: block " + std::to_string(b) + ": " + e.what());
    }
  }

  const Tensor3 head = deconv2d_3x3(r, widen(w.data("head.deconv.weight")),
                                    widen(w.data("head.deconv.bias")), 2 * cfg.C);

  Spectrogram out(cfg.C, T, F, features.front().config);
  for (int c = 0; c < cfg.C; ++c)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f)
        out.at(c, t, f) = cd(head.at(2 * c, t, f), head.at(2 * c + 1, t, f));
  return out;
}

}  // namespace tfsep::model
