#include "support/model_oracle.hpp"

#include <cmath>
#include <string>

namespace tfsep::testing {

namespace {

using model::ModelConfig;
using model::UnfoldOrder;
using model::WeightStore;

Grid zeros(int c, int t, int f) {
  return Grid(c, std::vector<std::vector<double>>(t, std::vector<double>(f, 0.0)));
}

const std::vector<float>& W(const WeightStore& w, const std::string& name) { return w.data(name); }

Grid conv3x3(const Grid& in, const std::vector<float>& wt, const std::vector<float>& bias,
             int out_ch) {
  const int cin = static_cast<int>(in.size());
  const int T = static_cast<int>(in[0].size());
  const int F = static_cast<int>(in[0][0].size());
  Grid out = zeros(out_ch, T, F);
  for (int o = 0; o < out_ch; ++o)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double acc = bias[o];
        for (int i = 0; i < cin; ++i)
          for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
              const int tt = t + a - 1, ff = f + c - 1;
              if (tt < 0 || tt >= T || ff < 0 || ff >= F) continue;
              acc += static_cast<double>(wt[((o * cin + i) * 3 + a) * 3 + c]) * in[i][tt][ff];
            }
        out[o][t][f] = acc;
      }
  return out;
}

Grid deconv3x3(const Grid& in, const std::vector<float>& wt, const std::vector<float>& bias,
               int out_ch) {
  const int cin = static_cast<int>(in.size());
  const int T = static_cast<int>(in[0].size());
  const int F = static_cast<int>(in[0][0].size());
  Grid out = zeros(out_ch, T, F);
  for (int o = 0; o < out_ch; ++o)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double acc = bias[o];
        for (int i = 0; i < cin; ++i)
          for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
              const int tt = t + 1 - a, ff = f + 1 - c;
              if (tt < 0 || tt >= T || ff < 0 || ff >= F) continue;
              acc += static_cast<double>(wt[((i * out_ch + o) * 3 + a) * 3 + c]) * in[i][tt][ff];
            }
        out[o][t][f] = acc;
      }
  return out;
}

Grid gln(const Grid& in, const std::vector<float>& gamma, const std::vector<float>& beta) {
  const int C = static_cast<int>(in.size());
  const int T = static_cast<int>(in[0].size());
  const int F = static_cast<int>(in[0][0].size());
  double mean = 0.0;
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) mean += in[c][t][f];
  mean /= C * T * F;
  double var = 0.0;
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) var += (in[c][t][f] - mean) * (in[c][t][f] - mean);
  var /= C * T * F;
  Grid out = zeros(C, T, F);
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f)
        out[c][t][f] =
            gamma[c] * (in[c][t][f] - mean) / std::sqrt(var + 1e-5) + beta[c];
  return out;
}

// One BLSTM direction over a [steps][in] sequence; single bias, gates ifgo.
std::vector<std::vector<double>> lstm_dir(const std::vector<std::vector<double>>& x, int hidden,
                                          const std::vector<float>& w_ih,
                                          const std::vector<float>& w_hh,
                                          const std::vector<float>& bias, bool reverse) {
  const int steps = static_cast<int>(x.size());
  const int in = static_cast<int>(x[0].size());
  std::vector<std::vector<double>> out(steps, std::vector<double>(hidden, 0.0));
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (int n = 0; n < steps; ++n) {
    const int s = reverse ? steps - 1 - n : n;
    std::vector<double> g(4 * hidden, 0.0);
    for (int row = 0; row < 4 * hidden; ++row) {
      double acc = bias[row];
      for (int k = 0; k < in; ++k) acc += static_cast<double>(w_ih[row * in + k]) * x[s][k];
      for (int k = 0; k < hidden; ++k) acc += static_cast<double>(w_hh[row * hidden + k]) * h[k];
      g[row] = acc;
    }
    for (int k = 0; k < hidden; ++k) {
      const double ig = 1.0 / (1.0 + std::exp(-g[k]));
      const double fg = 1.0 / (1.0 + std::exp(-g[hidden + k]));
      const double gg = std::tanh(g[2 * hidden + k]);
      const double og = 1.0 / (1.0 + std::exp(-g[3 * hidden + k]));
      c[k] = fg * c[k] + ig * gg;
      h[k] = og * std::tanh(c[k]);
    }
    out[s] = h;
  }
  return out;
}

// The shared sequence module on one [n][D] sequence.
std::vector<std::vector<double>> seq_module(const std::vector<std::vector<double>>& seq,
                                            const ModelConfig& cfg, const WeightStore& w,
                                            const std::string& prefix) {
  const int n = static_cast<int>(seq.size());
  const int D = cfg.D, I = cfg.I, J = cfg.J, H = cfg.H;
  const int steps = model::unfold_steps(n, I, J);
  const int padded = model::unfold_padded(n, I, J);

  // Optionally LN before unfolding (over the D channels at each position).
  std::vector<std::vector<double>> pre = seq;
  if (cfg.unfold_order == UnfoldOrder::LNUnfold) {
    const auto& gamma = W(w, prefix + ".norm.gamma");
    const auto& beta = W(w, prefix + ".norm.beta");
    for (int p = 0; p < n; ++p) {
      double mean = 0.0, var = 0.0;
      for (int d = 0; d < D; ++d) mean += seq[p][d];
      mean /= D;
      for (int d = 0; d < D; ++d) var += (seq[p][d] - mean) * (seq[p][d] - mean);
      var /= D;
      for (int d = 0; d < D; ++d)
        pre[p][d] = gamma[d] * (seq[p][d] - mean) / std::sqrt(var + 1e-5) + beta[d];
    }
  }

  // Zero-pad to the unfolded extent, then gather I-blocks.
  std::vector<std::vector<double>> paddedseq(padded, std::vector<double>(D, 0.0));
  for (int p = 0; p < n; ++p) paddedseq[p] = pre[p];
  std::vector<std::vector<double>> unf(steps, std::vector<double>(I * D, 0.0));
  for (int s = 0; s < steps; ++s)
    for (int d = 0; d < D; ++d)
      for (int i = 0; i < I; ++i) unf[s][d * I + i] = paddedseq[s * J + i][d];

  if (cfg.unfold_order == UnfoldOrder::UnfoldLN) {
    const auto& gamma = W(w, prefix + ".norm.gamma");
    const auto& beta = W(w, prefix + ".norm.beta");
    for (int s = 0; s < steps; ++s) {
      double mean = 0.0, var = 0.0;
      for (int k = 0; k < I * D; ++k) mean += unf[s][k];
      mean /= I * D;
      for (int k = 0; k < I * D; ++k) var += (unf[s][k] - mean) * (unf[s][k] - mean);
      var /= I * D;
      for (int k = 0; k < I * D; ++k)
        unf[s][k] = gamma[k] * (unf[s][k] - mean) / std::sqrt(var + 1e-5) + beta[k];
    }
  }

  const auto fw = lstm_dir(unf, H, W(w, prefix + ".fw.w_ih"), W(w, prefix + ".fw.w_hh"),
                           W(w, prefix + ".fw.bias"), false);
  const auto bw = lstm_dir(unf, H, W(w, prefix + ".bw.w_ih"), W(w, prefix + ".bw.w_hh"),
                           W(w, prefix + ".bw.bias"), true);

  // Deconv1D: scatter each step's linear map back onto positions s*J + i.
  const auto& pw = W(w, prefix + ".proj.weight");  // [2H][D][I]
  const auto& pb = W(w, prefix + ".proj.bias");
  std::vector<std::vector<double>> full(padded, std::vector<double>(D, 0.0));
  for (int s = 0; s < steps; ++s)
    for (int h = 0; h < 2 * H; ++h) {
      const double hv = h < H ? fw[s][h] : bw[s][h - H];
      for (int d = 0; d < D; ++d)
        for (int i = 0; i < I; ++i)
          full[s * J + i][d] += static_cast<double>(pw[(h * D + d) * I + i]) * hv;
    }
  std::vector<std::vector<double>> out(n, std::vector<double>(D, 0.0));
  for (int p = 0; p < n; ++p)
    for (int d = 0; d < D; ++d) out[p][d] = full[p][d] + pb[d] + seq[p][d];  // residual
  return out;
}

Grid qkv_stack(const Grid& z, const WeightStore& w, const std::string& prefix, int out_ch) {
  const int D = static_cast<int>(z.size());
  const int T = static_cast<int>(z[0].size());
  const int F = static_cast<int>(z[0][0].size());
  const auto& cw = W(w, prefix + ".conv.weight");
  const auto& cb = W(w, prefix + ".conv.bias");
  const auto& alpha = W(w, prefix + ".prelu");
  const auto& gamma = W(w, prefix + ".norm.gamma");
  const auto& beta = W(w, prefix + ".norm.beta");

  Grid x = zeros(out_ch, T, F);
  for (int o = 0; o < out_ch; ++o)
    for (int t = 0; t < T; ++t)
      for (int f = 0; f < F; ++f) {
        double acc = cb[o];
        for (int i = 0; i < D; ++i) acc += static_cast<double>(cw[o * D + i]) * z[i][t][f];
        if (acc < 0.0) acc *= alpha[o];
        x[o][t][f] = acc;
      }
  // cfLN: statistics over (channel, freq) within each frame.
  Grid out = zeros(out_ch, T, F);
  for (int t = 0; t < T; ++t) {
    double mean = 0.0, var = 0.0;
    for (int o = 0; o < out_ch; ++o)
      for (int f = 0; f < F; ++f) mean += x[o][t][f];
    mean /= out_ch * F;
    for (int o = 0; o < out_ch; ++o)
      for (int f = 0; f < F; ++f) var += (x[o][t][f] - mean) * (x[o][t][f] - mean);
    var /= out_ch * F;
    for (int o = 0; o < out_ch; ++o)
      for (int f = 0; f < F; ++f)
        out[o][t][f] = gamma[o * F + f] * (x[o][t][f] - mean) / std::sqrt(var + 1e-5) +
                       beta[o * F + f];
  }
  return out;
}

}  // namespace

Grid oracle_forward(const std::vector<Spectrogram>& features, const ModelConfig& cfg,
                    const WeightStore& w) {
  const int T = features[0].frames, F = features[0].freqs, D = cfg.D;

  // Embedding: per-feature Conv2D + gLN, summed.
  Grid r = zeros(D, T, F);
  for (std::size_t idx = 0; idx < features.size(); ++idx) {
    const Spectrogram& sp = features[idx];
    Grid ri = zeros(2 * sp.channels, T, F);
    for (int ch = 0; ch < sp.channels; ++ch)
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
          ri[2 * ch][t][f] = sp.at(ch, t, f).real();
          ri[2 * ch + 1][t][f] = sp.at(ch, t, f).imag();
        }
    const std::string p = "embed" + std::to_string(idx);
    const Grid conv = conv3x3(ri, W(w, p + ".conv.weight"), W(w, p + ".conv.bias"), D);
    const Grid normed = gln(conv, W(w, p + ".norm.gamma"), W(w, p + ".norm.beta"));
    for (int d = 0; d < D; ++d)
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) r[d][t][f] += normed[d][t][f];
  }

  for (int b = 0; b < cfg.B; ++b) {
    const std::string bp = "block" + std::to_string(b);

    // Intra-frame: per frame, sequence over frequency.
    Grid u = r;
    for (int t = 0; t < T; ++t) {
      std::vector<std::vector<double>> seq(F, std::vector<double>(D, 0.0));
      for (int f = 0; f < F; ++f)
        for (int d = 0; d < D; ++d) seq[f][d] = r[d][t][f];
      const auto res = seq_module(seq, cfg, w, bp + ".intra");
      for (int f = 0; f < F; ++f)
        for (int d = 0; d < D; ++d) u[d][t][f] = res[f][d];
    }

    // Sub-band: per frequency, sequence over time, shared weights.
    Grid z = u;
    for (int f = 0; f < F; ++f) {
      std::vector<std::vector<double>> seq(T, std::vector<double>(D, 0.0));
      for (int t = 0; t < T; ++t)
        for (int d = 0; d < D; ++d) seq[t][d] = u[d][t][f];
      const auto res = seq_module(seq, cfg, w, bp + ".sub");
      for (int t = 0; t < T; ++t)
        for (int d = 0; d < D; ++d) z[d][t][f] = res[t][d];
    }

    // Attention.
    const int E = cfg.E, Dv = cfg.D / cfg.L;
    Grid cat = zeros(D, T, F);
    for (int l = 0; l < cfg.L; ++l) {
      const Grid q = qkv_stack(z, w, bp + ".attn.q" + std::to_string(l), E);
      const Grid k = qkv_stack(z, w, bp + ".attn.k" + std::to_string(l), E);
      const Grid v = qkv_stack(z, w, bp + ".attn.v" + std::to_string(l), Dv);

      // Flatten frame vectors channel-major: index = c * F + f.
      std::vector<std::vector<double>> qm(T, std::vector<double>(E * F, 0.0)), km = qm;
      std::vector<std::vector<double>> vm(T, std::vector<double>(Dv * F, 0.0));
      for (int t = 0; t < T; ++t) {
        for (int e = 0; e < E; ++e)
          for (int f = 0; f < F; ++f) {
            qm[t][e * F + f] = q[e][t][f];
            km[t][e * F + f] = k[e][t][f];
          }
        for (int d = 0; d < Dv; ++d)
          for (int f = 0; f < F; ++f) vm[t][d * F + f] = v[d][t][f];
      }

      for (int t = 0; t < T; ++t) {
        std::vector<double> row(T, 0.0);
        for (int u2 = 0; u2 < T; ++u2) {
          double acc = 0.0;
          for (int k2 = 0; k2 < E * F; ++k2) acc += qm[t][k2] * km[u2][k2];
          row[u2] = acc / std::sqrt(static_cast<double>(F) * E);
        }
        double mx = row[0];
        for (double vv : row) mx = std::max(mx, vv);
        double sum = 0.0;
        for (double& vv : row) {
          vv = std::exp(vv - mx);
          sum += vv;
        }
        for (double& vv : row) vv /= sum;

        for (int d = 0; d < Dv; ++d)
          for (int f = 0; f < F; ++f) {
            double acc = 0.0;
            for (int u2 = 0; u2 < T; ++u2) acc += row[u2] * vm[u2][d * F + f];
            cat[l * Dv + d][t][f] = acc;
          }
      }
    }
    const Grid proj = qkv_stack(cat, w, bp + ".attn.out", D);
    for (int d = 0; d < D; ++d)
      for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) r[d][t][f] = z[d][t][f] + proj[d][t][f];
  }

  return deconv3x3(r, W(w, "head.deconv.weight"), W(w, "head.deconv.bias"), 2 * cfg.C);
}

}  // namespace tfsep::testing
