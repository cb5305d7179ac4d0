#pragma once

#include <string>
#include <vector>

#include "tfsep/stft.hpp"

namespace tfsep::objective {

enum class LossKind { SISDR_SE, SISDR_SE_MC, WavMag, WavMagMC, WavMagGEQ };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

// Least-squares gain equalizing the estimate against the reference:
// alpha = <est, ref> / <est, est>.  Zero-norm estimate raises.
double ls_gain(const std::vector<double>& est, const std::vector<double>& ref);

// Scaling-estimate SI-SDR: 10 log10(||s||^2 / (||alpha*est - s||^2 + 1e-12)),
// clamped to [-60, 60] dB.  Used by the loss family.
double si_sdr_se(const std::vector<double>& est, const std::vector<double>& ref);

// Scaling-source SI-SDR (the conventional evaluation metric): the reference
// is projected onto the estimate direction, 10 log10(||alpha s||^2 /
// ||est - alpha s||^2), same clamp.  Used for reporting and SI-SDRi.
double si_sdr_eval(const std::vector<double>& est, const std::vector<double>& ref);

// si_sdr_eval(est, ref) - si_sdr_eval(mixture, ref).
double si_sdri(const std::vector<double>& est, const std::vector<double>& ref,
               const std::vector<double>& mixture);

// Negative summed SI-SDR-SE plus the L1 mixture-constraint term on the
// gain-scaled estimate sum.
double loss_sisdr_se_mc(const std::vector<std::vector<double>>& est,
                        const std::vector<std::vector<double>>& ref);

// Per-source L1 waveform + L1 magnitude-spectrogram terms, optionally with
// the same two terms on the (unscaled) source sums.
double loss_wav_mag(const std::vector<std::vector<double>>& est,
                    const std::vector<std::vector<double>>& ref, const StftConfig& cfg,
                    bool with_mc);

// loss_wav_mag with each estimate pre-scaled by its least-squares gain.
double loss_wav_mag_geq(const std::vector<std::vector<double>>& est,
                        const std::vector<std::vector<double>>& ref, const StftConfig& cfg);

// Total loss of `kind` for a fixed source assignment (est[i] vs ref[i]).
double total_loss(const std::vector<std::vector<double>>& est,
                  const std::vector<std::vector<double>>& ref, LossKind kind,
                  const StftConfig& cfg);

struct PitResult {
  std::vector<int> permutation;  // ref index c is matched with est[permutation[c]]
  double loss = 0.0;
};

// Exhaustive minimum over all C! assignments (C <= 4); ties resolved to the
// lexicographically smallest permutation.
PitResult pit_assign(const std::vector<std::vector<double>>& est,
                     const std::vector<std::vector<double>>& ref, LossKind kind,
                     const StftConfig& cfg);

struct EvalReport {
  std::vector<double> si_sdr;   // per source, dB
  std::vector<double> si_sdri;  // per source, dB
  double loss_value = 0.0;
  LossKind loss_kind = LossKind::SISDR_SE;
  std::vector<int> permutation;

  std::string to_text() const;
  std::string to_json() const;
};

// Scores estimates against references at the reference mixture channel,
// optionally searching the best permutation.
EvalReport evaluate(const std::vector<std::vector<double>>& est,
                    const std::vector<std::vector<double>>& ref,
                    const std::vector<double>& mixture_ref_channel, LossKind kind,
                    const StftConfig& cfg, bool use_pit);

}  // namespace tfsep::objective
