#include "tfsep/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace tfsep::pipeline {

void PipelineConfig::validate(int mixture_channels) const {
  stft.validate();
  if (stage1.kind == StageConfig::Kind::Identity)
    throw std::invalid_argument("pipeline: stage1 must be a model or the oracle stub");
  if (stage2.kind == StageConfig::Kind::Oracle)
    throw std::invalid_argument("pipeline: stage2 cannot be the oracle stub");
  if (reference_mic < 0 || reference_mic >= mixture_channels)
    throw std::invalid_argument("pipeline: reference mic out of range");

  if (stage1.kind == StageConfig::Kind::Model) {
    stage1.model_cfg.validate();
    if (!stage1.weights) throw std::invalid_argument("pipeline: stage1 weights missing");
    if (stage1.model_cfg.P != mixture_channels)
      throw std::invalid_argument("pipeline: stage1 expects " +
                                  std::to_string(stage1.model_cfg.P) + " input channels");
    if (stage1.model_cfg.inputs != model::InputSet::MixtureOnly)
      throw std::invalid_argument("pipeline: stage1 must be a mixture-only model");
    if (stage1.model_cfg.F != stft.freq_bins())
      throw std::invalid_argument("pipeline: stage1 F disagrees with the STFT config");
  }
  if (filter) filter->validate();
  if (stage2.kind == StageConfig::Kind::Model) {
    stage2.model_cfg.validate();
    if (!stage2.weights) throw std::invalid_argument("pipeline: stage2 weights missing");
    if (stage2.model_cfg.P != mixture_channels)
      throw std::invalid_argument("pipeline: stage2 expects " +
                                  std::to_string(stage2.model_cfg.P) + " input channels");
    if (sources() > 0 && stage2.model_cfg.C != sources())
      throw std::invalid_argument("pipeline: stage1/stage2 source counts disagree");
    if (filter && stage2.model_cfg.inputs != model::InputSet::MixtureDnn1Filter)
      throw std::invalid_argument(
          "pipeline: stage2 model must take mixture+dnn1+filter inputs when a filter is present");
    if (!filter && stage2.model_cfg.inputs == model::InputSet::MixtureDnn1Filter)
      throw std::invalid_argument("pipeline: stage2 wants filter features but no filter is set");
    if (stage2.model_cfg.F != stft.freq_bins())
      throw std::invalid_argument("pipeline: stage2 F disagrees with the STFT config");
  }
}

int PipelineConfig::sources() const {
  return stage1.kind == StageConfig::Kind::Model ? stage1.model_cfg.C : -1;
}

namespace {

// DC/Nyquist imaginary parts from estimators are an artifact of predicting
// RI planes independently; zero them so spectra stay one-sided-valid.
void sanitize_edges(Spectrogram& s) {
  for (int ch = 0; ch < s.channels; ++ch)
    for (int t = 0; t < s.frames; ++t)
      for (int f : {0, s.freqs - 1}) s.at(ch, t, f) = s.at(ch, t, f).real();
}

std::vector<Waveform> synthesize(const Spectrogram& s, std::int64_t out_len, double inv_factor) {
  std::vector<Waveform> out;
  for (int c = 0; c < s.channels; ++c) {
    Spectrogram one = s.channel(c);
    sanitize_edges(one);
    Waveform w = istft(one, out_len);
    for (double& v : w.data) v *= inv_factor;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

PipelineResult run(const Waveform& mixture, const PipelineConfig& cfg,
                   const scene::Scene* scene) {
  cfg.validate(mixture.channels);
  if (cfg.stage1.kind == StageConfig::Kind::Oracle && scene == nullptr)
    throw std::invalid_argument("pipeline: oracle stage1 needs scene targets");

  PipelineResult res;

  Waveform normed = mixture;
  std::vector<Waveform> no_targets;
  res.norm_factor = scene::normalize_variance(normed, no_targets);
  const double inv = 1.0 / res.norm_factor;

  const Spectrogram y = stft(normed, cfg.stft);

  if (cfg.stage1.kind == StageConfig::Kind::Model) {
    res.s1 = model::forward({y}, cfg.stage1.model_cfg, *cfg.stage1.weights);
  } else {
    // The oracle stub sees targets at the input scale; bring them to the
    // normalized scale the rest of the chain operates in.
    res.s1 = scene::oracle_estimator(*scene, cfg.stage1.corruption_db, cfg.stage1.seed, cfg.stft,
                                     cfg.reference_mic);
    for (cd& v : res.s1.data) v *= res.norm_factor;
  }
  res.s1_wavs = synthesize(res.s1, mixture.samples, inv);

  const Spectrogram* stage2_input = &res.s1;
  if (cfg.filter) {
    res.filtered = filters::apply_filter(y, res.s1, *cfg.filter, cfg.reference_mic);
    res.filter_wavs = synthesize(res.filtered->output, mixture.samples, inv);
    stage2_input = &res.filtered->output;
  }

  if (cfg.stage2.kind == StageConfig::Kind::Model) {
    if (cfg.stage2.model_cfg.C != res.s1.channels)
      throw std::invalid_argument("pipeline: stage2 source count disagrees with stage1 output");
    std::vector<Spectrogram> feats = {y};
    if (cfg.filter) {
      feats.push_back(res.s1);
      feats.push_back(res.filtered->output);
    }
    res.s2 = model::forward(feats, cfg.stage2.model_cfg, *cfg.stage2.weights);
  } else {
    res.s2 = *stage2_input;
  }
  res.outputs = synthesize(res.s2, mixture.samples, inv);
  return res;
}

}  // namespace tfsep::pipeline
