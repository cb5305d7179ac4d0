#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tfsep/filters.hpp"
#include "tfsep/model.hpp"
#include "tfsep/scene.hpp"
#include "tfsep/stft.hpp"

namespace tfsep::pipeline {

struct StageConfig {
  enum class Kind { Model, Oracle, Identity };
  Kind kind = Kind::Identity;
  model::ModelConfig model_cfg;
  std::shared_ptr<model::WeightStore> weights;
  double corruption_db = 60.0;  // oracle stub fidelity
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  StageConfig stage1;                          // Model or Oracle
  std::optional<filters::FilterSpec> filter;
  StageConfig stage2;                          // Model or Identity
  int reference_mic = 0;
  StftConfig stft;

  // Channel/source consistency checks, run before any compute.
  void validate(int mixture_channels) const;
  int sources() const;
};

struct PipelineResult {
  Spectrogram s1;                                   // stage-1 estimates, C channels
  std::optional<filters::FilterResult> filtered;    // linear-filter stage
  Spectrogram s2;                                   // final estimates, C channels
  std::vector<Waveform> outputs;                    // re-synthesized finals, input scale
  std::vector<Waveform> s1_wavs;
  std::vector<Waveform> filter_wavs;
  double norm_factor = 1.0;
};

// Variance-normalize, analyze, run stage 1 (model or oracle stub), the
// optional linear filter, and stage 2 (model or pass-through), then
// re-synthesize everything at the input scale.  `scene` is required for the
// oracle stage-1 stub.
PipelineResult run(const Waveform& mixture, const PipelineConfig& cfg,
                   const scene::Scene* scene = nullptr);

}  // namespace tfsep::pipeline
