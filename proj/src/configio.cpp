#include "tfsep/configio.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tfsep::config {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

model::ModelConfig model_from_json(const json& j) {
  model::ModelConfig cfg;
  cfg.D = j.value("D", cfg.D);
  cfg.B = j.value("B", cfg.B);
  cfg.I = j.value("I", cfg.I);
  cfg.J = j.value("J", cfg.J);
  cfg.H = j.value("H", cfg.H);
  cfg.L = j.value("L", cfg.L);
  cfg.E = j.value("E", cfg.E);
  cfg.C = j.value("C", cfg.C);
  cfg.P = j.value("P", cfg.P);
  cfg.F = j.value("F", cfg.F);
  if (j.contains("unfold_order")) {
    const std::string s = j["unfold_order"];
    if (s == "unfold_ln")
      cfg.unfold_order = model::UnfoldOrder::UnfoldLN;
    else if (s == "ln_unfold")
      cfg.unfold_order = model::UnfoldOrder::LNUnfold;
    else
      throw std::runtime_error("config: unfold_order must be unfold_ln or ln_unfold");
  }
  if (j.contains("inputs")) {
    const std::string s = j["inputs"];
    if (s == "mixture_only")
      cfg.inputs = model::InputSet::MixtureOnly;
    else if (s == "mixture+dnn1+mfwf")
      cfg.inputs = model::InputSet::MixtureDnn1Filter;
    else
      throw std::runtime_error("config: inputs must be mixture_only or mixture+dnn1+mfwf");
  }
  cfg.validate();
  return cfg;
}

// Accepts a scalar (broadcast over all (c, p)) or a CxP nested array.
template <typename T>
std::vector<std::vector<T>> grid_field(const json& j, const std::string& key, int c, int p,
                                       T fallback) {
  std::vector<std::vector<T>> out(c, std::vector<T>(p, fallback));
  if (!j.contains(key)) return out;
  const json& v = j[key];
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != c)
      throw std::runtime_error("config: " + key + " must have C rows");
    for (int i = 0; i < c; ++i) {
      if (static_cast<int>(v[i].size()) != p)
        throw std::runtime_error("config: " + key + " must have P columns");
      for (int k = 0; k < p; ++k) out[i][k] = v[i][k].get<T>();
    }
  } else {
    const T val = v.get<T>();
    for (auto& row : out) std::fill(row.begin(), row.end(), val);
  }
  return out;
}

scene::SceneSpec scene_from_json(const json& j) {
  scene::SceneSpec spec;
  spec.sources = j.value("sources", 1);
  spec.mics = j.value("mics", 1);
  spec.sample_rate = j.value("sample_rate", 8000);
  spec.duration = j.value("duration", 1.0);
  spec.seed = j.value("seed", 0ull);
  spec.snr_db = j.value("snr_db", 20.0);
  if (j.contains("noise_kind")) {
    const std::string s = j["noise_kind"];
    if (s == "white")
      spec.noise_kind = scene::NoiseKind::White;
    else if (s == "none")
      spec.noise_kind = scene::NoiseKind::None;
    else
      throw std::runtime_error("config: noise_kind must be white or none");
  }
  if (j.contains("dry_wavs")) spec.dry_wavs = j["dry_wavs"].get<std::vector<std::string>>();

  const bool has_geometry = j.contains("direct_delay") || j.contains("direct_gain") ||
                            j.contains("tail_len");
  if (!has_geometry) {
    spec = scene::SceneSpec::random_geometry(spec.sources, spec.mics, spec.sample_rate,
                                             spec.duration, j.value("random_tail_len", 0),
                                             spec.noise_kind, spec.snr_db, spec.seed);
    if (j.contains("dry_wavs")) spec.dry_wavs = j["dry_wavs"].get<std::vector<std::string>>();
    spec.validate();
    return spec;
  }

  spec.direct_delay = grid_field<int>(j, "direct_delay", spec.sources, spec.mics, 0);
  spec.direct_gain = grid_field<double>(j, "direct_gain", spec.sources, spec.mics, 1.0);
  const auto lens = grid_field<int>(j, "tail_len", spec.sources, spec.mics, 0);
  const auto decays = grid_field<double>(j, "tail_decay", spec.sources, spec.mics, 0.02);
  const auto gains = grid_field<double>(j, "tail_gain", spec.sources, spec.mics, 0.5);
  spec.tail.assign(spec.sources, std::vector<scene::TailSpec>(spec.mics));
  for (int c = 0; c < spec.sources; ++c)
    for (int p = 0; p < spec.mics; ++p)
      spec.tail[c][p] = {lens[c][p], decays[c][p], gains[c][p]};
  spec.validate();
  return spec;
}

filters::FilterSpec filter_from_json(const json& j) {
  filters::FilterSpec spec;
  const std::string kind = j.value("kind", "mfwf");
  if (kind == "mfwf")
    spec.kind = filters::FilterKind::MFWF;
  else if (kind == "convbf")
    spec.kind = filters::FilterKind::ConvBF;
  else if (kind == "wpe")
    spec.kind = filters::FilterKind::WPE;
  else
    throw std::runtime_error("config: filter kind must be mfwf, convbf or wpe");
  spec.delta_l = j.value("delta_l", 0);
  spec.delta_r = j.value("delta_r", 0);
  spec.delta_d = j.value("delta_d", 3);
  spec.epsilon = j.value("epsilon", 1e-5);
  spec.loading = j.value("loading", linalg::kDefaultLoading);
  spec.validate();
  return spec;
}

pipeline::StageConfig stage_from_json(const json& j, bool allow_oracle) {
  pipeline::StageConfig st;
  const std::string kind = j.value("kind", "identity");
  if (kind == "model") {
    st.kind = pipeline::StageConfig::Kind::Model;
    if (j.contains("config")) {
      st.model_cfg = load_model_config(j["config"]);
    } else if (j.contains("model")) {
      st.model_cfg = model_from_json(j["model"]);
    } else {
      throw std::runtime_error("config: model stage needs a config path or inline model object");
    }
    if (j.contains("weights_index")) {
      st.weights = std::make_shared<model::WeightStore>(
          model::load_weights(j["weights_index"], j["weights_blob"]));
    } else if (j.contains("synth_seed")) {
      st.weights = std::make_shared<model::WeightStore>(
          model::synth_weights(st.model_cfg, j["synth_seed"].get<std::uint64_t>()));
    } else {
      throw std::runtime_error("config: model stage needs weights_index/weights_blob or synth_seed");
    }
  } else if (kind == "oracle") {
    if (!allow_oracle) throw std::runtime_error("config: oracle stage only allowed as stage1");
    st.kind = pipeline::StageConfig::Kind::Oracle;
    st.corruption_db = j.value("corruption_db", 60.0);
    st.seed = j.value("seed", 0ull);
  } else if (kind == "identity") {
    st.kind = pipeline::StageConfig::Kind::Identity;
  } else {
    throw std::runtime_error("config: stage kind must be model, oracle or identity");
  }
  return st;
}

}  // namespace

model::ModelConfig load_model_config(const std::string& path) {
  return model_from_json(load_json(path));
}

model::ModelConfig parse_model_config(const std::string& json_text) {
  return model_from_json(json::parse(json_text));
}

scene::SceneSpec load_scene_spec(const std::string& path) {
  return scene_from_json(load_json(path));
}

scene::SceneSpec parse_scene_spec(const std::string& json_text) {
  return scene_from_json(json::parse(json_text));
}

filters::FilterSpec parse_filter_spec(const std::string& json_text) {
  return filter_from_json(json::parse(json_text));
}

pipeline::PipelineConfig load_pipeline_config(const std::string& path) {
  const json j = load_json(path);
  pipeline::PipelineConfig cfg;
  if (j.contains("stft")) {
    const json& s = j["stft"];
    cfg.stft = StftConfig::for_sample_rate(s.value("sample_rate", 8000), s.value("win_ms", 32.0),
                                           s.value("hop_ms", 8.0));
  }
  cfg.reference_mic = j.value("reference_mic", 0);
  if (!j.contains("stage1")) throw std::runtime_error("config: pipeline needs stage1");
  cfg.stage1 = stage_from_json(j["stage1"], true);
  if (j.contains("filter") && !j["filter"].is_null()) cfg.filter = filter_from_json(j["filter"]);
  if (j.contains("stage2")) cfg.stage2 = stage_from_json(j["stage2"], false);
  return cfg;
}

}  // namespace tfsep::config
