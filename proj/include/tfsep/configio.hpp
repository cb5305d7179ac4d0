#pragma once

#include <string>

#include "tfsep/model.hpp"
#include "tfsep/pipeline.hpp"
#include "tfsep/scene.hpp"

namespace tfsep::config {

// JSON configuration files.  Keys mirror the struct fields; see README for
// the full schemas.
model::ModelConfig load_model_config(const std::string& path);
model::ModelConfig parse_model_config(const std::string& json_text);

scene::SceneSpec load_scene_spec(const std::string& path);
scene::SceneSpec parse_scene_spec(const std::string& json_text);

pipeline::PipelineConfig load_pipeline_config(const std::string& path);

filters::FilterSpec parse_filter_spec(const std::string& json_text);

}  // namespace tfsep::config
