#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tfsep::model {

struct ModelConfig;

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t numel() const;
};

// Named f32 tensors; names and shapes are fixed by the model config.
class WeightStore {
 public:
  void add(const std::string& name, std::vector<int> shape, std::vector<float> data);
  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  const std::vector<float>& data(const std::string& name) const;
  std::vector<float>& mutable_data(const std::string& name);
  const std::vector<int>& shape(const std::string& name) const;
  void remove(const std::string& name);

  // Every required tensor present with the exact shape, and nothing else.
  void validate_against(const std::vector<TensorSpec>& required) const;

  std::size_t size() const { return tensors_.size(); }
  const std::map<std::string, std::pair<std::vector<int>, std::vector<float>>>& all() const {
    return tensors_;
  }

 private:
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> tensors_;
};

// Manifest format (text index + raw little-endian f32 blob):
//   tfsep-weights-v1
//   tensor <name> f32 <d0>x<d1>x... <byte_offset>
// Offsets refer to the blob file; the loader checks per-tensor bounds and
// that the blob size equals the sum of tensor sizes.
void save_weights(const WeightStore& store, const std::string& index_path,
                  const std::string& blob_path);
WeightStore load_weights(const std::string& index_path, const std::string& blob_path);

// Deterministic synthetic weights for fixtures: norm gains 1 + 0.1g, norm
// biases 0.1g, PReLU slopes 0.25, matrix/conv weights 0.5/sqrt(fan_in) * g,
// biases 0.01g, with g drawn from the seeded generator in manifest order.
WeightStore synth_weights(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace tfsep::model
