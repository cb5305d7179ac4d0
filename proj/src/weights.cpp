#include "tfsep/weights.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tfsep/model.hpp"
#include "tfsep/rng.hpp"

namespace tfsep::model {

std::size_t TensorSpec::numel() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void WeightStore::add(const std::string& name, std::vector<int> shape, std::vector<float> data) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  if (n != data.size()) throw std::invalid_argument("weights: shape/data mismatch for " + name);
  if (!tensors_.emplace(name, std::make_pair(std::move(shape), std::move(data))).second)
    throw std::invalid_argument("weights: duplicate tensor " + name);
}

const std::vector<float>& WeightStore::data(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("weights: missing tensor " + name);
  return it->second.second;
}

const std::vector<int>& WeightStore::shape(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("weights: missing tensor " + name);
  return it->second.first;
}

std::vector<float>& WeightStore::mutable_data(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("weights: missing tensor " + name);
  return it->second.second;
}

void WeightStore::remove(const std::string& name) {
  if (tensors_.erase(name) == 0) throw std::out_of_range("weights: missing tensor " + name);
}

void WeightStore::validate_against(const std::vector<TensorSpec>& required) const {
  for (const TensorSpec& spec : required) {
    auto it = tensors_.find(spec.name);
    if (it == tensors_.end()) throw std::runtime_error("weights: missing tensor " + spec.name);
    if (it->second.first != spec.shape)
      throw std::runtime_error("weights: shape mismatch for " + spec.name);
  }
  if (tensors_.size() != required.size())
    throw std::runtime_error("weights: store holds unexpected extra tensors");
}

void save_weights(const WeightStore& store, const std::string& index_path,
                  const std::string& blob_path) {
  std::ofstream idx(index_path);
  std::ofstream blob(blob_path, std::ios::binary);
  if (!idx || !blob) throw std::runtime_error("weights: cannot write " + index_path);

  idx << "tfsep-weights-v1\n";
  std::size_t offset = 0;
  for (const auto& [name, entry] : store.all()) {
    const auto& [shape, data] = entry;
    idx << "tensor " << name << " f32 ";
    for (std::size_t i = 0; i < shape.size(); ++i) idx << (i ? "x" : "") << shape[i];
    idx << " " << offset << "\n";
    blob.write(reinterpret_cast<const char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(float)));
    offset += data.size() * sizeof(float);
  }
  if (!idx || !blob) throw std::runtime_error("weights: write failed");
}

WeightStore load_weights(const std::string& index_path, const std::string& blob_path) {
  std::ifstream idx(index_path);
  if (!idx) throw std::runtime_error("weights: cannot open " + index_path);
  std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
  if (!blob) throw std::runtime_error("weights: cannot open " + blob_path);
  const std::size_t blob_size = static_cast<std::size_t>(blob.tellg());

  std::string header;
  std::getline(idx, header);
  if (header != "tfsep-weights-v1")
    throw std::runtime_error("weights: bad manifest header in " + index_path);

  WeightStore store;
  std::size_t total = 0;
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind, name, dtype, shape_str;
    std::size_t offset = 0;
    ss >> kind >> name >> dtype >> shape_str >> offset;
    if (!ss || kind != "tensor") throw std::runtime_error("weights: malformed line: " + line);
    if (dtype != "f32") throw std::runtime_error("weights: unsupported dtype " + dtype);

    std::vector<int> shape;
    std::istringstream dims(shape_str);
    std::string tok;
    while (std::getline(dims, tok, 'x')) shape.push_back(std::stoi(tok));
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::runtime_error("weights: bad dim in " + line);
      n *= static_cast<std::size_t>(d);
    }
    const std::size_t bytes = n * sizeof(float);
    if (offset + bytes > blob_size)
      throw std::runtime_error("weights: tensor " + name + " exceeds blob bounds");

    std::vector<float> data(n);
    blob.seekg(static_cast<std::streamoff>(offset));
    blob.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!blob) throw std::runtime_error("weights: short read for " + name);
    store.add(name, std::move(shape), std::move(data));
    total += bytes;
  }
  if (total != blob_size)
    throw std::runtime_error("weights: blob size does not match manifest total");
  return store;
}

WeightStore synth_weights(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  WeightStore store;
  for (const TensorSpec& spec : required_tensors(cfg)) {
    std::vector<float> data(spec.numel());
    const bool is_gamma = spec.name.ends_with(".gamma");
    const bool is_beta = spec.name.ends_with(".beta");
    const bool is_prelu = spec.name.ends_with(".prelu");
    const bool is_bias = spec.name.ends_with(".bias");
    if (is_prelu) {
      std::fill(data.begin(), data.end(), 0.25f);
    } else if (is_gamma) {
      for (float& v : data) v = static_cast<float>(1.0 + 0.1 * rng.gaussian());
    } else if (is_beta || is_bias) {
      for (float& v : data) v = static_cast<float>((is_beta ? 0.1 : 0.01) * rng.gaussian());
    } else {
      // fan_in: product of all dims but the first for matrices/convs,
      // matching how each weight contracts against its input.
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < spec.shape.size(); ++i)
        fan_in *= static_cast<std::size_t>(spec.shape[i]);
      const double scale = 0.5 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      for (float& v : data) v = static_cast<float>(scale * rng.gaussian());
    }
    store.add(spec.name, spec.shape, std::move(data));
  }
  return store;
}

}  // namespace tfsep::model
