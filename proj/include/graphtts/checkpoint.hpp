#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphtts/param_store.hpp"
#include "graphtts/tensor.hpp"

namespace graphtts {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named-tensor container, little-endian:
///   "GTTSTNSR" | u32 version | u32 count |
///   count x (u32 name_len | name | u32 rank | u64 dims[rank] | f64 data[numel])
inline constexpr char kContainerMagic[8] = {'G', 'T', 'T', 'S', 'T', 'N', 'S', 'R'};
inline constexpr std::uint32_t kContainerVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_tensors(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const ParamStore& params);
/// Overwrites values of an existing store; names and shapes must match exactly.
void load_params(const std::filesystem::path& path, ParamStore& params);

/// One "name<TAB>shape" line per tensor, in container order.
std::string tensor_manifest(const NamedTensors& tensors);
std::string tensor_manifest(const ParamStore& params);

}  // namespace graphtts
