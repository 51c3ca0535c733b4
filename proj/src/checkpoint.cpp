#include "graphtts/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace graphtts {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, sizeof(U));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw CheckpointError(std::string("truncated container while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

NamedTensors from_store(const ParamStore& params) {
  NamedTensors out;
  for (const auto& [name, p] : params) out.emplace_back(name, p.value);
  return out;
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kContainerMagic, sizeof(kContainerMagic));
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
    for (double v : t.data()) put_le<double>(out, v);
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

NamedTensors read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[sizeof(kContainerMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kContainerMagic, sizeof(magic)) != 0) {
    throw CheckpointError(path.string() + ": not a tensor container (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kContainerVersion) {
    throw CheckpointError(path.string() + ": unsupported container version " +
                          std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in, "count");
  NamedTensors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in, "name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError("truncated container while reading name");
    const auto rank = get_le<std::uint32_t>(in, "rank");
    if (rank == 0 || rank > 8) throw CheckpointError(name + ": implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(in, "dims"));
    const std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (auto& v : data) v = get_le<double>(in, "data");
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  write_tensors(path, from_store(params));
}

void load_params(const std::filesystem::path& path, ParamStore& params) {
  NamedTensors tensors = read_tensors(path);
  if (tensors.size() != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto& [name, t] : tensors) {
    if (!params.contains(name)) throw CheckpointError("unexpected tensor in checkpoint: " + name);
    Tensor& dst = params.value(name);
    if (dst.shape() != t.shape()) {
      throw CheckpointError(name + ": shape " + shape_str(t.shape()) + " vs model " +
                            shape_str(dst.shape()));
    }
    dst = std::move(t);
  }
}

std::string tensor_manifest(const NamedTensors& tensors) {
  std::ostringstream out;
  for (const auto& [name, t] : tensors) out << name << '\t' << shape_str(t.shape()) << '\n';
  return out.str();
}

std::string tensor_manifest(const ParamStore& params) { return tensor_manifest(from_store(params)); }

}  // namespace graphtts
