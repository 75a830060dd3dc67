#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace edgeadain {

/// Read-only view of one named tensor to be written into a container.
struct TensorView {
  std::string name;
  std::vector<std::int64_t> shape;
  std::span<const float> values;
};

/// Writes `<dir>/manifest.json` (ordered entries: name, shape, dtype "f32",
/// offset, length in bytes) and `<dir>/weights.bin` (little-endian, row-major).
void save_container(const std::filesystem::path& dir, std::span<const TensorView> tensors);

/// Loaded container. Lookups validate presence, shape and blob bounds and name the layer on failure.
class WeightContainer {
 public:
  static WeightContainer load(const std::filesystem::path& dir);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<float> get(const std::string& name, const std::vector<std::int64_t>& shape) const;
  std::vector<std::string> names() const { return order_; }

 private:
  struct Entry {
    std::vector<std::int64_t> shape;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
  };
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  std::vector<unsigned char> blob_;
  std::filesystem::path dir_;
};

/// 64-bit FNV-1a over a file's bytes.
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace edgeadain
