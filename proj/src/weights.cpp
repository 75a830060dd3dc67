#include "edgeadain/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "edgeadain/image.hpp"

namespace edgeadain {
namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::uint64_t element_count(const std::vector<std::int64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= static_cast<std::uint64_t>(d);
  return n;
}

}  // namespace

void save_container(const std::filesystem::path& dir, std::span<const TensorView> tensors) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "edgeadain-weights";
  manifest["version"] = 1;
  manifest["tensors"] = nlohmann::ordered_json::array();

  std::ofstream blob(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!blob) throw Error("cannot write " + (dir / "weights.bin").string());
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    if (element_count(t.shape) != t.values.size()) {
      throw Error("tensor " + t.name + ": shape " + shape_string(t.shape) + " does not match " +
                  std::to_string(t.values.size()) + " values");
    }
    const std::uint64_t length = t.values.size() * sizeof(float);
    for (float v : t.values) {
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(v));
      blob.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    nlohmann::ordered_json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    entry["dtype"] = "f32";
    entry["offset"] = offset;
    entry["length"] = length;
    manifest["tensors"].push_back(std::move(entry));
    offset += length;
  }
  if (!blob) throw Error("failed writing " + (dir / "weights.bin").string());

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

WeightContainer WeightContainer::load(const std::filesystem::path& dir) {
  WeightContainer c;
  c.dir_ = dir;
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("missing manifest: " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    for (const auto& e : manifest.at("tensors")) {
      const std::string name = e.at("name").get<std::string>();
      if (e.at("dtype").get<std::string>() != "f32") {
        throw Error("layer " + name + ": unsupported dtype");
      }
      Entry entry{e.at("shape").get<std::vector<std::int64_t>>(), e.at("offset").get<std::uint64_t>(),
                  e.at("length").get<std::uint64_t>()};
      if (entry.length != element_count(entry.shape) * sizeof(float)) {
        throw Error("layer " + name + ": length does not match shape");
      }
      if (!c.entries_.emplace(name, std::move(entry)).second) {
        throw Error("layer " + name + ": duplicate manifest entry");
      }
      c.order_.push_back(name);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error("corrupt manifest " + (dir / "manifest.json").string() + ": " + ex.what());
  }
  std::ifstream blob(dir / "weights.bin", std::ios::binary);
  if (!blob) throw Error("missing blob: " + (dir / "weights.bin").string());
  c.blob_.assign(std::istreambuf_iterator<char>(blob), std::istreambuf_iterator<char>());
  return c;
}

std::vector<float> WeightContainer::get(const std::string& name,
                                        const std::vector<std::int64_t>& shape) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("missing layer " + name + " in " + dir_.string());
  const Entry& e = it->second;
  if (e.shape != shape) {
    throw Error("layer " + name + ": shape " + shape_string(e.shape) + " expected " +
                shape_string(shape));
  }
  if (e.offset + e.length > blob_.size()) throw Error("truncated blob for layer " + name);
  std::vector<float> values(e.length / sizeof(float));
  const unsigned char* p = blob_.data() + e.offset;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, p + i * sizeof bits, sizeof bits);
    values[i] = std::bit_cast<float>(to_little(bits));
  }
  return values;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fnv1a(bytes);
}

}  // namespace edgeadain
