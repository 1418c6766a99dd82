#include "dikd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

namespace dikd {

namespace {

constexpr char kMagic[4] = {'D', 'I', 'K', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& f, const std::string& path) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Params<float>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kMagic, 4);
  write_raw(f, kVersion);
  write_raw(f, uint32_t(params.size()));
  for (const auto& [name, t] : params) {
    if (name.size() > 0xffff)
      throw std::runtime_error("checkpoint: parameter name too long");
    write_raw(f, uint16_t(name.size()));
    f.write(name.data(), std::streamsize(name.size()));
    write_raw(f, uint8_t(t.shape().size()));
    for (int d : t.shape()) write_raw(f, uint32_t(d));
    f.write(reinterpret_cast<const char*>(t.data().data()),
            std::streamsize(t.data().size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

Params<float> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a DIKD checkpoint: " + path);
  const auto version = read_raw<uint32_t>(f, path);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  const auto count = read_raw<uint32_t>(f, path);
  Params<float> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<uint16_t>(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto rank = read_raw<uint8_t>(f, path);
    Shape shape(rank);
    for (int d = 0; d < rank; ++d) shape[d] = int(read_raw<uint32_t>(f, path));
    std::vector<float> data(size_t(numel(shape)));
    f.read(reinterpret_cast<char*>(data.data()),
           std::streamsize(data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    out.emplace_back(std::move(name),
                     TensorT<float>::from(std::move(shape), std::move(data)));
  }
  return out;
}

void apply_checkpoint(Params<float>& target, const Params<float>& loaded) {
  std::unordered_map<std::string, const TensorT<float>*> index;
  for (const auto& [name, t] : loaded) index[name] = &t;
  for (auto& [name, t] : target) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::runtime_error("checkpoint missing parameter '" + name + "'");
    if (it->second->shape() != t.shape())
      throw ShapeError("checkpoint parameter '" + name + "' has shape " +
                       shape_str(it->second->shape()) + ", expected " +
                       shape_str(t.shape()));
    t.data() = it->second->data();
  }
}

}  // namespace dikd
