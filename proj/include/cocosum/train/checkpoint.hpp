#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocosum/model/config.hpp"
#include "cocosum/model/model.hpp"
#include "cocosum/tensor.hpp"
#include "cocosum/train/adamw.hpp"
#include "cocosum/train/config.hpp"
#include "cocosum/vocab.hpp"

namespace cocosum {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>, "checkpoint arrays are float or double");
  return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

inline std::size_t dtype_bytes(DType d) { return d == DType::f32 ? 4 : 8; }

/// Raw array payload tagged with its element type.
struct NamedArray {
  std::string name;
  DType dtype = DType::f64;
  Shape shape;
  std::vector<std::uint8_t> bytes;

  template <typename T>
  static NamedArray from(std::string name, Shape shape, std::span<const T> values) {
    NamedArray a{std::move(name), dtype_of<T>(), std::move(shape), {}};
    a.bytes.resize(values.size() * sizeof(T));
    if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
    return a;
  }

  template <typename T>
  std::vector<T> values() const {
    if (dtype != dtype_of<T>()) throw CheckpointError("array " + name + " has a different element type");
    std::vector<T> out(bytes.size() / sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
  }

  bool operator==(const NamedArray&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr char kMagic[4] = {'C', 'C', 'S', 'M'};

  ModelConfig model;
  TrainConfig train;
  Vocabularies vocabs;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::string rng_state;
  double best_val_loss = 0.0;
  std::vector<NamedArray> params;
  std::vector<NamedArray> adam_m;
  std::vector<NamedArray> adam_v;

  DType dtype() const { return params.empty() ? DType::f64 : params.front().dtype; }

  bool operator==(const Checkpoint& o) const {
    return model == o.model && train == o.train && vocabs.code == o.vocabs.code && vocabs.sbt == o.vocabs.sbt &&
           vocabs.summary == o.vocabs.summary && epoch == o.epoch && step == o.step && rng_state == o.rng_state &&
           best_val_loss == o.best_val_loss && params == o.params && adam_m == o.adam_m && adam_v == o.adam_v;
  }
};

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, const TrainConfig& train, const Vocabularies& vocabs,
                           const AdamMoments<T>* moments = nullptr) {
  Checkpoint c;
  c.model = model.config();
  c.train = train;
  c.vocabs = vocabs;
  const auto& entries = model.store().entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& [name, t] = entries[k];
    c.params.push_back(NamedArray::from<T>(name, t.shape(), t.data()));
    if (moments) {
      c.adam_m.push_back(NamedArray::from<T>(name, t.shape(), std::span<const T>(moments->m.at(k))));
      c.adam_v.push_back(NamedArray::from<T>(name, t.shape(), std::span<const T>(moments->v.at(k))));
    }
  }
  if (moments) c.step = moments->step;
  return c;
}

/// Copies checkpoint arrays into the model, checking names and shapes.
template <typename T>
void load_parameters(Model<T>& model, const Checkpoint& c) {
  auto& entries = model.store().entries();
  if (c.params.size() != entries.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(c.params.size()) + " parameters, model expects " +
                         std::to_string(entries.size()));
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& [name, t] = entries[k];
    const auto& a = c.params[k];
    if (a.name != name) throw DimensionError("checkpoint parameter " + a.name + " found where " + name + " expected");
    if (a.shape != t.shape()) {
      throw DimensionError("parameter " + name + ": checkpoint shape " + shape_string(a.shape) +
                           " does not match model shape " + shape_string(t.shape()));
    }
    auto values = a.values<T>();
    auto dst = model.store().get(name).mutable_data();
    std::copy(values.begin(), values.end(), dst.begin());
  }
}

template <typename T>
AdamMoments<T> load_moments(const Checkpoint& c) {
  AdamMoments<T> m;
  if (c.adam_m.size() != c.params.size() || c.adam_v.size() != c.params.size()) {
    throw CheckpointError("checkpoint carries no optimizer state");
  }
  for (std::size_t k = 0; k < c.params.size(); ++k) {
    m.m.push_back(c.adam_m[k].values<T>());
    m.v.push_back(c.adam_v[k].values<T>());
  }
  m.step = c.step;
  return m;
}

namespace detail {

template <typename U>
void put(std::string& out, U v) {
  static_assert(std::is_trivially_copyable_v<U>);
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  template <typename U>
  U get(const char* what) {
    U v;
    need(sizeof(U), what);
    std::memcpy(&v, data_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (n > data_.size() - pos_) {
      throw CheckpointError("checkpoint " + path_ + ": truncated while reading " + what + " at byte " +
                            std::to_string(pos_));
    }
  }

  const std::string& data_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

inline void put_arrays(std::string& out, const std::vector<NamedArray>& arrays) {
  put<std::uint64_t>(out, arrays.size());
  for (const auto& a : arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::uint64_t>(out, d);
    put<std::uint64_t>(out, a.bytes.size());
    out.append(reinterpret_cast<const char*>(a.bytes.data()), a.bytes.size());
  }
}

inline std::vector<NamedArray> get_arrays(Reader& in, const std::string& path) {
  const auto count = in.get<std::uint64_t>("array count");
  std::vector<NamedArray> arrays;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = in.bytes(in.get<std::uint32_t>("name length"), "array name");
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype != static_cast<std::uint8_t>(DType::f32) && dtype != static_cast<std::uint8_t>(DType::f64)) {
      throw CheckpointError("checkpoint " + path + ": array " + a.name + " has unknown dtype " + std::to_string(dtype));
    }
    a.dtype = static_cast<DType>(dtype);
    const auto ndim = in.get<std::uint32_t>("rank");
    for (std::uint32_t d = 0; d < ndim; ++d) a.shape.push_back(in.get<std::uint64_t>("dimension"));
    const auto n = in.get<std::uint64_t>("payload size");
    if (n != shape_size(a.shape) * dtype_bytes(a.dtype)) {
      throw CheckpointError("checkpoint " + path + ": array " + a.name + " payload of " + std::to_string(n) +
                            " bytes does not match shape " + shape_string(a.shape));
    }
    const std::string raw = in.bytes(n, "array payload");
    a.bytes.assign(raw.begin(), raw.end());
    arrays.push_back(std::move(a));
  }
  return arrays;
}

}  // namespace detail

/// Layout: magic, u32 version, u64 header length, JSON header, then three
/// array tables (parameters, first moments, second moments). No timestamps,
/// so equal state gives equal bytes.
inline std::string serialize_checkpoint(const Checkpoint& c) {
  nlohmann::json header{{"model", c.model},
                        {"train", c.train},
                        {"vocab", {{"code", c.vocabs.code.tokens()},
                                   {"sbt", c.vocabs.sbt.tokens()},
                                   {"summary", c.vocabs.summary.tokens()}}},
                        {"epoch", c.epoch},
                        {"step", c.step},
                        {"rng_state", c.rng_state},
                        {"best_val_loss", c.best_val_loss}};
  const std::string text = header.dump();
  std::string out(Checkpoint::kMagic, 4);
  detail::put<std::uint32_t>(out, Checkpoint::kVersion);
  detail::put<std::uint64_t>(out, text.size());
  out += text;
  detail::put_arrays(out, c.params);
  detail::put_arrays(out, c.adam_m);
  detail::put_arrays(out, c.adam_v);
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& data, const std::string& path = "<memory>") {
  if (data.size() < 4 || data.compare(0, 4, Checkpoint::kMagic, 4) != 0) {
    throw CheckpointError("checkpoint " + path + ": bad magic, not a checkpoint file");
  }
  detail::Reader in(data, path);
  in.bytes(4, "magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("checkpoint " + path + ": format version " + std::to_string(version) + ", expected " +
                          std::to_string(Checkpoint::kVersion));
  }
  const auto header_len = in.get<std::uint64_t>("header length");
  Checkpoint c;
  try {
    const auto header = nlohmann::json::parse(in.bytes(header_len, "header"));
    c.model = header.at("model").get<ModelConfig>();
    c.train = header.at("train").get<TrainConfig>();
    c.vocabs.code = Vocab::from_tokens(header.at("vocab").at("code").get<std::vector<std::string>>());
    c.vocabs.sbt = Vocab::from_tokens(header.at("vocab").at("sbt").get<std::vector<std::string>>());
    c.vocabs.summary = Vocab::from_tokens(header.at("vocab").at("summary").get<std::vector<std::string>>());
    c.epoch = header.at("epoch").get<std::uint64_t>();
    c.step = header.at("step").get<std::uint64_t>();
    c.rng_state = header.at("rng_state").get<std::string>();
    c.best_val_loss = header.at("best_val_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path + ": malformed header: " + e.what());
  }
  c.params = detail::get_arrays(in, path);
  c.adam_m = detail::get_arrays(in, path);
  c.adam_v = detail::get_arrays(in, path);
  if (!in.done()) throw CheckpointError("checkpoint " + path + ": trailing bytes after the last array");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  const std::string data = serialize_checkpoint(c);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(data, path);
}

}  // namespace cocosum
