// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Binary model checkpoint: magic, version, config block, named arrays
 *         (values and Adam moments), trailing FNV-1a checksum.
 *
 * Layout (little-endian):
 *   "RSKQCKPT" u32 version
 *   config: u32 arch, u64 d_text, u64 hidden, f64 dropout, u8 decay, u8 emotion,
 *           u8 attention, u8 pooling, u64 init_seed
 *   u64 adam step, u32 count, then per array:
 *     u32 name length, name, u32 rank, u64 dims[rank], f64 value, f64 m, f64 v (each size)
 *   u64 checksum of every preceding byte
 */
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <string_view>

#include "io.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "random.hpp"

namespace riskseq {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

inline constexpr std::string_view kCheckpointMagic = "RSKQCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
};

namespace detail {

class ByteWriter {
public:
  template <typename T> void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_bytes(std::string_view s) { out_.append(s); }
  void put_doubles(std::span<const double> v) {
    for (double x : v)
      put(x);
  }
  std::string &data() { return out_; }

private:
  std::string out_;
};

class ByteReader {
public:
  ByteReader(std::string_view data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T> T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void get_doubles(std::span<double> out) {
    for (double &x : out)
      x = get<double>();
  }
  std::size_t remaining() const { return data_.size() - pos_; }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      fail(ErrorKind::Integrity, "checkpoint '" + path_ + "' is truncated");
  }
  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_checkpoint(const ModelConfig &config, const ParameterSet &params) {
  config.validate();
  check_parameters(config, params);
  detail::ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(config.architecture));
  w.put(static_cast<std::uint64_t>(config.d_text));
  w.put(static_cast<std::uint64_t>(config.hidden));
  w.put(config.dropout_rate);
  w.put(static_cast<std::uint8_t>(config.use_decay));
  w.put(static_cast<std::uint8_t>(config.use_emotion));
  w.put(static_cast<std::uint8_t>(config.use_attention));
  w.put(static_cast<std::uint8_t>(config.pooling));
  w.put(config.init_seed);
  w.put(params.step());
  w.put(static_cast<std::uint32_t>(params.values().size()));
  for (const auto &[name, value] : params.values()) {
    w.put(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put(static_cast<std::uint32_t>(value.rank()));
    for (auto d : value.shape())
      w.put(static_cast<std::uint64_t>(d));
    w.put_doubles(value.values());
    w.put_doubles(params.first_moment(name).values());
    w.put_doubles(params.second_moment(name).values());
  }
  const std::uint64_t sum = fnv1a64(w.data());
  w.put(sum);
  return std::move(w.data());
}

inline Checkpoint deserialize_checkpoint(std::string_view data, const std::string &path) {
  if (data.size() < kCheckpointMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    fail(ErrorKind::Integrity, "checkpoint '" + path + "' is truncated");
  if (data.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    fail(ErrorKind::Integrity, "'" + path + "' is not a checkpoint (bad magic)");
  const auto body = data.substr(0, data.size() - sizeof(std::uint64_t));
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + body.size(), sizeof(stored));

  detail::ByteReader r(body, path);
  r.get_bytes(kCheckpointMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorKind::Incompatible, "checkpoint '" + path + "' has version " +
                                      std::to_string(version) + ", expected " +
                                      std::to_string(kCheckpointVersion));
  if (fnv1a64(body) != stored)
    fail(ErrorKind::Integrity, "checkpoint '" + path + "' failed its checksum");

  Checkpoint ck;
  const auto arch = r.get<std::uint32_t>();
  if (arch >= kAllArchitectures.size())
    fail(ErrorKind::Integrity, "checkpoint '" + path + "' names an unknown architecture");
  ck.config.architecture = static_cast<Architecture>(arch);
  ck.config.d_text = r.get<std::uint64_t>();
  ck.config.hidden = r.get<std::uint64_t>();
  ck.config.dropout_rate = r.get<double>();
  ck.config.use_decay = r.get<std::uint8_t>() != 0;
  ck.config.use_emotion = r.get<std::uint8_t>() != 0;
  ck.config.use_attention = r.get<std::uint8_t>() != 0;
  ck.config.pooling = static_cast<Pooling>(r.get<std::uint8_t>());
  ck.config.init_seed = r.get<std::uint64_t>();
  const auto step = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Array> first, second;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name = r.get_bytes(r.get<std::uint32_t>());
    Shape shape(r.get<std::uint32_t>());
    for (auto &d : shape)
      d = r.get<std::uint64_t>();
    // Guard against absurd sizes before allocating.
    if (shape_size(shape) > r.remaining() / sizeof(double))
      fail(ErrorKind::Integrity, "checkpoint '" + path + "' is truncated");
    Array value(shape), m(shape), v(shape);
    r.get_doubles(value.values());
    r.get_doubles(m.values());
    r.get_doubles(v.values());
    ck.params.add(name, std::move(value));
    first.emplace(name, std::move(m));
    second.emplace(name, std::move(v));
  }
  if (r.remaining() != 0)
    fail(ErrorKind::Integrity, "checkpoint '" + path + "' has trailing bytes");
  ck.params.restore_state(step, std::move(first), std::move(second));
  ck.config.validate();
  check_parameters(ck.config, ck.params);
  return ck;
}

inline void save_checkpoint(const ParameterSet &params, const ModelConfig &config,
                            const std::string &path) {
  write_file_atomic(path, serialize_checkpoint(config, params));
}

inline Checkpoint load_checkpoint(const std::string &path) {
  const std::string data = read_file(path);
  return deserialize_checkpoint(data, path);
}

/// Loads a checkpoint that must match the expected architecture and widths.
inline Checkpoint load_checkpoint(const std::string &path, const ModelConfig &expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.config.architecture != expected.architecture || ck.config.d_text != expected.d_text ||
      ck.config.hidden != expected.hidden)
    fail(ErrorKind::Incompatible,
         "checkpoint '" + path + "' holds " + std::string(to_string(ck.config.architecture)) +
             " (d_text " + std::to_string(ck.config.d_text) + ", hidden " +
             std::to_string(ck.config.hidden) + "), expected " +
             std::string(to_string(expected.architecture)) + " (d_text " +
             std::to_string(expected.d_text) + ", hidden " + std::to_string(expected.hidden) +
             ")");
  return ck;
}

} // namespace riskseq
