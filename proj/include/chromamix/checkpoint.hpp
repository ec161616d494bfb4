#ifndef CHROMAMIX_CHECKPOINT_HPP_
#define CHROMAMIX_CHECKPOINT_HPP_

// Binary checkpoint layout (little-endian):
//   8 bytes   magic "CHMXCKPT"
//   u32       format version
//   u64       manifest length, then the manifest text (a resolved spec)
//   u64 x 3   network inputs, hidden width, actions
//   u64       parameter count, then that many f64

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "chromamix/network.hpp"

namespace chromamix {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::array<char, 8> kCheckpointMagic{'C', 'H', 'M', 'X', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string manifest;
  PolicyValueNet net;
};

namespace detail {

template <class T>
void put(std::ostream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& c) {
  std::ostringstream o(std::ios::binary);
  o.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put<std::uint32_t>(o, kCheckpointVersion);
  detail::put<std::uint64_t>(o, c.manifest.size());
  o.write(c.manifest.data(), static_cast<std::streamsize>(c.manifest.size()));
  const auto& s = c.net.shape();
  detail::put<std::uint64_t>(o, s.inputs);
  detail::put<std::uint64_t>(o, s.hidden);
  detail::put<std::uint64_t>(o, s.actions);
  const auto p = c.net.params();
  detail::put<std::uint64_t>(o, p.size());
  o.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  return o.str();
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) throw std::runtime_error("not a checkpoint file");
  const auto version = detail::take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto mlen = detail::take<std::uint64_t>(in);
  if (mlen > bytes.size()) throw std::runtime_error("checkpoint truncated");
  c.manifest.resize(mlen);
  in.read(c.manifest.data(), static_cast<std::streamsize>(mlen));
  PolicyValueNet::Shape shape;
  shape.inputs = detail::take<std::uint64_t>(in);
  shape.hidden = detail::take<std::uint64_t>(in);
  shape.actions = detail::take<std::uint64_t>(in);
  c.net = PolicyValueNet(shape);
  const auto n = detail::take<std::uint64_t>(in);
  if (n != c.net.size()) throw std::runtime_error("checkpoint parameter count does not match its shape");
  auto p = c.net.params();
  in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  const std::string bytes = encode_checkpoint(c);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace chromamix

#endif  // CHROMAMIX_CHECKPOINT_HPP_
