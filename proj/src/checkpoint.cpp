#include "pizero/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "pizero/error.hpp"

namespace pizero::cli {

namespace {

constexpr char kMagic[4] = {'P', 'Z', 'C', 'K'};

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_array(std::vector<unsigned char>& out, const std::vector<double>& values) {
  put<std::uint64_t>(out, values.size());
  for (double v : values) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw CheckpointError("checkpoint truncated");
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }

  std::vector<double> get_array() {
    const auto count = get<std::uint64_t>();
    if (count > (bytes_.size() - pos_) / 8) throw CheckpointError("checkpoint truncated");
    std::vector<double> values(count);
    for (auto& v : values) v = std::bit_cast<double>(get<std::uint64_t>());
    return values;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& c) {
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, c.config_hash);
  put<std::uint64_t>(out, c.state.generation);
  put<std::uint64_t>(out, c.state.adam.step);
  put_array(out, c.state.theta);
  put_array(out, c.state.adam.m);
  put_array(out, c.state.adam.v);
  put_array(out, {c.state.adam.beta1, c.state.adam.beta2, c.state.adam.epsilon});
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  Reader in(bytes);
  in.get<std::uint32_t>();
  const auto version = in.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  Checkpoint c;
  c.config_hash = in.get<std::uint64_t>();
  c.state.generation = in.get<std::uint64_t>();
  c.state.adam.step = in.get<std::uint64_t>();
  c.state.theta = in.get_array();
  c.state.adam.m = in.get_array();
  c.state.adam.v = in.get_array();
  const auto hyper = in.get_array();
  if (hyper.size() != 3 || c.state.adam.m.size() != c.state.theta.size() ||
      c.state.adam.v.size() != c.state.theta.size() || !in.at_end()) {
    throw CheckpointError("checkpoint arrays are inconsistent");
  }
  c.state.adam.beta1 = hyper[0];
  c.state.adam.beta2 = hyper[1];
  c.state.adam.epsilon = hyper[2];
  return c;
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace pizero::cli
