#include "imm/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "imm/error.hpp"

namespace imm::model {
namespace {

constexpr const char* kMagic = "imm-checkpoint";
constexpr int kVersion = 1;
constexpr const char* kConfigPrefix = "config.";

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(bits);
  return bits;
}

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
    throw DataError(std::string("checkpoint ") + what + " '" + s + "' must be a single token");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ostringstream header;
  header << kMagic << ' ' << kVersion << '\n';
  for (const auto& [k, v] : checkpoint.config.to_map()) {
    header << "meta " << kConfigPrefix << k << ' ' << v << '\n';
  }
  for (const auto& [k, v] : checkpoint.meta) {
    check_token(k, "meta key");
    check_token(v, "meta value");
    header << "meta " << k << ' ' << v << '\n';
  }
  std::uint64_t offset = 0;
  for (const auto& e : checkpoint.params.entries()) {
    check_token(e.name, "tensor name");
    header << "tensor " << e.name << ' ' << e.tensor.rank();
    for (std::size_t d : e.tensor.shape()) header << ' ' << d;
    header << ' ' << offset << '\n';
    offset += e.tensor.size() * sizeof(double);
  }
  header << "data " << offset << '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string text = header.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& e : checkpoint.params.entries()) {
    for (double v : e.tensor.values()) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      char bytes[8];
      std::memcpy(bytes, &bits, 8);
      out.write(bytes, 8);
    }
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty checkpoint " + path.string());
  {
    std::istringstream first(line);
    std::string magic;
    int version = 0;
    first >> magic >> version;
    if (magic != kMagic || version != kVersion) {
      throw DataError("not a version-1 checkpoint: " + path.string());
    }
  }
  struct Pending {
    std::string name;
    ad::Shape shape;
    std::uint64_t offset;
  };
  std::vector<Pending> pending;
  std::map<std::string, std::string> config_kv;
  Checkpoint result;
  std::uint64_t payload = 0;
  bool saw_data = false;
  while (!saw_data && std::getline(in, line)) {
    std::istringstream row(line);
    std::string kind;
    row >> kind;
    if (kind == "meta") {
      std::string key, value;
      if (!(row >> key >> value)) throw DataError("malformed checkpoint meta line: " + line);
      if (key.rfind(kConfigPrefix, 0) == 0) {
        config_kv[key.substr(std::strlen(kConfigPrefix))] = value;
      } else {
        result.meta[key] = value;
      }
    } else if (kind == "tensor") {
      Pending p;
      std::size_t rank = 0;
      if (!(row >> p.name >> rank) || rank == 0) {
        throw DataError("malformed checkpoint tensor line: " + line);
      }
      p.shape.resize(rank);
      for (auto& d : p.shape) row >> d;
      if (!(row >> p.offset)) throw DataError("malformed checkpoint tensor line: " + line);
      pending.push_back(std::move(p));
    } else if (kind == "data") {
      if (!(row >> payload)) throw DataError("malformed checkpoint data line");
      saw_data = true;
    } else {
      throw DataError("unexpected checkpoint line: " + line);
    }
  }
  if (!saw_data) throw DataError("checkpoint has no data section: " + path.string());

  std::vector<char> bytes(payload);
  in.read(bytes.data(), static_cast<std::streamsize>(payload));
  if (static_cast<std::uint64_t>(in.gcount()) != payload) {
    throw DataError("truncated checkpoint payload: " + path.string());
  }
  try {
    result.config = ModelConfig::from_map(config_kv);
  } catch (const std::exception& e) {
    throw DataError(std::string("bad checkpoint config: ") + e.what());
  }
  for (auto& p : pending) {
    const std::size_t n = ad::shape_size(p.shape);
    if (p.offset + n * 8 > payload) throw DataError("tensor '" + p.name + "' overruns payload");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + p.offset + i * 8, 8);
      values[i] = std::bit_cast<double>(to_little_endian(bits));
    }
    result.params.add(p.name, ad::Tensor(p.shape, std::move(values)));
  }
  return result;
}

}  // namespace imm::model
