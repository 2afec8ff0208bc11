#include "crossing/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crossing {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}
std::uint64_t read_u64(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}
double read_f64(std::istream& in, const char* what) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

void write_header(std::ostream& out, const NetworkParams& params, std::uint64_t config_hash) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  write_u32(out, kCheckpointVersion);
  write_u64(out, config_hash);
  const NetworkConfig& cfg = params.cfg;
  write_u32(out, static_cast<std::uint32_t>(cfg.h1));
  write_u32(out, static_cast<std::uint32_t>(cfg.h2));
  write_u32(out, static_cast<std::uint32_t>(cfg.h_ego));
  write_u32(out, static_cast<std::uint32_t>(cfg.h3));
  write_u32(out, static_cast<std::uint32_t>(cfg.recurrent));
  write_u32(out, static_cast<std::uint32_t>(cfg.n_actions));
  write_u32(out, cfg.use_lstm ? 1u : 0u);
  write_u32(out, cfg.share_weights ? 1u : 0u);
  write_f64(out, cfg.dropout_keep);
}

CheckpointInfo read_header(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic, not a checkpoint file");
  CheckpointInfo info;
  info.version = read_u32(in, "version");
  if (info.version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(info.version));
  info.config_hash = read_u64(in, "config hash");
  info.network.h1 = static_cast<int>(read_u32(in, "h1"));
  info.network.h2 = static_cast<int>(read_u32(in, "h2"));
  info.network.h_ego = static_cast<int>(read_u32(in, "h_ego"));
  info.network.h3 = static_cast<int>(read_u32(in, "h3"));
  info.network.recurrent = static_cast<int>(read_u32(in, "recurrent"));
  info.network.n_actions = static_cast<int>(read_u32(in, "n_actions"));
  info.network.use_lstm = read_u32(in, "use_lstm") != 0;
  info.network.share_weights = read_u32(in, "share_weights") != 0;
  info.network.dropout_keep = read_f64(in, "dropout_keep");
  return info;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path.string());
  write_header(out, params, config_hash);

  std::uint32_t n_tensors = 0;
  for_each_tensor(const_cast<NetworkParams&>(params), [&](const std::string&, auto&) { ++n_tensors; });
  write_u32(out, n_tensors);

  for_each_tensor(const_cast<NetworkParams&>(params), [&](const std::string& name, auto& t) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(t.rows()));
    write_u64(out, static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) write_f64(out, t(r, c));
  });

  if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  const CheckpointInfo info = read_header(in);
  info.network.validate();
  if (config_hash_out != nullptr) *config_hash_out = info.config_hash;

  NetworkParams params = init_params(info.network, 0);
  const std::uint32_t n_tensors = read_u32(in, "tensor count");

  std::uint32_t expected = 0;
  for_each_tensor(params, [&](const std::string&, auto&) { ++expected; });
  if (n_tensors != expected)
    throw std::runtime_error("checkpoint: tensor count " + std::to_string(n_tensors) +
                             " does not match the architecture (" + std::to_string(expected) + ")");

  for_each_tensor(params, [&](const std::string& name, auto& t) {
    const std::uint32_t len = read_u32(in, "tensor name length");
    std::string stored(len, '\0');
    if (!in.read(stored.data(), len))
      throw std::runtime_error("checkpoint: truncated while reading tensor name");
    if (stored != name)
      throw std::runtime_error("checkpoint: tensor order mismatch, expected " + name + " got " +
                               stored);
    const auto rows = static_cast<Eigen::Index>(read_u64(in, "tensor rows"));
    const auto cols = static_cast<Eigen::Index>(read_u64(in, "tensor cols"));
    if (rows != t.rows() || cols != t.cols())
      throw std::runtime_error("checkpoint: tensor " + name + " has shape " +
                               std::to_string(rows) + "x" + std::to_string(cols) +
                               ", expected " + std::to_string(t.rows()) + "x" +
                               std::to_string(t.cols()));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = read_f64(in, "tensor data");
  });

  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("checkpoint: trailing bytes after the last tensor");
  return params;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open: " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  CheckpointInfo info = read_header(in);
  const std::uint32_t n_tensors = read_u32(in, "tensor count");
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    TensorInfo t;
    const std::uint32_t len = read_u32(in, "tensor name length");
    t.name.resize(len);
    if (!in.read(t.name.data(), len))
      throw std::runtime_error("checkpoint: truncated while reading tensor name");
    t.rows = read_u64(in, "tensor rows");
    t.cols = read_u64(in, "tensor cols");
    in.seekg(static_cast<std::streamoff>(t.rows * t.cols * sizeof(double)), std::ios::cur);
    if (!in) throw std::runtime_error("checkpoint: truncated tensor data for " + t.name);
    info.tensors.push_back(std::move(t));
  }
  return info;
}

}  // namespace crossing
