#include "hoir/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hoir/nn/model_json.hpp"

namespace hoir::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'O', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_bytes(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void write_u32(std::ostream& out, uint32_t x) { write_bytes(out, &x, 4); }
void write_u64(std::ostream& out, uint64_t x) { write_bytes(out, &x, 8); }
void write_str(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}
void write_floats(std::ostream& out, const std::vector<float>& v) {
  write_bytes(out, v.data(), v.size() * sizeof(float));
}

void read_bytes(std::istream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw IoError("checkpoint: truncated file");
}
uint32_t read_u32(std::istream& in) {
  uint32_t x;
  read_bytes(in, &x, 4);
  return x;
}
uint64_t read_u64(std::istream& in) {
  uint64_t x;
  read_bytes(in, &x, 8);
  return x;
}
std::string read_str(std::istream& in) {
  const uint32_t n = read_u32(in);
  if (n > (1u << 20)) throw IoError("checkpoint: implausible string length");
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}
std::vector<float> read_floats(std::istream& in, size_t n) {
  std::vector<float> v(n);
  read_bytes(in, v.data(), n * sizeof(float));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ParamStore<float>& params, const Adam<float>* opt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  write_bytes(out, kMagic, 4);
  write_u32(out, kVersion);
  write_str(out, model_config_to_json(cfg).dump());
  write_u32(out, static_cast<uint32_t>(params.entries.size()));
  for (const auto& e : params.entries) {
    write_str(out, e.name);
    write_u32(out, static_cast<uint32_t>(e.rows));
    write_u32(out, static_cast<uint32_t>(e.cols));
    write_floats(out, e.value);
  }
  const uint8_t has_opt = opt ? 1 : 0;
  write_bytes(out, &has_opt, 1);
  if (opt) {
    if (opt->moments_m().size() != params.entries.size())
      throw NnError("checkpoint: optimizer blocks do not match parameter blocks");
    write_u64(out, static_cast<uint64_t>(opt->step_count()));
    for (size_t i = 0; i < params.entries.size(); ++i) {
      write_floats(out, opt->moments_m()[i]);
      write_floats(out, opt->moments_v()[i]);
    }
  }
  out.flush();
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  read_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint: bad magic: " + path);
  const uint32_t version = read_u32(in);
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  try {
    ckpt.config = model_config_from_json(nlohmann::json::parse(read_str(in)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad descriptor: ") + e.what());
  }
  const auto declared = Model<float>::declare(ckpt.config);

  const uint32_t count = read_u32(in);
  if (count != declared.entries.size())
    throw IoError("checkpoint: block count does not match the descriptor");
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = read_str(in);
    const uint32_t rows = read_u32(in), cols = read_u32(in);
    const auto& decl = declared.entries[i];
    if (name != decl.name || static_cast<int>(rows) != decl.rows ||
        static_cast<int>(cols) != decl.cols)
      throw IoError("checkpoint: block " + name + " does not match the descriptor");
    auto& e = ckpt.params.add(name, static_cast<int>(rows), static_cast<int>(cols));
    e.value = read_floats(in, static_cast<size_t>(rows) * cols);
  }

  uint8_t has_opt = 0;
  read_bytes(in, &has_opt, 1);
  if (has_opt) {
    OptimizerState st;
    st.step = static_cast<int64_t>(read_u64(in));
    st.m.resize(count);
    st.v.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
      const size_t n = ckpt.params.entries[i].value.size();
      st.m[i] = read_floats(in, n);
      st.v[i] = read_floats(in, n);
    }
    ckpt.opt = std::move(st);
  }
  return ckpt;
}

}  // namespace hoir::nn
