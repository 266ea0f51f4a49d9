#include "sesr/weight_file.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace sesr {

namespace {

constexpr std::uint8_t kMagic[6] = {'S', 'E', 'S', 'R', '1', '\0'};
constexpr std::uint16_t kVersion = 1;

void append_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void append_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
  append_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::uint16_t checked_u16(std::int64_t v, const char* what) {
  if (v < 0 || v > 0xffff) {
    throw std::invalid_argument(std::string("weight file: ") + what + " out of u16 range");
  }
  return static_cast<std::uint16_t>(v);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw std::runtime_error("weight file: truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                      static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

std::vector<std::uint8_t> serialize_weight_file(const WeightFile& file) {
  file.spec.validate();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 6);
  append_u16(out, kVersion);
  append_u8(out, static_cast<std::uint8_t>(file.spec.scale));
  append_u16(out, checked_u16(file.spec.f, "f"));
  append_u16(out, checked_u16(file.spec.m, "m"));
  append_u16(out, checked_u16(file.spec.p, "p"));
  std::uint8_t variant = 0;
  if (file.spec.use_linear_blocks) variant |= 1u << 0;
  if (file.spec.use_short_residuals) variant |= 1u << 1;
  if (file.spec.use_input_residual) variant |= 1u << 2;
  if (file.spec.activation == ActKind::ReLU) variant |= 1u << 3;
  append_u8(out, variant);
  append_u8(out, static_cast<std::uint8_t>(file.form));

  // Canonical order: every tensor sorted by name, kernels and vectors merged.
  std::uint32_t count = static_cast<std::uint32_t>(file.store.kernels.size() +
                                                   file.store.vectors.size());
  append_u32(out, count);

  auto write_name = [&out](const std::string& name) {
    append_u16(out, checked_u16(static_cast<std::int64_t>(name.size()), "name length"));
    out.insert(out.end(), name.begin(), name.end());
  };

  auto k_it = file.store.kernels.begin();
  auto v_it = file.store.vectors.begin();
  while (k_it != file.store.kernels.end() || v_it != file.store.vectors.end()) {
    const bool take_kernel =
        v_it == file.store.vectors.end() ||
        (k_it != file.store.kernels.end() && k_it->first < v_it->first);
    if (take_kernel) {
      const auto& [name, k] = *k_it++;
      if (file.store.vectors.count(name)) {
        throw std::invalid_argument("weight file: duplicate tensor name " + name);
      }
      write_name(name);
      append_u8(out, 4);
      append_u32(out, static_cast<std::uint32_t>(k.kh));
      append_u32(out, static_cast<std::uint32_t>(k.kw));
      append_u32(out, static_cast<std::uint32_t>(k.ci));
      append_u32(out, static_cast<std::uint32_t>(k.co));
      for (float f : k.data) append_f32(out, f);
    } else {
      const auto& [name, v] = *v_it++;
      write_name(name);
      append_u8(out, 1);
      append_u32(out, static_cast<std::uint32_t>(v.size()));
      for (float f : v) append_f32(out, f);
    }
  }
  return out;
}

WeightFile parse_weight_file(std::span<const std::uint8_t> bytes) {
  Reader r{bytes};
  r.need(6);
  if (std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw std::runtime_error("weight file: bad magic (not an SESR1 file)");
  }
  r.pos = 6;
  if (r.u16() != kVersion) throw std::runtime_error("weight file: unsupported version");

  WeightFile file;
  file.spec.scale = r.u8();
  file.spec.f = r.u16();
  file.spec.m = r.u16();
  file.spec.p = r.u16();
  const std::uint8_t variant = r.u8();
  file.spec.use_linear_blocks = variant & (1u << 0);
  file.spec.use_short_residuals = variant & (1u << 1);
  file.spec.use_input_residual = variant & (1u << 2);
  file.spec.activation = (variant & (1u << 3)) ? ActKind::ReLU : ActKind::PReLU;
  const std::uint8_t form = r.u8();
  if (form > 1) throw std::runtime_error("weight file: bad form byte");
  file.form = static_cast<WeightForm>(form);
  file.spec.validate();

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    const std::string name = r.str(name_len);
    if (file.store.kernels.count(name) || file.store.vectors.count(name)) {
      throw std::runtime_error("weight file: duplicate tensor name " + name);
    }
    const std::uint8_t rank = r.u8();
    if (rank == 4) {
      const int kh = static_cast<int>(r.u32());
      const int kw = static_cast<int>(r.u32());
      const int ci = static_cast<int>(r.u32());
      const int co = static_cast<int>(r.u32());
      Kernel k(kh, kw, ci, co);
      for (auto& f : k.data) f = r.f32();
      file.store.kernels[name] = std::move(k);
    } else if (rank == 1) {
      const std::uint32_t n = r.u32();
      std::vector<float> v(n);
      for (auto& f : v) f = r.f32();
      file.store.vectors[name] = std::move(v);
    } else {
      throw std::runtime_error("weight file: unsupported tensor rank");
    }
  }
  if (r.pos != bytes.size()) throw std::runtime_error("weight file: trailing bytes");
  return file;
}

void save_weight_file(const std::string& path, const WeightFile& file) {
  const std::vector<std::uint8_t> bytes = serialize_weight_file(file);
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("weight file: cannot open for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("weight file: write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

WeightFile load_weight_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("weight file: cannot open: " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw std::runtime_error("weight file: read failed: " + path);
  return parse_weight_file(bytes);
}

}  // namespace sesr
