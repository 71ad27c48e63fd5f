#include "tempcycle/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tempcycle {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'T', 'C', 'Y', 'C', 'K', 'P', 'T', '\0'};

uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 1;
    case torch::kFloat64: return 2;
    case torch::kInt64: return 3;
    case torch::kUInt8: return 4;
    default: throw std::invalid_argument("checkpoint: unsupported dtype");
  }
}

torch::ScalarType dtype_from_code(uint8_t c) {
  switch (c) {
    case 1: return torch::kFloat32;
    case 2: return torch::kFloat64;
    case 3: return torch::kInt64;
    case 4: return torch::kUInt8;
    default: throw std::runtime_error("checkpoint: unknown dtype code " + std::to_string(c));
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename T>
  void pod(T v) { os_.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
  void str(const std::string& s) {
    pod(static_cast<uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void bytes(const void* p, size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  template <typename T>
  T pod() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<uint32_t>();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(void* p, size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is_.gcount()) != n) throw std::runtime_error("checkpoint: truncated file");
  }

 private:
  std::istream& is_;
};

}  // namespace

const torch::Tensor& Section::at(const std::string& array) const {
  for (const auto& a : arrays) {
    if (a.name == array) return a.data;
  }
  throw std::runtime_error("checkpoint: section '" + name + "' has no array '" + array + "'");
}

bool Section::contains(const std::string& array) const {
  for (const auto& a : arrays) {
    if (a.name == array) return true;
  }
  return false;
}

Section& Archive::add_section(const std::string& name) {
  if (has_section(name)) throw std::invalid_argument("checkpoint: duplicate section " + name);
  sections_.push_back(Section{name, {}});
  return sections_.back();
}

const Section& Archive::section(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("checkpoint: missing section '" + name + "'");
}

bool Archive::has_section(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return true;
  }
  return false;
}

const std::string& Archive::header_value(const std::string& key) const {
  auto it = header.find(key);
  if (it == header.end()) throw std::runtime_error("checkpoint: missing header key '" + key + "'");
  return it->second;
}

void Archive::save(const std::filesystem::path& path) const {
  // Write-then-rename so a crash never leaves a half-written checkpoint behind.
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string() + " for writing");
    Writer w(os);
    w.bytes(kMagic, sizeof(kMagic));
    w.pod(kArchiveVersion);
    w.pod(static_cast<uint32_t>(header.size()));
    for (const auto& [k, v] : header) {
      w.str(k);
      w.str(v);
    }
    w.pod(static_cast<uint32_t>(sections_.size()));
    for (const auto& s : sections_) {
      w.str(s.name);
      w.pod(static_cast<uint32_t>(s.arrays.size()));
      for (const auto& a : s.arrays) {
        auto t = a.data.detach().to(torch::kCPU).contiguous();
        w.str(a.name);
        w.pod(dtype_code(t.scalar_type()));
        w.pod(static_cast<uint32_t>(t.dim()));
        for (int64_t d : t.sizes()) w.pod(d);
        const uint64_t nbytes = t.numel() * t.element_size();
        w.pod(nbytes);
        w.bytes(t.data_ptr(), nbytes);
      }
    }
    os.flush();
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  Reader r(is);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: " + path.string() + " is not a tempcycle checkpoint");
  }
  const auto version = r.pod<uint32_t>();
  if (version != kArchiveVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Archive a;
  const auto nheader = r.pod<uint32_t>();
  for (uint32_t i = 0; i < nheader; ++i) {
    auto k = r.str();
    a.header[k] = r.str();
  }
  const auto nsections = r.pod<uint32_t>();
  for (uint32_t i = 0; i < nsections; ++i) {
    auto& s = a.add_section(r.str());
    const auto narrays = r.pod<uint32_t>();
    for (uint32_t j = 0; j < narrays; ++j) {
      NamedArray arr;
      arr.name = r.str();
      const auto dtype = dtype_from_code(r.pod<uint8_t>());
      const auto ndim = r.pod<uint32_t>();
      std::vector<int64_t> dims(ndim);
      for (auto& d : dims) d = r.pod<int64_t>();
      const auto nbytes = r.pod<uint64_t>();
      arr.data = torch::empty(dims, torch::TensorOptions().dtype(dtype));
      if (nbytes != static_cast<uint64_t>(arr.data.numel() * arr.data.element_size())) {
        throw std::runtime_error("checkpoint: byte count mismatch for " + s.name + "/" + arr.name);
      }
      r.read(arr.data.data_ptr(), nbytes);
      s.arrays.push_back(std::move(arr));
    }
  }
  return a;
}

Section module_section(const std::string& name, const torch::nn::Module& module) {
  Section s{name, {}};
  for (const auto& p : module.named_parameters()) s.arrays.push_back({p.key(), p.value().detach().clone()});
  for (const auto& b : module.named_buffers()) s.arrays.push_back({b.key(), b.value().detach().clone()});
  return s;
}

void load_module_section(const Section& section, torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  size_t expected = 0;
  auto copy_into = [&](const std::string& key, torch::Tensor& dst) {
    const auto& src = section.at(key);
    if (src.sizes() != dst.sizes()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + section.name + "/" + key);
    }
    dst.copy_(src);
    ++expected;
  };
  for (auto& p : module.named_parameters()) copy_into(p.key(), p.value());
  for (auto& b : module.named_buffers()) copy_into(b.key(), b.value());
  if (expected != section.arrays.size()) {
    throw std::runtime_error("checkpoint: section '" + section.name + "' has unexpected arrays");
  }
}

}  // namespace tempcycle
