#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tempcycle {

// Binary container, all integers little-endian:
//
//   magic    8 bytes  "TCYCKPT\0"
//   version  u32      kArchiveVersion
//   header   u32 count, then count x (str key, str value)   [sorted by key]
//   sections u32 count, then per section:
//              str name, u32 array count, then per array:
//                str name, u8 dtype, u32 ndim, ndim x i64 dims,
//                u64 byte count, raw row-major bytes
//
// str = u32 length + UTF-8 bytes. dtype codes: 1 f32, 2 f64, 3 i64, 4 u8.
inline constexpr uint32_t kArchiveVersion = 1;

struct NamedArray {
  std::string name;
  torch::Tensor data;
};

struct Section {
  std::string name;
  std::vector<NamedArray> arrays;

  const torch::Tensor& at(const std::string& array) const;
  bool contains(const std::string& array) const;
};

class Archive {
 public:
  std::map<std::string, std::string> header;

  Section& add_section(const std::string& name);
  const Section& section(const std::string& name) const;
  bool has_section(const std::string& name) const;
  const std::vector<Section>& sections() const { return sections_; }

  const std::string& header_value(const std::string& key) const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::vector<Section> sections_;
};

/// Parameters and buffers of `module`, named as in named_parameters().
Section module_section(const std::string& name, const torch::nn::Module& module);
/// Copies a section's arrays into `module` in place; names and shapes must match exactly.
void load_module_section(const Section& section, torch::nn::Module& module);

}  // namespace tempcycle
