// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparse_evolve/mask_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sparse_evolve/error.hpp"

namespace sparse_evolve {

namespace {
constexpr const char* kMagic = "sparse-evolve-mask 1";
}

std::string encode_masks(const std::vector<Mask>& masks) {
  std::string out = std::string(kMagic) + "\nlayers " + std::to_string(masks.size()) + "\n";
  for (const auto& m : masks) {
    out += std::to_string(m.shape().size());
    for (auto d : m.shape()) out += " " + std::to_string(d);
    char density[64];
    std::snprintf(density, sizeof density, "%.17g", m.density());
    out += " " + std::to_string(m.nonzero()) + " " + density + "\n";
  }
  out += "payload\n";
  for (const auto& m : masks) {
    const std::size_t bytes = (m.size() + 7) / 8;
    std::string packed(bytes, '\0');
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) packed[i / 8] = static_cast<char>(static_cast<unsigned char>(packed[i / 8]) | (1u << (i % 8)));
    }
    out += packed;
  }
  return out;
}

std::vector<Mask> decode_masks(const std::string& bytes) {
  const auto payload_at = bytes.find("\npayload\n");
  if (bytes.rfind(kMagic, 0) != 0 || payload_at == std::string::npos) throw IoError("not a mask file");
  std::istringstream header(bytes.substr(0, payload_at));
  std::string line, word;
  std::getline(header, line);
  std::size_t count = 0;
  if (!(header >> word >> count) || word != "layers") throw IoError("mask file: bad layer count");

  std::vector<Shape> shapes;
  std::vector<std::size_t> nonzero;
  for (std::size_t l = 0; l < count; ++l) {
    std::size_t rank = 0, nnz = 0;
    double density = 0.0;
    if (!(header >> rank)) throw IoError("mask file: truncated header");
    Shape s(rank);
    for (auto& d : s) header >> d;
    if (!(header >> nnz >> density)) throw IoError("mask file: truncated header");
    shapes.push_back(std::move(s));
    nonzero.push_back(nnz);
  }

  std::size_t pos = payload_at + 9;
  std::vector<Mask> masks;
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t n = shape_numel(shapes[l]);
    const std::size_t nbytes = (n + 7) / 8;
    if (pos + nbytes > bytes.size()) throw IoError("mask file: truncated payload");
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = (static_cast<unsigned char>(bytes[pos + i / 8]) >> (i % 8)) & 1u;
    }
    pos += nbytes;
    Mask m(shapes[l], std::move(bits));
    if (m.nonzero() != nonzero[l]) throw IoError("mask file: nonzero count disagrees with payload");
    masks.push_back(std::move(m));
  }
  if (pos != bytes.size()) throw IoError("mask file: trailing bytes");
  return masks;
}

void save_masks(const std::filesystem::path& path, const std::vector<Mask>& masks) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  const std::string data = encode_masks(masks);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<Mask> load_masks(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  return decode_masks(std::string(std::istreambuf_iterator<char>(f), {}));
}

}  // namespace sparse_evolve
