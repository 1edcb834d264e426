#include "corrlab/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "corrlab/errors.hpp"

namespace corrlab {
namespace {

static_assert(sizeof(double) == 8);

void put_u32(std::array<char, kFieldHeaderBytes>& buf, std::size_t off, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf[off + static_cast<std::size_t>(b)] = static_cast<char>((v >> (8 * b)) & 0xffu);
}

std::uint32_t get_u32(const std::array<char, kFieldHeaderBytes>& buf, std::size_t off) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + static_cast<std::size_t>(b)])) << (8 * b);
  }
  return v;
}

void write_payload(std::ostream& out, const LatticeShape& shape, FieldKind kind,
                   const std::vector<double>& values) {
  std::array<char, kFieldHeaderBytes> header{};
  std::memcpy(header.data(), kFieldMagic, sizeof(kFieldMagic));
  put_u32(header, 8, static_cast<std::uint32_t>(shape.d));
  put_u32(header, 12, static_cast<std::uint32_t>(shape.L));
  put_u32(header, 16, static_cast<std::uint32_t>(kind));
  out.write(header.data(), header.size());

  std::vector<char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write field dump");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_field(std::ostream& out, const VertexField& f) {
  write_payload(out, f.shape, FieldKind::vertex, f.values);
}

void write_field(std::ostream& out, const EdgeField& f) {
  write_payload(out, f.shape, FieldKind::edge, f.values);
}

void write_field(const std::filesystem::path& path, const VertexField& f) {
  auto out = open_out(path);
  write_field(out, f);
}

void write_field(const std::filesystem::path& path, const EdgeField& f) {
  auto out = open_out(path);
  write_field(out, f);
}

AnyField read_field(std::istream& in) {
  std::array<char, kFieldHeaderBytes> header{};
  in.read(header.data(), header.size());
  if (!in || std::memcmp(header.data(), kFieldMagic, sizeof(kFieldMagic)) != 0) {
    throw Error("not a corrlab field dump (bad magic)");
  }
  const LatticeShape shape(static_cast<int>(get_u32(header, 8)), static_cast<int>(get_u32(header, 12)));
  const auto kind = get_u32(header, 16);
  if (kind > 1) throw Error("unknown field kind in dump header");
  const std::size_t n = kind == 0 ? shape.num_vertices() : shape.num_edges();

  std::vector<char> bytes(n * 8);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error("truncated field dump");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  if (kind == 0) return VertexField(shape, std::move(values));
  return EdgeField(shape, std::move(values));
}

AnyField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_field(in);
}

VertexField read_vertex_field(const std::filesystem::path& path) {
  auto f = read_field(path);
  if (auto* v = std::get_if<VertexField>(&f)) return std::move(*v);
  throw Error(path.string() + " holds an edge field, expected a vertex field");
}

EdgeField read_edge_field(const std::filesystem::path& path) {
  auto f = read_field(path);
  if (auto* e = std::get_if<EdgeField>(&f)) return std::move(*e);
  throw Error(path.string() + " holds a vertex field, expected an edge field");
}

}  // namespace corrlab
