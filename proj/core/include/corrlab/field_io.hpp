#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "corrlab/lattice.hpp"

namespace corrlab {

enum class FieldKind : std::uint32_t { vertex = 0, edge = 1 };

/// Binary field dump.
///
/// Layout: a 32-byte header (8-byte magic "CORRLAB1", then little-endian
/// uint32 d, uint32 L, uint32 kind and 12 zero bytes) followed by the values
/// as little-endian IEEE-754 doubles in the lattice storage order.
inline constexpr char kFieldMagic[8] = {'C', 'O', 'R', 'R', 'L', 'A', 'B', '1'};
inline constexpr std::size_t kFieldHeaderBytes = 32;

void write_field(std::ostream& out, const VertexField& f);
void write_field(std::ostream& out, const EdgeField& f);
void write_field(const std::filesystem::path& path, const VertexField& f);
void write_field(const std::filesystem::path& path, const EdgeField& f);

using AnyField = std::variant<VertexField, EdgeField>;

AnyField read_field(std::istream& in);
AnyField read_field(const std::filesystem::path& path);
VertexField read_vertex_field(const std::filesystem::path& path);
EdgeField read_edge_field(const std::filesystem::path& path);

}  // namespace corrlab
