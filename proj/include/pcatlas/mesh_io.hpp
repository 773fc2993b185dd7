#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pcatlas/geometry.hpp"

namespace pcatlas {

enum class MeshFormat { kObj, kPly };

enum class PlyEncoding { kAscii, kBinaryLittleEndian };

// Picks the format from the file extension (.obj / .ply, case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

// OBJ: only `v` and `f` records are read; polygons are fan-triangulated as
// (0,1,2),(0,2,3),... Faces that collapse onto a repeated vertex are dropped.
// PLY: ascii or binary_little_endian, `vertex` (x,y,z) and `face` elements.
TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format);
TriangleMesh read_mesh(const std::filesystem::path& path);

std::string write_mesh_obj(const TriangleMesh& mesh);

// Clouds are PLY with x,y,z,nx,ny,nz. An all-zero entry (position and normal)
// reads back as a hole.
PointCloud parse_point_cloud(std::string_view bytes);
PointCloud read_point_cloud(const std::filesystem::path& path);

// Binary output stores doubles, so parse(write(c)) is bitwise exact.
std::string write_point_cloud(
    const PointCloud& cloud,
    PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

}  // namespace pcatlas
