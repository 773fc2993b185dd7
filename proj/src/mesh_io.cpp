#include "pcatlas/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <optional>
#include <sstream>
#include <vector>

#include "pcatlas/error.hpp"
#include "pcatlas/file_util.hpp"

namespace pcatlas {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void parse_fail(const std::string& what, std::size_t line) {
  throw Error(ErrorKind::kParse, what + " at line " + std::to_string(line));
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<long long> to_int(std::string_view s) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Iterates lines while tracking the 1-based line number.
class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_no() const { return line_no_; }
  std::size_t byte_offset() const { return std::min(pos_, text_.size()); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

void append_triangle(TriangleMesh& mesh, std::uint32_t a, std::uint32_t b,
                     std::uint32_t c) {
  if (a == b || b == c || a == c) return;
  mesh.faces.push_back({a, b, c});
}

void append_polygon(TriangleMesh& mesh, const std::vector<long long>& poly,
                    std::size_t where, bool with_line) {
  for (auto index : poly) {
    if (index < 0 || static_cast<std::size_t>(index) >= mesh.vertices.size()) {
      throw Error(ErrorKind::kStructural,
                  "face index " + std::to_string(index) + " out of range (" +
                      std::to_string(mesh.vertices.size()) + " vertices) " +
                      (with_line ? "at line " : "in face ") +
                      std::to_string(where));
    }
  }
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    append_triangle(mesh, static_cast<std::uint32_t>(poly[0]),
                    static_cast<std::uint32_t>(poly[k]),
                    static_cast<std::uint32_t>(poly[k + 1]));
  }
}

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh mesh;
  // Faces may precede later `v` records in pathological files; resolve them
  // once every vertex is known.
  struct PendingFace {
    std::vector<long long> indices;
    std::size_t line;
  };
  std::vector<PendingFace> pending;
  LineCursor cursor(text);
  std::string_view line;
  while (cursor.next(line)) {
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) parse_fail("vertex needs 3 coordinates", cursor.line_no());
      Vec3 v;
      double* dst[3] = {&v.x, &v.y, &v.z};
      for (int k = 0; k < 3; ++k) {
        auto value = to_double(tokens[k + 1]);
        if (!value) parse_fail("malformed vertex coordinate", cursor.line_no());
        *dst[k] = *value;
      }
      mesh.vertices.push_back(v);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) parse_fail("face needs at least 3 vertices", cursor.line_no());
      PendingFace face{{}, cursor.line_no()};
      const auto known = static_cast<long long>(mesh.vertices.size());
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        auto head = tokens[k].substr(0, tokens[k].find('/'));
        auto value = to_int(head);
        if (!value || *value == 0) parse_fail("malformed face index", cursor.line_no());
        // Negative indices are relative to the vertices read so far.
        face.indices.push_back(*value > 0 ? *value - 1 : known + *value);
      }
      pending.push_back(std::move(face));
    }
  }
  for (const auto& face : pending) append_polygon(mesh, face.indices, face.line, true);
  return mesh;
}

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;

  int find(std::string_view prop) const {
    for (std::size_t i = 0; i < properties.size(); ++i) {
      if (properties[i].name == prop) return static_cast<int>(i);
    }
    return -1;
  }
};

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::kAscii;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;
};

PlyHeader parse_ply_header(std::string_view bytes) {
  PlyHeader header;
  LineCursor cursor(bytes);
  std::string_view line;
  if (!cursor.next(line) || line != "ply") parse_fail("missing 'ply' magic", 1);
  bool have_format = false;
  while (true) {
    if (!cursor.next(line)) parse_fail("header not terminated", cursor.line_no());
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2) parse_fail("malformed format line", cursor.line_no());
      if (tokens[1] == "ascii") {
        header.encoding = PlyEncoding::kAscii;
      } else if (tokens[1] == "binary_little_endian") {
        header.encoding = PlyEncoding::kBinaryLittleEndian;
      } else {
        parse_fail("unsupported PLY format '" + std::string(tokens[1]) + "'",
                   cursor.line_no());
      }
      have_format = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) parse_fail("malformed element line", cursor.line_no());
      auto count = to_int(tokens[2]);
      if (!count || *count < 0) parse_fail("malformed element count", cursor.line_no());
      header.elements.push_back({std::string(tokens[1]),
                                 static_cast<std::size_t>(*count), {}});
    } else if (tokens[0] == "property") {
      if (header.elements.empty()) parse_fail("property before element", cursor.line_no());
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        auto count_type = ply_type(tokens[2]);
        auto item_type = ply_type(tokens[3]);
        if (!count_type || !item_type) parse_fail("unknown list type", cursor.line_no());
        prop = {std::string(tokens[4]), *item_type, true, *count_type};
      } else if (tokens.size() == 3) {
        auto type = ply_type(tokens[1]);
        if (!type) parse_fail("unknown property type", cursor.line_no());
        prop = {std::string(tokens[2]), *type, false, PlyType::kUint8};
      } else {
        parse_fail("malformed property line", cursor.line_no());
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      parse_fail("unexpected header keyword '" + std::string(tokens[0]) + "'",
                 cursor.line_no());
    }
  }
  if (!have_format) parse_fail("missing format line", cursor.line_no());
  header.body_offset = cursor.byte_offset();
  header.body_line = cursor.line_no();
  return header;
}

double read_binary_scalar(ByteReader& reader, PlyType type) {
  switch (type) {
    case PlyType::kInt8: return reader.get<std::int8_t>();
    case PlyType::kUint8: return reader.get<std::uint8_t>();
    case PlyType::kInt16: return reader.get<std::int16_t>();
    case PlyType::kUint16: return reader.get<std::uint16_t>();
    case PlyType::kInt32: return reader.get<std::int32_t>();
    case PlyType::kUint32: return reader.get<std::uint32_t>();
    case PlyType::kFloat32: return reader.get<float>();
    case PlyType::kFloat64: return reader.get<double>();
  }
  return 0.0;
}

// One decoded record: scalar properties as doubles, list properties as
// integer vectors (only integer lists are meaningful here).
struct PlyRecord {
  std::vector<double> scalars;
  std::vector<std::vector<long long>> lists;
};

// Streams records of every element in file order to `visit(element, record)`.
template <typename Visit>
void read_ply_body(std::string_view bytes, const PlyHeader& header, Visit visit) {
  PlyRecord record;
  if (header.encoding == PlyEncoding::kBinaryLittleEndian) {
    ByteReader reader(bytes, header.body_offset);
    for (const auto& element : header.elements) {
      for (std::size_t r = 0; r < element.count; ++r) {
        record.scalars.assign(element.properties.size(), 0.0);
        record.lists.assign(element.properties.size(), {});
        for (std::size_t p = 0; p < element.properties.size(); ++p) {
          const auto& prop = element.properties[p];
          if (prop.is_list) {
            auto n = read_binary_scalar(reader, prop.count_type);
            if (n < 0) {
              throw Error(ErrorKind::kParse, "negative list length at byte offset " +
                                                 std::to_string(reader.offset()));
            }
            auto& list = record.lists[p];
            list.resize(static_cast<std::size_t>(n));
            for (auto& item : list) {
              item = static_cast<long long>(read_binary_scalar(reader, prop.type));
            }
          } else {
            record.scalars[p] = read_binary_scalar(reader, prop.type);
          }
        }
        visit(element, record);
      }
    }
    return;
  }
  LineCursor cursor(bytes.substr(header.body_offset));
  std::string_view line;
  for (const auto& element : header.elements) {
    for (std::size_t r = 0; r < element.count; ++r) {
      if (!cursor.next(line)) {
        parse_fail("unexpected end of " + element.name + " data",
                   header.body_line + cursor.line_no() + 1);
      }
      const auto line_no = header.body_line + cursor.line_no();
      auto tokens = split_ws(line);
      if (tokens.empty()) {
        --r;
        continue;
      }
      record.scalars.assign(element.properties.size(), 0.0);
      record.lists.assign(element.properties.size(), {});
      std::size_t t = 0;
      auto take = [&]() -> std::string_view {
        if (t >= tokens.size()) parse_fail("too few values in record", line_no);
        return tokens[t++];
      };
      for (std::size_t p = 0; p < element.properties.size(); ++p) {
        const auto& prop = element.properties[p];
        if (prop.is_list) {
          auto n = to_int(take());
          if (!n || *n < 0) parse_fail("malformed list length", line_no);
          auto& list = record.lists[p];
          for (long long k = 0; k < *n; ++k) {
            auto value = to_int(take());
            if (!value) parse_fail("malformed list entry", line_no);
            list.push_back(*value);
          }
        } else {
          auto value = to_double(take());
          if (!value) parse_fail("malformed scalar value", line_no);
          record.scalars[p] = *value;
        }
      }
      if (t != tokens.size()) parse_fail("too many values in record", line_no);
      visit(element, record);
    }
  }
}

struct VertexColumns {
  int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
};

VertexColumns vertex_columns(const PlyElement& element) {
  return {element.find("x"),  element.find("y"),  element.find("z"),
          element.find("nx"), element.find("ny"), element.find("nz")};
}

const PlyElement* find_element(const PlyHeader& header, std::string_view name) {
  for (const auto& e : header.elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

TriangleMesh parse_ply_mesh(std::string_view bytes) {
  auto header = parse_ply_header(bytes);
  const auto* vertex = find_element(header, "vertex");
  if (vertex == nullptr) throw Error(ErrorKind::kParse, "PLY has no vertex element");
  auto cols = vertex_columns(*vertex);
  if (cols.x < 0 || cols.y < 0 || cols.z < 0) {
    throw Error(ErrorKind::kParse, "PLY vertex element lacks x/y/z");
  }
  int face_list = -1;
  if (const auto* face = find_element(header, "face")) {
    face_list = face->find("vertex_indices");
    if (face_list < 0) face_list = face->find("vertex_index");
    if (face_list < 0 || !face->properties[face_list].is_list) {
      throw Error(ErrorKind::kParse, "PLY face element lacks a vertex_indices list");
    }
  }
  TriangleMesh mesh;
  mesh.vertices.reserve(vertex->count);
  std::vector<std::vector<long long>> polygons;
  read_ply_body(bytes, header, [&](const PlyElement& element, const PlyRecord& rec) {
    if (&element == vertex) {
      mesh.vertices.push_back({rec.scalars[cols.x], rec.scalars[cols.y], rec.scalars[cols.z]});
    } else if (element.name == "face") {
      if (rec.lists[face_list].size() < 3) {
        throw Error(ErrorKind::kParse, "PLY face with fewer than 3 vertices");
      }
      polygons.push_back(rec.lists[face_list]);
    }
  });
  for (std::size_t f = 0; f < polygons.size(); ++f) {
    append_polygon(mesh, polygons[f], f, false);
  }
  return mesh;
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = lower(path.extension().string());
  if (ext == ".obj") return MeshFormat::kObj;
  if (ext == ".ply") return MeshFormat::kPly;
  throw Error(ErrorKind::kArgument, "unknown mesh extension: " + path.string());
}

TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format) {
  auto mesh = format == MeshFormat::kObj ? parse_obj(bytes) : parse_ply_mesh(bytes);
  mesh.validate();
  return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  return parse_mesh(read_file(path), format_from_path(path));
}

std::string write_mesh_obj(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  return out.str();
}

PointCloud parse_point_cloud(std::string_view bytes) {
  auto header = parse_ply_header(bytes);
  const auto* vertex = find_element(header, "vertex");
  if (vertex == nullptr) throw Error(ErrorKind::kParse, "PLY has no vertex element");
  auto cols = vertex_columns(*vertex);
  if (cols.x < 0 || cols.y < 0 || cols.z < 0 || cols.nx < 0 || cols.ny < 0 || cols.nz < 0) {
    throw Error(ErrorKind::kParse, "point cloud PLY needs x,y,z,nx,ny,nz");
  }
  PointCloud cloud;
  cloud.points.reserve(vertex->count);
  read_ply_body(bytes, header, [&](const PlyElement& element, const PlyRecord& rec) {
    if (&element != vertex) return;
    OrientedPoint p;
    p.position = {rec.scalars[cols.x], rec.scalars[cols.y], rec.scalars[cols.z]};
    p.normal = {rec.scalars[cols.nx], rec.scalars[cols.ny], rec.scalars[cols.nz]};
    p.is_hole = p.position == Vec3{} && p.normal == Vec3{};
    cloud.points.push_back(p);
  });
  return cloud;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  return parse_point_cloud(read_file(path));
}

std::string write_point_cloud(const PointCloud& cloud, PlyEncoding encoding) {
  std::ostringstream header;
  header << "ply\n"
         << (encoding == PlyEncoding::kAscii ? "format ascii 1.0\n"
                                             : "format binary_little_endian 1.0\n")
         << "element vertex " << cloud.size() << '\n';
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz"}) {
    header << "property double " << name << '\n';
  }
  header << "end_header\n";
  if (encoding == PlyEncoding::kAscii) {
    std::ostringstream body;
    body.precision(17);
    for (const auto& p : cloud.points) {
      body << p.position.x << ' ' << p.position.y << ' ' << p.position.z << ' '
           << p.normal.x << ' ' << p.normal.y << ' ' << p.normal.z << '\n';
    }
    return header.str() + body.str();
  }
  ByteWriter writer;
  writer.put_bytes(header.str());
  for (const auto& p : cloud.points) {
    for (double v : {p.position.x, p.position.y, p.position.z, p.normal.x,
                     p.normal.y, p.normal.z}) {
      writer.put(v);
    }
  }
  return writer.release();
}

}  // namespace pcatlas
