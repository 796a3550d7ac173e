#include "measurezip/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace measurezip {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

double parse_double_at(std::string_view token, std::size_t line) {
  double v = 0.0;
  if (!parse_number(token, v)) fail_at(line, "invalid number '" + std::string(token) + "'");
  return v;
}

long parse_long_at(std::string_view token, std::size_t line) {
  long v = 0;
  if (!parse_number(token, v)) fail_at(line, "invalid integer '" + std::string(token) + "'");
  return v;
}

// Fan triangulation at the first vertex; quads give (0,1,2), (0,2,3).
void append_polygon(TriangleMesh& mesh, std::vector<std::size_t>& face_lines, const std::vector<long>& poly,
                    std::size_t line) {
  if (poly.size() < 3) fail_at(line, "face has fewer than 3 vertices");
  if (poly.size() > 4) fail_at(line, "polygon with " + std::to_string(poly.size()) + " vertices is not supported");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    mesh.triangles.push_back({static_cast<int>(poly[0]), static_cast<int>(poly[k]), static_cast<int>(poly[k + 1])});
    face_lines.push_back(line);
  }
}

// `base` is added back when reporting, so OBJ errors show the index as written.
void check_indices(const TriangleMesh& mesh, const std::vector<std::size_t>& face_lines, int base = 0) {
  const auto nv = static_cast<long>(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int idx : mesh.triangles[t]) {
      if (idx < 0 || idx >= nv) {
        fail_at(face_lines[t], "vertex index " + std::to_string(idx + base) + " out of range (mesh has " +
                                   std::to_string(nv) + " vertices)");
      }
    }
  }
  if (mesh.triangles.empty()) throw ParseError("mesh contains no faces");
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!mesh.vertices[v].allFinite()) throw ParseError("vertex " + std::to_string(v) + " is not finite");
  }
}

// ---- PLY -------------------------------------------------------------------

enum class PlyType { Int8, Uint8, Int16, Uint16, Int32, Uint32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view name) {
  static const std::pair<const char*, PlyType> table[] = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::Uint8},
      {"uint8", PlyType::Uint8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
      {"ushort", PlyType::Uint16}, {"uint16", PlyType::Uint16},   {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::Uint32},     {"uint32", PlyType::Uint32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  for (const auto& [n, t] : table) {
    if (name == n) return t;
  }
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::Uint8: return 1;
    case PlyType::Int16:
    case PlyType::Uint16: return 2;
    case PlyType::Int32:
    case PlyType::Uint32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::Uint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

double read_binary_le(std::istream& in, PlyType t, std::size_t element_index) {
  unsigned char buf[8];
  const std::size_t n = ply_size(t);
  if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) {
    throw ParseError("unexpected end of binary PLY data in element " + std::to_string(element_index));
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  switch (t) {
    case PlyType::Int8: return static_cast<std::int8_t>(bits);
    case PlyType::Uint8: return static_cast<std::uint8_t>(bits);
    case PlyType::Int16: return static_cast<std::int16_t>(bits);
    case PlyType::Uint16: return static_cast<std::uint16_t>(bits);
    case PlyType::Int32: return static_cast<std::int32_t>(bits);
    case PlyType::Uint32: return static_cast<std::uint32_t>(bits);
    case PlyType::Float32: {
      auto b32 = static_cast<std::uint32_t>(bits);
      float f;
      std::memcpy(&f, &b32, 4);
      return f;
    }
    case PlyType::Float64: {
      double d;
      std::memcpy(&d, &bits, 8);
      return d;
    }
  }
  return 0.0;
}

}  // namespace

void TriangleMesh::validate() const {
  if (triangles.empty()) throw InvalidArgument("mesh has no triangles");
  const auto nv = static_cast<int>(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int idx : triangles[t]) {
      if (idx < 0 || idx >= nv) {
        throw InvalidArgument("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                              " out of range");
      }
    }
  }
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw InvalidArgument("mesh has a non-finite vertex coordinate");
  }
}

std::optional<MeshFormat> mesh_format_from_name(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "obj") return MeshFormat::Obj;
  if (n == "ply") return MeshFormat::Ply;
  if (n == "off") return MeshFormat::Off;
  return std::nullopt;
}

std::optional<MeshFormat> mesh_format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
  return mesh_format_from_name(ext);
}

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::vector<std::size_t> face_lines;
  std::string line;
  std::size_t line_no = 0;
  std::vector<long> poly;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) fail_at(line_no, "vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double_at(tokens[1], line_no), parse_double_at(tokens[2], line_no),
                                 parse_double_at(tokens[3], line_no));
    } else if (tokens[0] == "f") {
      poly.clear();
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        std::string_view tok = tokens[k];
        tok = tok.substr(0, tok.find('/'));
        const long raw = parse_long_at(tok, line_no);
        if (raw == 0) fail_at(line_no, "vertex index 0 is invalid in OBJ (indices are 1-based)");
        // Negative indices count back from the most recent vertex.
        const long idx = raw > 0 ? raw - 1 : static_cast<long>(mesh.vertices.size()) + raw;
        poly.push_back(idx);
      }
      append_polygon(mesh, face_lines, poly, line_no);
    }
  }
  check_indices(mesh, face_lines, 1);
  return mesh;
}

TriangleMesh read_off(std::istream& in) {
  TriangleMesh mesh;
  std::vector<std::size_t> face_lines;
  std::string line;
  std::size_t line_no = 0;

  auto next_tokens = [&]() -> std::vector<std::string_view> {
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto tokens = split_ws(line);
      if (!tokens.empty()) return tokens;
    }
    return {};
  };

  auto tokens = next_tokens();
  if (tokens.empty() || tokens[0] != "OFF") fail_at(line_no, "missing OFF header");
  tokens.erase(tokens.begin());
  if (tokens.empty()) tokens = next_tokens();
  if (tokens.size() < 2) fail_at(line_no, "expected vertex and face counts");
  const long nv = parse_long_at(tokens[0], line_no);
  const long nf = parse_long_at(tokens[1], line_no);
  if (nv < 0 || nf < 0) fail_at(line_no, "negative element count");

  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long v = 0; v < nv; ++v) {
    tokens = next_tokens();
    if (tokens.size() < 3) fail_at(line_no, "vertex needs 3 coordinates");
    mesh.vertices.emplace_back(parse_double_at(tokens[0], line_no), parse_double_at(tokens[1], line_no),
                               parse_double_at(tokens[2], line_no));
  }
  std::vector<long> poly;
  for (long f = 0; f < nf; ++f) {
    tokens = next_tokens();
    if (tokens.empty()) fail_at(line_no, "unexpected end of file in face list");
    const long k = parse_long_at(tokens[0], line_no);
    if (k < 0 || static_cast<std::size_t>(k) + 1 > tokens.size()) fail_at(line_no, "face vertex count mismatch");
    poly.clear();
    for (long j = 0; j < k; ++j) poly.push_back(parse_long_at(tokens[static_cast<std::size_t>(j) + 1], line_no));
    append_polygon(mesh, face_lines, poly, line_no);
  }
  check_indices(mesh, face_lines);
  return mesh;
}

TriangleMesh read_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto header_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("unexpected end of PLY header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return split_ws(line);
  };

  auto tokens = header_line();
  if (tokens.empty() || tokens[0] != "ply") fail_at(line_no, "missing 'ply' magic");
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    tokens = header_line();
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2) fail_at(line_no, "malformed format line");
      if (tokens[1] == "ascii") {
        binary = false;
      } else if (tokens[1] == "binary_little_endian") {
        binary = true;
      } else {
        fail_at(line_no, "unsupported PLY format '" + std::string(tokens[1]) + "'");
      }
    } else if (tokens[0] == "element") {
      if (tokens.size() < 3) fail_at(line_no, "malformed element line");
      const long count = parse_long_at(tokens[2], line_no);
      if (count < 0) fail_at(line_no, "negative element count");
      elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(count), {}});
    } else if (tokens[0] == "property") {
      if (elements.empty()) fail_at(line_no, "property before any element");
      PlyProperty prop;
      if (tokens.size() >= 5 && tokens[1] == "list") {
        auto ct = ply_type(tokens[2]);
        auto vt = ply_type(tokens[3]);
        if (!ct || !vt) fail_at(line_no, "unknown PLY property type");
        prop = {std::string(tokens[4]), *vt, true, *ct};
      } else if (tokens.size() >= 3) {
        auto t = ply_type(tokens[1]);
        if (!t) fail_at(line_no, "unknown PLY property type '" + std::string(tokens[1]) + "'");
        prop = {std::string(tokens[2]), *t, false, PlyType::Uint8};
      } else {
        fail_at(line_no, "malformed property line");
      }
      elements.back().properties.push_back(prop);
    } else {
      fail_at(line_no, "unrecognized header keyword '" + std::string(tokens[0]) + "'");
    }
  }

  TriangleMesh mesh;
  std::vector<std::size_t> face_lines;
  std::vector<long> poly;
  std::vector<double> values;
  std::vector<std::vector<double>> lists;

  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, iface = -1;
    for (std::size_t p = 0; p < el.properties.size(); ++p) {
      const auto& name = el.properties[p].name;
      if (name == "x") ix = static_cast<int>(p);
      if (name == "y") iy = static_cast<int>(p);
      if (name == "z") iz = static_cast<int>(p);
      if ((name == "vertex_indices" || name == "vertex_index") && el.properties[p].is_list) iface = static_cast<int>(p);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw ParseError("PLY vertex element lacks x/y/z properties");
    if (is_face && iface < 0) throw ParseError("PLY face element lacks a vertex_indices list");

    for (std::size_t e = 0; e < el.count; ++e) {
      values.assign(el.properties.size(), 0.0);
      lists.assign(el.properties.size(), {});
      std::size_t where = 0;
      if (binary) {
        where = e;
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const auto& prop = el.properties[p];
          if (prop.is_list) {
            const double cnt = read_binary_le(in, prop.count_type, e);
            if (cnt < 0) throw ParseError("negative list length in " + el.name + " " + std::to_string(e));
            for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) lists[p].push_back(read_binary_le(in, prop.type, e));
          } else {
            values[p] = read_binary_le(in, prop.type, e);
          }
        }
      } else {
        std::vector<std::string_view> row;
        do {
          if (!std::getline(in, line)) throw ParseError("unexpected end of PLY data in element '" + el.name + "'");
          ++line_no;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          row = split_ws(line);
        } while (row.empty());
        where = line_no;
        std::size_t cursor = 0;
        auto take = [&]() {
          if (cursor >= row.size()) fail_at(line_no, "too few values for element '" + el.name + "'");
          return parse_double_at(row[cursor++], line_no);
        };
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          if (el.properties[p].is_list) {
            const double cnt = take();
            if (cnt < 0) fail_at(line_no, "negative list length");
            for (std::size_t k = 0; k < static_cast<std::size_t>(cnt); ++k) lists[p].push_back(take());
          } else {
            values[p] = take();
          }
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                                   values[static_cast<std::size_t>(iz)]);
      } else if (is_face) {
        poly.clear();
        for (double v : lists[static_cast<std::size_t>(iface)]) poly.push_back(static_cast<long>(v));
        if (binary) {
          try {
            append_polygon(mesh, face_lines, poly, where);
          } catch (const ParseError& err) {
            throw ParseError(std::string("face ") + std::to_string(where) + ": " + err.what());
          }
        } else {
          append_polygon(mesh, face_lines, poly, where);
        }
      }
    }
  }
  check_indices(mesh, face_lines);
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'");
  try {
    switch (format) {
      case MeshFormat::Obj: return read_obj(in);
      case MeshFormat::Ply: return read_ply(in);
      case MeshFormat::Off: return read_off(in);
    }
  } catch (const ParseError& err) {
    throw ParseError(path.string() + ": " + err.what());
  }
  throw ParseError("unknown mesh format");
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  auto format = mesh_format_from_path(path);
  if (!format) throw ParseError("cannot infer mesh format from '" + path.string() + "'");
  return load_mesh(path, *format);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  char buf[64];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.write(buf, ptr - buf);
  };
  for (const auto& v : mesh.vertices) {
    out << "v ";
    put(v.x());
    out << ' ';
    put(v.y());
    out << ' ';
    put(v.z());
    out << '\n';
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_obj(out, mesh);
}

std::vector<TriangleFrame> triangle_geometry(const TriangleMesh& mesh) {
  std::vector<TriangleFrame> frames;
  frames.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& v1 = mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& v2 = mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& v3 = mesh.vertices[static_cast<std::size_t>(t[2])];
    frames.push_back({(v1 + v2 + v3) / 3.0, 0.5 * (v3 - v2).cross(v2 - v1)});
  }
  return frames;
}

BoundingBox bounding_box(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw InvalidArgument("bounding box of an empty vertex set");
  BoundingBox box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.lo = box.lo.cwiseMin(v);
    box.hi = box.hi.cwiseMax(v);
  }
  return box;
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& f : triangle_geometry(mesh)) area += f.normal.norm();
  return area;
}

TriangleMesh center_and_scale(const TriangleMesh& mesh, double target_extent) {
  if (!(target_extent > 0.0) || !std::isfinite(target_extent)) {
    throw InvalidArgument("target extent must be positive and finite");
  }
  const BoundingBox box = bounding_box(mesh);
  const double extent = box.extent().maxCoeff();
  if (!(extent > 0.0)) throw InvalidArgument("degenerate extent: all vertices coincide");

  Vec3 mean = Vec3::Zero();
  for (const auto& v : mesh.vertices) mean += v;
  mean /= static_cast<double>(mesh.vertices.size());

  const double scale = target_extent / extent;
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = (v - mean) * scale;
  return out;
}

}  // namespace measurezip
