#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specmap/mesh.hpp"

namespace specmap {

namespace {

struct Face {
  int a, b, c;
};

TriangleMesh assemble(const std::vector<Eigen::Vector3d>& vertices, const std::vector<Face>& faces,
                      const std::string& what) {
  if (vertices.empty() || faces.empty()) throw EmptyMesh(what + ": no vertices or no faces");
  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
  for (size_t v = 0; v < vertices.size(); ++v) mesh.vertices.row(static_cast<Eigen::Index>(v)) = vertices[v];
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (size_t f = 0; f < faces.size(); ++f)
    mesh.faces.row(static_cast<Eigen::Index>(f)) << faces[f].a, faces[f].b, faces[f].c;
  validate_mesh(mesh);
  return mesh;
}

void fan_triangulate(const std::vector<long>& polygon, std::vector<Face>& faces,
                     const std::string& what) {
  if (polygon.size() < 3) throw ParseError(what + ": face with fewer than 3 vertices");
  for (size_t k = 1; k + 1 < polygon.size(); ++k)
    faces.push_back({static_cast<int>(polygon[0]), static_cast<int>(polygon[k]),
                     static_cast<int>(polygon[k + 1])});
}

// Stream over the file contents that skips comments and blank space.
class TokenReader {
 public:
  TokenReader(const std::string& data, char comment) : data_(data), comment_(comment) {}

  bool next(std::string& token) {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == comment_) {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= data_.size()) return false;
    const size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_])))
      ++pos_;
    token.assign(data_, start, pos_ - start);
    return true;
  }

  double next_double(const std::string& what) {
    std::string token;
    if (!next(token)) throw ParseError(what + ": unexpected end of file");
    try {
      size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw ParseError(what + ": expected a number, got '" + token + "'");
    }
  }

  long next_long(const std::string& what) {
    std::string token;
    if (!next(token)) throw ParseError(what + ": unexpected end of file");
    try {
      size_t used = 0;
      const long value = std::stol(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw ParseError(what + ": expected an integer, got '" + token + "'");
    }
  }

 private:
  const std::string& data_;
  char comment_;
  size_t pos_ = 0;
};

TriangleMesh parse_off(const std::string& data) {
  TokenReader reader(data, '#');
  std::string token;
  if (!reader.next(token)) throw ParseError("off: empty file");
  // The header keyword is optional in the wild; counts may follow on the
  // same or the next line.
  long nv, nf;
  if (token == "OFF" || token == "COFF" || token == "NOFF") {
    nv = reader.next_long("off");
  } else {
    try {
      nv = std::stol(token);
    } catch (const std::exception&) {
      throw ParseError("off: bad header '" + token + "'");
    }
  }
  nf = reader.next_long("off");
  reader.next_long("off");  // edge count, unused
  if (nv < 0 || nf < 0) throw ParseError("off: negative counts");

  std::vector<Eigen::Vector3d> vertices(static_cast<size_t>(nv));
  for (long v = 0; v < nv; ++v)
    vertices[static_cast<size_t>(v)] = {reader.next_double("off"), reader.next_double("off"),
                                        reader.next_double("off")};
  std::vector<Face> faces;
  faces.reserve(static_cast<size_t>(nf));
  std::vector<long> polygon;
  for (long f = 0; f < nf; ++f) {
    const long count = reader.next_long("off");
    if (count < 3) throw ParseError("off: face with fewer than 3 vertices");
    polygon.clear();
    for (long k = 0; k < count; ++k) polygon.push_back(reader.next_long("off"));
    fan_triangulate(polygon, faces, "off");
  }
  return assemble(vertices, faces, "off");
}

TriangleMesh parse_obj(const std::string& data) {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Face> faces;
  std::istringstream stream(data);
  std::string line;
  std::vector<long> polygon;
  while (std::getline(stream, line)) {
    if (line.size() >= 2 && line[0] == 'v' && std::isspace(static_cast<unsigned char>(line[1]))) {
      std::istringstream fields(line.substr(1));
      double x, y, z;
      if (!(fields >> x >> y >> z)) throw ParseError("obj: malformed vertex line '" + line + "'");
      vertices.emplace_back(x, y, z);
    } else if (line.size() >= 2 && line[0] == 'f' &&
               std::isspace(static_cast<unsigned char>(line[1]))) {
      std::istringstream fields(line.substr(1));
      std::string corner;
      polygon.clear();
      while (fields >> corner) {
        // "i", "i/t", "i//n", "i/t/n"; indices are 1-based, negatives count
        // back from the current vertex list.
        const size_t slash = corner.find('/');
        const std::string index_text = slash == std::string::npos ? corner : corner.substr(0, slash);
        long index;
        try {
          index = std::stol(index_text);
        } catch (const std::exception&) {
          throw ParseError("obj: bad face corner '" + corner + "'");
        }
        if (index < 0) index = static_cast<long>(vertices.size()) + index;
        else index -= 1;
        polygon.push_back(index);
      }
      fan_triangulate(polygon, faces, "obj");
    }
  }
  return assemble(vertices, faces, "obj");
}

// --- PLY ---

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

int ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::F32:
    case PlyType::I32:
    case PlyType::U32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

PlyType ply_type_from(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::I8;
  if (name == "uchar" || name == "uint8") return PlyType::U8;
  if (name == "short" || name == "int16") return PlyType::I16;
  if (name == "ushort" || name == "uint16") return PlyType::U16;
  if (name == "int" || name == "int32") return PlyType::I32;
  if (name == "uint" || name == "uint32") return PlyType::U32;
  if (name == "float" || name == "float32") return PlyType::F32;
  if (name == "double" || name == "float64") return PlyType::F64;
  throw ParseError("ply: unknown property type '" + name + "'");
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
  PlyType value_type = PlyType::F32;
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> properties;
};

class BinaryCursor {
 public:
  BinaryCursor(const std::string& data, size_t pos) : data_(data), pos_(pos) {}

  double read(PlyType t) {
    const int size = ply_type_size(t);
    if (pos_ + static_cast<size_t>(size) > data_.size())
      throw ParseError("ply: truncated binary payload");
    const char* p = data_.data() + pos_;
    pos_ += static_cast<size_t>(size);
    // Host is little-endian, matching the format on disk.
    switch (t) {
      case PlyType::I8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::U8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::I16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::U16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::I32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::U32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::F32: { float v; std::memcpy(&v, p, 4); return v; }
      case PlyType::F64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0.0;
  }

 private:
  const std::string& data_;
  size_t pos_;
};

TriangleMesh parse_ply(const std::string& data) {
  const size_t header_end = data.find("end_header");
  if (header_end == std::string::npos) throw ParseError("ply: missing end_header");
  size_t body = data.find('\n', header_end);
  if (body == std::string::npos) throw ParseError("ply: missing payload");
  ++body;

  bool binary = false;
  std::vector<PlyElement> elements;
  {
    std::istringstream header(data.substr(0, header_end));
    std::string line;
    std::getline(header, line);  // "ply"
    while (std::getline(header, line)) {
      std::istringstream fields(line);
      std::string keyword;
      fields >> keyword;
      if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
      if (keyword == "format") {
        std::string kind;
        fields >> kind;
        if (kind == "binary_little_endian") binary = true;
        else if (kind == "ascii") binary = false;
        else throw ParseError("ply: unsupported format '" + kind + "'");
      } else if (keyword == "element") {
        PlyElement element;
        fields >> element.name >> element.count;
        elements.push_back(element);
      } else if (keyword == "property") {
        if (elements.empty()) throw ParseError("ply: property before element");
        PlyProperty property;
        std::string type_name;
        fields >> type_name;
        if (type_name == "list") {
          property.is_list = true;
          std::string count_name, value_name;
          fields >> count_name >> value_name >> property.name;
          property.count_type = ply_type_from(count_name);
          property.value_type = ply_type_from(value_name);
        } else {
          property.value_type = ply_type_from(type_name);
          fields >> property.name;
        }
        elements.back().properties.push_back(property);
      } else {
        throw ParseError("ply: unknown header keyword '" + keyword + "'");
      }
    }
  }

  std::vector<Eigen::Vector3d> vertices;
  std::vector<Face> faces;
  std::vector<long> polygon;

  std::string ascii_body = binary ? std::string() : data.substr(body);
  TokenReader ascii_reader(ascii_body, '\0');
  BinaryCursor cursor(data, body);

  auto read_scalar = [&](PlyType t) -> double {
    return binary ? cursor.read(t) : ascii_reader.next_double("ply");
  };

  for (const auto& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int ix = -1, iy = -1, iz = -1;
    if (is_vertex) {
      for (size_t p = 0; p < element.properties.size(); ++p) {
        if (element.properties[p].name == "x") ix = static_cast<int>(p);
        if (element.properties[p].name == "y") iy = static_cast<int>(p);
        if (element.properties[p].name == "z") iz = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply: vertex element lacks x/y/z");
      vertices.reserve(static_cast<size_t>(element.count));
    }
    for (long e = 0; e < element.count; ++e) {
      Eigen::Vector3d position = Eigen::Vector3d::Zero();
      bool got_face = false;
      for (size_t p = 0; p < element.properties.size(); ++p) {
        const auto& property = element.properties[p];
        if (property.is_list) {
          const long count = static_cast<long>(read_scalar(property.count_type));
          if (count < 0) throw ParseError("ply: negative list count");
          const bool take = is_face && !got_face;
          if (take) polygon.clear();
          for (long k = 0; k < count; ++k) {
            const double value = read_scalar(property.value_type);
            if (take) polygon.push_back(static_cast<long>(value));
          }
          if (take) {
            fan_triangulate(polygon, faces, "ply");
            got_face = true;
          }
        } else {
          const double value = read_scalar(property.value_type);
          if (is_vertex) {
            if (static_cast<int>(p) == ix) position.x() = value;
            if (static_cast<int>(p) == iy) position.y() = value;
            if (static_cast<int>(p) == iz) position.z() = value;
          }
        }
      }
      if (is_vertex) vertices.push_back(position);
    }
  }
  return assemble(vertices, faces, "ply");
}

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string data = buffer.str();
  if (data.empty()) throw EmptyMesh("'" + path + "' is empty");

  if (data.size() >= 3 && data.compare(0, 3, "ply") == 0) return parse_ply(data);
  if (data.size() >= 3 && (data.compare(0, 3, "OFF") == 0 || data.compare(0, 4, "COFF") == 0 ||
                           data.compare(0, 4, "NOFF") == 0))
    return parse_off(data);

  std::string ext;
  const size_t dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  if (ext == "off") return parse_off(data);
  if (ext == "ply") return parse_ply(data);
  return parse_obj(data);
}

}  // namespace specmap
