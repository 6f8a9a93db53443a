#ifndef TERRAIN_LOOP_IO_HPP
#define TERRAIN_LOOP_IO_HPP

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"

namespace terrain_loop {

enum class CloudFormat { XyzAscii, Csv, Ply };

enum class PlyEncoding { Ascii, BinaryLittleEndian };
enum class PlyScalar { Float32, Float64 };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline void format_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline void push_point(PointCloud& cloud, double x, double y, double z,
                       std::size_t line, std::size_t byte_offset) {
  Point3 p{x, y, z};
  if (!p.finite()) {
    throw NonFiniteValueError("non-finite coordinate at line " + std::to_string(line) +
                              " (byte " + std::to_string(byte_offset) + ")");
  }
  cloud.points.push_back(p);
}

inline PointCloud parse_xyz_ascii(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0, byte_offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_bytes = line.size() + 1;
    std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') {
      byte_offset += line_bytes;
      continue;
    }
    auto toks = split_ws(body);
    double x, y, z;
    if (toks.size() != 3 || !parse_double(toks[0], x) || !parse_double(toks[1], y) ||
        !parse_double(toks[2], z)) {
      throw ParseError("malformed xyz record", line_no, byte_offset);
    }
    push_point(cloud, x, y, z, line_no, byte_offset);
    byte_offset += line_bytes;
  }
  if (cloud.empty()) throw EmptyCloudError();
  return cloud;
}

inline PointCloud parse_csv(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0, byte_offset = 0;
  int col_x = 0, col_y = 1, col_z = 2;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_bytes = line.size() + 1;
    std::string_view body = trim(line);
    if (body.empty()) {
      byte_offset += line_bytes;
      continue;
    }
    auto toks = split(body, ',');
    if (first_data) {
      first_data = false;
      double probe;
      if (!toks.empty() && !parse_double(trim(toks[0]), probe)) {
        // Header row: locate x,y,z columns (case-insensitive).
        col_x = col_y = col_z = -1;
        for (std::size_t i = 0; i < toks.size(); ++i) {
          std::string name(trim(toks[i]));
          for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          if (name == "x") col_x = static_cast<int>(i);
          if (name == "y") col_y = static_cast<int>(i);
          if (name == "z") col_z = static_cast<int>(i);
        }
        if (col_x < 0 || col_y < 0 || col_z < 0) {
          throw ParseError("csv header lacks x,y,z columns", line_no, byte_offset);
        }
        byte_offset += line_bytes;
        continue;
      }
    }
    const int max_col = std::max(col_x, std::max(col_y, col_z));
    double x, y, z;
    if (static_cast<int>(toks.size()) <= max_col || !parse_double(trim(toks[col_x]), x) ||
        !parse_double(trim(toks[col_y]), y) || !parse_double(trim(toks[col_z]), z)) {
      throw ParseError("malformed csv record", line_no, byte_offset);
    }
    push_point(cloud, x, y, z, line_no, byte_offset);
    byte_offset += line_bytes;
  }
  if (cloud.empty()) throw EmptyCloudError();
  return cloud;
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
};

inline std::size_t ply_scalar_size(const std::string& type, std::size_t line, std::size_t byte_offset) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
  throw ParseError("unknown ply property type '" + type + "'", line, byte_offset);
}

// Supports the common fixture layout: a leading vertex element with scalar
// properties including float/double x,y,z. Elements after the vertex data are
// ignored; anything that would require skipping list data is rejected.
inline PointCloud parse_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0, byte_offset = 0;
  auto next_line = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw ParseError("unexpected end of ply header", line_no, byte_offset);
    ++line_no;
    byte_offset += line.size() + 1;
    return trim(line);
  };

  if (next_line() != "ply") throw ParseError("missing ply magic", line_no, 0);

  bool binary = false;
  bool have_format = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  bool seen_vertex = false;
  std::vector<PlyProperty> vertex_props;

  for (;;) {
    std::string_view l = next_line();
    if (l.empty() || l.starts_with("comment") || l.starts_with("obj_info")) continue;
    if (l == "end_header") break;
    auto toks = split_ws(l);
    if (toks[0] == "format") {
      if (toks.size() != 3) throw ParseError("malformed format line", line_no, byte_offset);
      if (toks[1] == "ascii") {
        binary = false;
      } else if (toks[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw ParseError("unsupported ply format '" + std::string(toks[1]) + "'", line_no, byte_offset);
      }
      have_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError("malformed element line", line_no, byte_offset);
      if (toks[1] == "vertex") {
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(toks[2].data(), toks[2].data() + toks[2].size(), n);
        if (ec != std::errc()) throw ParseError("bad vertex count", line_no, byte_offset);
        vertex_count = n;
        in_vertex_element = true;
        seen_vertex = true;
      } else {
        if (!seen_vertex) {
          throw ParseError("elements before vertex are not supported", line_no, byte_offset);
        }
        in_vertex_element = false;  // trailing elements: ignored
      }
    } else if (toks[0] == "property") {
      if (!in_vertex_element) continue;
      PlyProperty prop;
      if (toks.size() >= 2 && toks[1] == "list") {
        throw ParseError("list properties in vertex element are not supported", line_no, byte_offset);
      }
      if (toks.size() != 3) throw ParseError("malformed property line", line_no, byte_offset);
      prop.type = std::string(toks[1]);
      prop.name = std::string(toks[2]);
      vertex_props.push_back(prop);
    } else {
      throw ParseError("unexpected ply header line", line_no, byte_offset);
    }
  }
  if (!have_format) throw ParseError("ply header lacks format line", line_no, byte_offset);
  if (!seen_vertex) throw ParseError("ply header lacks vertex element", line_no, byte_offset);

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    const auto& p = vertex_props[i];
    const bool fp = p.type == "float" || p.type == "float32" || p.type == "double" || p.type == "float64";
    if (p.name == "x" && fp) ix = static_cast<int>(i);
    if (p.name == "y" && fp) iy = static_cast<int>(i);
    if (p.name == "z" && fp) iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw ParseError("vertex element lacks float x/y/z properties", line_no, byte_offset);
  }

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (!binary) {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      std::string_view l = next_line();
      auto toks = split_ws(l);
      if (toks.size() < vertex_props.size()) {
        throw ParseError("short vertex record", line_no, byte_offset);
      }
      double x, y, z;
      if (!parse_double(toks[ix], x) || !parse_double(toks[iy], y) || !parse_double(toks[iz], z)) {
        throw ParseError("malformed vertex record", line_no, byte_offset);
      }
      push_point(cloud, x, y, z, line_no, byte_offset);
    }
  } else {
    std::vector<std::size_t> sizes;
    std::size_t record_size = 0;
    for (const auto& p : vertex_props) {
      sizes.push_back(ply_scalar_size(p.type, line_no, byte_offset));
      record_size += sizes.back();
    }
    std::vector<char> record(record_size);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!in.read(record.data(), static_cast<std::streamsize>(record_size))) {
        throw ParseError("truncated binary vertex data", line_no, byte_offset);
      }
      byte_offset += record_size;
      double coords[3];
      std::size_t off = 0;
      for (std::size_t i = 0; i < vertex_props.size(); ++i) {
        int which = (static_cast<int>(i) == ix) ? 0 : (static_cast<int>(i) == iy) ? 1
                    : (static_cast<int>(i) == iz)                                 ? 2
                                                                                  : -1;
        if (which >= 0) {
          if (sizes[i] == 4) {
            float f;
            std::memcpy(&f, record.data() + off, 4);
            coords[which] = static_cast<double>(f);
          } else {
            std::memcpy(&coords[which], record.data() + off, 8);
          }
        }
        off += sizes[i];
      }
      push_point(cloud, coords[0], coords[1], coords[2], line_no, byte_offset);
    }
  }
  if (cloud.empty()) throw EmptyCloudError();
  return cloud;
}

}  // namespace detail

inline PointCloud parse_pointcloud(std::istream& in, CloudFormat format) {
  switch (format) {
    case CloudFormat::XyzAscii:
      return detail::parse_xyz_ascii(in);
    case CloudFormat::Csv:
      return detail::parse_csv(in);
    case CloudFormat::Ply:
      return detail::parse_ply(in);
  }
  throw std::invalid_argument("unknown cloud format");
}

inline CloudFormat cloud_format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".csv") return CloudFormat::Csv;
  if (ext == ".ply") return CloudFormat::Ply;
  return CloudFormat::XyzAscii;
}

inline PointCloud load_pointcloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_pointcloud(in, cloud_format_for_path(path));
}

inline void write_xyz(std::ostream& out, const PointCloud& cloud) {
  std::string buf;
  for (const Point3& p : cloud.points) {
    buf.clear();
    detail::format_double(buf, p.x);
    buf.push_back(' ');
    detail::format_double(buf, p.y);
    buf.push_back(' ');
    detail::format_double(buf, p.z);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

inline void write_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y,z\n";
  std::string buf;
  for (const Point3& p : cloud.points) {
    buf.clear();
    detail::format_double(buf, p.x);
    buf.push_back(',');
    detail::format_double(buf, p.y);
    buf.push_back(',');
    detail::format_double(buf, p.z);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

inline void write_ply(std::ostream& out, const PointCloud& cloud,
                      PlyEncoding encoding = PlyEncoding::BinaryLittleEndian,
                      PlyScalar scalar = PlyScalar::Float64) {
  const char* type = scalar == PlyScalar::Float32 ? "float" : "double";
  out << "ply\n";
  out << "format " << (encoding == PlyEncoding::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
  out << "element vertex " << cloud.count() << "\n";
  out << "property " << type << " x\n";
  out << "property " << type << " y\n";
  out << "property " << type << " z\n";
  out << "end_header\n";
  if (encoding == PlyEncoding::Ascii) {
    std::string buf;
    for (const Point3& p : cloud.points) {
      buf.clear();
      if (scalar == PlyScalar::Float32) {
        detail::format_double(buf, static_cast<double>(static_cast<float>(p.x)));
        buf.push_back(' ');
        detail::format_double(buf, static_cast<double>(static_cast<float>(p.y)));
        buf.push_back(' ');
        detail::format_double(buf, static_cast<double>(static_cast<float>(p.z)));
      } else {
        detail::format_double(buf, p.x);
        buf.push_back(' ');
        detail::format_double(buf, p.y);
        buf.push_back(' ');
        detail::format_double(buf, p.z);
      }
      buf.push_back('\n');
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  } else {
    for (const Point3& p : cloud.points) {
      if (scalar == PlyScalar::Float32) {
        float v[3] = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
        out.write(reinterpret_cast<const char*>(v), sizeof(v));
      } else {
        double v[3] = {p.x, p.y, p.z};
        out.write(reinterpret_cast<const char*>(v), sizeof(v));
      }
    }
  }
}

inline void save_pointcloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  switch (cloud_format_for_path(path)) {
    case CloudFormat::XyzAscii:
      write_xyz(out, cloud);
      break;
    case CloudFormat::Csv:
      write_csv(out, cloud);
      break;
    case CloudFormat::Ply:
      write_ply(out, cloud);
      break;
  }
}

}  // namespace terrain_loop

#endif
