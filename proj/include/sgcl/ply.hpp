#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgcl/pointcloud.hpp"

// PLY reader/writer covering the subset this project produces and consumes:
// ASCII and binary little-endian, vertex properties x/y/z (any float type),
// red/green/blue (uchar or float), nx/ny/nz, int label, plus arbitrary
// scalar float channels (used for similarity exports). Unknown fixed-size
// properties and trailing elements are skipped.

namespace sgcl {

namespace ply_detail {

enum class PType { i8, u8, i16, u16, i32, u32, f32, f64 };

inline std::optional<PType> parse_type(const std::string& t) {
  if (t == "char" || t == "int8") return PType::i8;
  if (t == "uchar" || t == "uint8") return PType::u8;
  if (t == "short" || t == "int16") return PType::i16;
  if (t == "ushort" || t == "uint16") return PType::u16;
  if (t == "int" || t == "int32") return PType::i32;
  if (t == "uint" || t == "uint32") return PType::u32;
  if (t == "float" || t == "float32") return PType::f32;
  if (t == "double" || t == "float64") return PType::f64;
  return std::nullopt;
}

inline std::size_t type_size(PType t) {
  switch (t) {
    case PType::i8:
    case PType::u8: return 1;
    case PType::i16:
    case PType::u16: return 2;
    case PType::i32:
    case PType::u32:
    case PType::f32: return 4;
    case PType::f64: return 8;
  }
  return 0;
}

inline double read_binary_value(const char* p, PType t) {
  switch (t) {
    case PType::i8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case PType::u8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case PType::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case PType::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PType::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case PType::u32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PType::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case PType::f64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct Property {
  std::string name;
  PType type = PType::f64;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::int64_t count = 0;
  std::vector<Property> props;
};

}  // namespace ply_detail

struct LoadedPly {
  PointCloud cloud;
  // Scalar vertex channels beyond the standard ones, e.g. "similarity".
  std::map<std::string, std::vector<double>> extras;
};

inline LoadedPly load_ply_full(const std::string& path) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open PLY file: " + path);

  auto fail = [&](int lineno, const std::string& line, const std::string& why) -> void {
    throw parse_error(format("%s:%d: %s: '%s'", path.c_str(), lineno, why.c_str(), line.c_str()));
  };

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw parse_error(path + ":1: empty file");
  ++lineno;
  if (trim(line) != "ply") fail(lineno, line, "expected 'ply' magic");

  bool binary = false;
  bool format_seen = false;
  std::vector<Element> elements;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.rfind("comment", 0) == 0 || t.rfind("obj_info", 0) == 0) continue;
    std::istringstream ls(t);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else fail(lineno, line, "unsupported format");
      format_seen = true;
    } else if (word == "element") {
      Element e;
      if (!(ls >> e.name >> e.count)) fail(lineno, line, "malformed element");
      elements.push_back(std::move(e));
    } else if (word == "property") {
      if (elements.empty()) fail(lineno, line, "property before element");
      std::string type_word;
      ls >> type_word;
      Property p;
      if (type_word == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        const auto cty = parse_type(ct), ity = parse_type(it);
        if (!cty || !ity || p.name.empty()) fail(lineno, line, "malformed list property");
        p.is_list = true;
        p.type = *ity;
        elements.back().props.push_back(p);
      } else {
        const auto ty = parse_type(type_word);
        if (!(ls >> p.name) || !ty) fail(lineno, line, "malformed property");
        p.type = *ty;
        elements.back().props.push_back(p);
      }
    } else if (word == "end_header") {
      break;
    } else {
      fail(lineno, line, "unknown header keyword");
    }
  }
  if (!format_seen) throw parse_error(path + ": missing format line");
  if (elements.empty()) throw parse_error(path + ": no elements declared");

  const Element* vertex = nullptr;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw parse_error(path + ": no vertex element");
  if (vertex->count == 0) throw empty_input_error(path + ": zero vertices");
  for (const auto& p : vertex->props)
    if (p.is_list) throw parse_error(path + ": list property on vertex element");

  // Column store of all vertex properties.
  std::map<std::string, std::vector<double>> cols;
  for (const auto& p : vertex->props) cols[p.name].reserve(static_cast<std::size_t>(vertex->count));

  for (const auto& e : elements) {
    const bool is_vertex = (&e == vertex);
    if (binary) {
      std::size_t stride = 0;
      for (const auto& p : e.props) {
        if (p.is_list)
          throw parse_error(path + ": cannot skip binary list element '" + e.name + "'");
        stride += type_size(p.type);
      }
      std::vector<char> buf(stride);
      for (std::int64_t i = 0; i < e.count; ++i) {
        if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
          throw parse_error(path + ": truncated binary body in element '" + e.name + "'");
        if (!is_vertex) continue;
        std::size_t off = 0;
        for (const auto& p : e.props) {
          cols[p.name].push_back(read_binary_value(buf.data() + off, p.type));
          off += type_size(p.type);
        }
      }
    } else {
      for (std::int64_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line))
          throw parse_error(path + ": truncated ascii body in element '" + e.name + "'");
        ++lineno;
        if (!is_vertex) continue;
        std::istringstream ls(line);
        for (const auto& p : e.props) {
          double v;
          if (!(ls >> v)) fail(lineno, line, "malformed vertex line");
          cols[p.name].push_back(v);
        }
      }
    }
    if (!is_vertex && &e == &elements.back()) break;
  }

  auto col = [&](const char* name) -> const std::vector<double>* {
    const auto it = cols.find(name);
    return it == cols.end() ? nullptr : &it->second;
  };
  const auto *x = col("x"), *y = col("y"), *z = col("z");
  if (!x || !y || !z) throw parse_error(path + ": vertex element lacks x/y/z");

  LoadedPly out;
  PointCloud& c = out.cloud;
  const auto m = static_cast<std::size_t>(vertex->count);
  c.coords.resize(m);
  c.colors.resize(m);
  c.ids.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    c.coords[i] = {(*x)[i], (*y)[i], (*z)[i]};
    c.ids[i] = static_cast<std::int64_t>(i);
  }

  const auto *r = col("red"), *g = col("green"), *b = col("blue");
  bool color_uchar = false;
  if (r && g && b) {
    for (const auto& p : vertex->props)
      if (p.name == "red") color_uchar = (p.type == ply_detail::PType::u8);
    for (std::size_t i = 0; i < m; ++i) {
      const double s = color_uchar ? 1.0 / 255.0 : 1.0;
      c.colors[i] = {(*r)[i] * s, (*g)[i] * s, (*b)[i] * s};
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) c.colors[i] = {0.5, 0.5, 0.5};
  }

  const auto *nx = col("nx"), *ny = col("ny"), *nz = col("nz");
  if (nx && ny && nz) {
    c.normals.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      c.normals[i] = normalized(Vec3{(*nx)[i], (*ny)[i], (*nz)[i]});
  }
  if (const auto* lab = col("label")) {
    c.labels.resize(m);
    for (std::size_t i = 0; i < m; ++i) c.labels[i] = static_cast<std::int32_t>((*lab)[i]);
  }

  static const std::unordered_set<std::string> standard = {"x",  "y",  "z",  "red", "green",
                                                           "blue", "nx", "ny", "nz", "label",
                                                           "alpha"};
  for (auto& [name, vals] : cols)
    if (!standard.count(name)) out.extras[name] = std::move(vals);
  c.validate();
  return out;
}

inline PointCloud load_ply(const std::string& path) { return load_ply_full(path).cloud; }

struct PlyExtraChannel {
  std::string name;
  std::vector<double> values;  // written as float32
};

inline void save_ply(const PointCloud& cloud, const std::string& path, bool binary = true,
                     const std::vector<PlyExtraChannel>& extras = {}) {
  cloud.validate();
  for (const auto& e : extras)
    if (e.values.size() != cloud.coords.size())
      throw dimension_error("ply extra channel '" + e.name + "' length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write PLY file: " + path);

  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.has_normals())
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.has_labels()) out << "property int label\n";
  for (const auto& e : extras) out << "property float " << e.name << "\n";
  out << "end_header\n";

  const auto m = static_cast<std::size_t>(cloud.size());
  auto to_u8 = [](double v) {
    return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
  };
  if (binary) {
    for (std::size_t i = 0; i < m; ++i) {
      out.write(reinterpret_cast<const char*>(cloud.coords[i].data()), 24);
      const std::uint8_t rgb[3] = {to_u8(cloud.colors[i][0]), to_u8(cloud.colors[i][1]),
                                   to_u8(cloud.colors[i][2])};
      out.write(reinterpret_cast<const char*>(rgb), 3);
      if (cloud.has_normals())
        out.write(reinterpret_cast<const char*>(cloud.normals[i].data()), 24);
      if (cloud.has_labels()) {
        const std::int32_t lab = cloud.labels[i];
        out.write(reinterpret_cast<const char*>(&lab), 4);
      }
      for (const auto& e : extras) {
        const float v = static_cast<float>(e.values[i]);
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      out << fmt_double(cloud.coords[i][0]) << " " << fmt_double(cloud.coords[i][1]) << " "
          << fmt_double(cloud.coords[i][2]);
      out << " " << static_cast<int>(to_u8(cloud.colors[i][0])) << " "
          << static_cast<int>(to_u8(cloud.colors[i][1])) << " "
          << static_cast<int>(to_u8(cloud.colors[i][2]));
      if (cloud.has_normals())
        out << " " << fmt_double(cloud.normals[i][0]) << " " << fmt_double(cloud.normals[i][1])
            << " " << fmt_double(cloud.normals[i][2]);
      if (cloud.has_labels()) out << " " << cloud.labels[i];
      for (const auto& e : extras) out << " " << fmt_double(static_cast<float>(e.values[i]));
      out << "\n";
    }
  }
  if (!out) throw io_error("write failure on PLY file: " + path);
}

}  // namespace sgcl
