#include "pcinr/ply.hpp"

#include "pcinr/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace pcinr {

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const std::byte* p) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double load_scalar(ScalarType t, const std::byte* p) {
  switch (t) {
    case ScalarType::Int8: return load_le<std::int8_t>(p);
    case ScalarType::UInt8: return load_le<std::uint8_t>(p);
    case ScalarType::Int16: return load_le<std::int16_t>(p);
    case ScalarType::UInt16: return load_le<std::uint16_t>(p);
    case ScalarType::Int32: return load_le<std::int32_t>(p);
    case ScalarType::UInt32: return load_le<std::uint32_t>(p);
    case ScalarType::Float32: return load_le<float>(p);
    case ScalarType::Float64: return load_le<double>(p);
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type;
  bool isList = false;
  ScalarType countType = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Format { Ascii, BinaryLittleEndian };

struct Header {
  Format format = Format::Ascii;
  std::vector<Element> elements;
  std::size_t payloadOffset = 0;
  std::size_t lineCount = 0;
};

[[noreturn]] void header_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::PlyMalformedHeader, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Header parse_header(std::span<const std::byte> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  Header header;
  std::size_t pos = 0;
  std::size_t line = 0;
  bool sawFormat = false;
  bool ended = false;
  while (!ended) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) header_error(line + 1, "header not terminated by end_header");
    const std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line;
    const auto tok = split(raw);
    if (line == 1) {
      if (tok.size() != 1 || tok[0] != "ply") header_error(line, "missing 'ply' magic");
      continue;
    }
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) header_error(line, "format line needs 2 arguments");
      if (tok[1] == "ascii") {
        header.format = Format::Ascii;
      } else if (tok[1] == "binary_little_endian") {
        header.format = Format::BinaryLittleEndian;
      } else {
        header_error(line, "unsupported format '" + std::string(tok[1]) + "'");
      }
      sawFormat = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) header_error(line, "element line needs name and count");
      Element e;
      e.name = tok[1];
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (r.ec != std::errc{} || r.ptr != tok[2].data() + tok[2].size())
        header_error(line, "bad element count '" + std::string(tok[2]) + "'");
      header.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (header.elements.empty()) header_error(line, "property before any element");
      Property p;
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) header_error(line, "list property needs count type, item type, name");
        const auto ct = scalar_type(tok[2]);
        const auto it = scalar_type(tok[3]);
        if (!ct || !it) header_error(line, "unknown scalar type in list property");
        p.isList = true;
        p.countType = *ct;
        p.type = *it;
        p.name = tok[4];
      } else {
        if (tok.size() != 3) header_error(line, "property needs type and name");
        const auto t = scalar_type(tok[1]);
        if (!t) header_error(line, "unknown scalar type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = tok[2];
      }
      header.elements.back().properties.push_back(std::move(p));
    } else if (tok[0] == "end_header") {
      ended = true;
    } else {
      header_error(line, "unexpected keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!sawFormat) header_error(line, "missing format line");
  header.payloadOffset = pos;
  header.lineCount = line;
  return header;
}

struct VertexLayout {
  std::size_t element = 0;
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const Header& header) {
  VertexLayout lay;
  bool found = false;
  for (std::size_t e = 0; e < header.elements.size(); ++e) {
    if (header.elements[e].name == "vertex") {
      lay.element = e;
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorKind::PlyMalformedHeader, "no vertex element");
  const auto& props = header.elements[lay.element].properties;
  for (std::size_t i = 0; i < props.size(); ++i) {
    const auto& p = props[i];
    int* slot = nullptr;
    if (p.name == "x") slot = &lay.x;
    else if (p.name == "y") slot = &lay.y;
    else if (p.name == "z") slot = &lay.z;
    else if (p.name == "red") slot = &lay.r;
    else if (p.name == "green") slot = &lay.g;
    else if (p.name == "blue") slot = &lay.b;
    if (p.isList) {
      throw Error(ErrorKind::PlyUnsupportedProperty,
                  "vertex property '" + p.name + "' is a list");
    }
    if (!slot) continue;
    if (slot == &lay.r || slot == &lay.g || slot == &lay.b) {
      if (p.type != ScalarType::UInt8)
        throw Error(ErrorKind::PlyUnsupportedProperty,
                    "color property '" + p.name + "' must be uchar");
    }
    *slot = static_cast<int>(i);
  }
  if (lay.x < 0 || lay.y < 0 || lay.z < 0)
    throw Error(ErrorKind::PlyMalformedHeader, "vertex element lacks x, y, or z");
  const int colorCount = (lay.r >= 0) + (lay.g >= 0) + (lay.b >= 0);
  if (colorCount != 0 && colorCount != 3)
    throw Error(ErrorKind::PlyMalformedHeader, "partial color properties on vertex");
  return lay;
}

RawCloud parse_ascii(std::span<const std::byte> bytes, const Header& header,
                     const VertexLayout& lay) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = header.payloadOffset;
  std::size_t line = header.lineCount;
  RawCloud cloud;
  const bool hasColor = lay.r >= 0;
  std::vector<Rgb> colors;

  auto next_line = [&]() -> std::optional<std::string_view> {
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      const auto raw = text.substr(pos, eol - pos);
      pos = eol + 1;
      ++line;
      if (!split(raw).empty()) return raw;
    }
    return std::nullopt;
  };

  for (std::size_t e = 0; e <= lay.element; ++e) {
    const Element& el = header.elements[e];
    for (std::size_t n = 0; n < el.count; ++n) {
      const auto raw = next_line();
      if (!raw)
        throw Error(ErrorKind::PlyTruncatedPayload,
                    "element '" + el.name + "' declares " + std::to_string(el.count) +
                        " rows but the file ends after " + std::to_string(n) +
                        " (line " + std::to_string(line) + ")");
      if (e != lay.element) continue;
      const auto tok = split(*raw);
      if (tok.size() < el.properties.size())
        throw Error(ErrorKind::PlyTruncatedPayload,
                    "line " + std::to_string(line) + ": expected " +
                        std::to_string(el.properties.size()) + " values");
      auto value = [&](int idx) {
        double v = 0;
        const auto t = tok[static_cast<std::size_t>(idx)];
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc{})
          throw Error(ErrorKind::PlyTruncatedPayload,
                      "line " + std::to_string(line) + ": bad number '" + std::string(t) + "'");
        return v;
      };
      cloud.positions.emplace_back(value(lay.x), value(lay.y), value(lay.z));
      if (hasColor) {
        colors.push_back({static_cast<std::uint8_t>(value(lay.r)),
                          static_cast<std::uint8_t>(value(lay.g)),
                          static_cast<std::uint8_t>(value(lay.b))});
      }
    }
  }
  if (hasColor) cloud.colors = std::move(colors);
  return cloud;
}

RawCloud parse_binary(std::span<const std::byte> bytes, const Header& header,
                      const VertexLayout& lay) {
  std::size_t pos = header.payloadOffset;
  RawCloud cloud;
  const bool hasColor = lay.r >= 0;
  std::vector<Rgb> colors;

  for (std::size_t e = 0; e < lay.element; ++e) {
    const Element& el = header.elements[e];
    std::size_t stride = 0;
    for (const auto& p : el.properties) {
      if (p.isList)
        throw Error(ErrorKind::PlyUnsupportedProperty,
                    "list property '" + p.name + "' in element '" + el.name +
                        "' preceding vertex data");
      stride += type_size(p.type);
    }
    if (stride * el.count > bytes.size() - std::min(pos, bytes.size()))
      throw Error(ErrorKind::PlyTruncatedPayload,
                  "element '" + el.name + "' runs past end of file at offset " +
                      std::to_string(bytes.size()));
    pos += stride * el.count;
  }

  const Element& vertex = header.elements[lay.element];
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const auto& p : vertex.properties) {
    offsets.push_back(stride);
    stride += type_size(p.type);
  }
  cloud.positions.reserve(vertex.count);
  for (std::size_t n = 0; n < vertex.count; ++n) {
    if (pos + stride > bytes.size())
      throw Error(ErrorKind::PlyTruncatedPayload,
                  "vertex " + std::to_string(n) + " of " + std::to_string(vertex.count) +
                      " needs bytes [" + std::to_string(pos) + ", " +
                      std::to_string(pos + stride) + ") but file has " +
                      std::to_string(bytes.size()));
    const std::byte* row = bytes.data() + pos;
    auto at = [&](int idx) {
      const auto& p = vertex.properties[static_cast<std::size_t>(idx)];
      return load_scalar(p.type, row + offsets[static_cast<std::size_t>(idx)]);
    };
    cloud.positions.emplace_back(at(lay.x), at(lay.y), at(lay.z));
    if (hasColor) {
      colors.push_back({static_cast<std::uint8_t>(at(lay.r)), static_cast<std::uint8_t>(at(lay.g)),
                        static_cast<std::uint8_t>(at(lay.b))});
    }
    pos += stride;
  }
  if (hasColor) cloud.colors = std::move(colors);
  return cloud;
}

template <typename T>
void append_le(std::vector<std::byte>& out, T v) {
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

std::vector<std::byte> write_generic(std::size_t count, bool hasColor, auto&& emitRow) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\n";
  h << "element vertex " << count << "\n";
  h << "property float x\nproperty float y\nproperty float z\n";
  if (hasColor) h << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  h << "end_header\n";
  const std::string header = h.str();
  std::vector<std::byte> out;
  out.reserve(header.size() + count * (hasColor ? 15 : 12));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  for (std::size_t i = 0; i < count; ++i) emitRow(out, i);
  return out;
}

}  // namespace

RawCloud parse_ply(std::span<const std::byte> bytes) {
  const Header header = parse_header(bytes);
  const VertexLayout lay = vertex_layout(header);
  return header.format == Format::Ascii ? parse_ascii(bytes, header, lay)
                                        : parse_binary(bytes, header, lay);
}

std::vector<std::byte> write_ply(const VoxelizedCloud& cloud) {
  const bool hasColor = cloud.has_colors();
  return write_generic(cloud.size(), hasColor, [&](std::vector<std::byte>& out, std::size_t i) {
    const Voxel& v = cloud.points()[i];
    for (int k = 0; k < 3; ++k) append_le(out, static_cast<float>(v[k]));
    if (hasColor) {
      const Rgb& c = cloud.colors()[i];
      append_le(out, c.r);
      append_le(out, c.g);
      append_le(out, c.b);
    }
  });
}

std::vector<std::byte> write_ply(const RawCloud& cloud) {
  const bool hasColor = cloud.colors.has_value();
  return write_generic(cloud.size(), hasColor, [&](std::vector<std::byte>& out, std::size_t i) {
    for (int k = 0; k < 3; ++k) append_le(out, static_cast<float>(cloud.positions[i][k]));
    if (hasColor) {
      const Rgb& c = (*cloud.colors)[i];
      append_le(out, c.r);
      append_le(out, c.g);
      append_le(out, c.b);
    }
  });
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorKind::Io, "short read on '" + path.string() + "'");
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed on '" + path.string() + "'");
}

RawCloud read_ply_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_ply(bytes);
}

}  // namespace pcinr
