#include "nakags/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace nakags::io {

namespace {

using Kind = PlyError::Kind;

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> parse_scalar_type(const std::string& name) {
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

std::size_t scalar_size(ScalarType t) {
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

bool is_float(ScalarType t) { return t == ScalarType::Float32 || t == ScalarType::Float64; }

template <typename T>
T load_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* bytes = reinterpret_cast<unsigned char*>(&v);
        std::reverse(bytes, bytes + sizeof(T));
    }
    return v;
}

template <typename T>
void store_le(std::ostream& out, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

double decode_binary(ScalarType t, const unsigned char* p) {
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
    return 0.0;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::Float32;
    bool is_list = false;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    PlyFormat format = PlyFormat::Ascii;
    std::vector<Element> elements;
};

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

Header parse_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "ply") {
        throw PlyError(Kind::MalformedHeader, "ply: missing 'ply' magic line");
    }
    Header header;
    bool have_format = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        std::istringstream words(line);
        std::string keyword;
        words >> keyword;
        const std::string where = "ply header line " + std::to_string(line_no);
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
        if (keyword == "end_header") {
            if (!have_format) throw PlyError(Kind::MalformedHeader, "ply: header has no format line");
            return header;
        }
        if (keyword == "format") {
            std::string fmt, version;
            words >> fmt >> version;
            if (fmt == "ascii") {
                header.format = PlyFormat::Ascii;
            } else if (fmt == "binary_little_endian") {
                header.format = PlyFormat::BinaryLittleEndian;
            } else if (fmt == "binary_big_endian") {
                throw PlyError(Kind::UnsupportedLayout, "ply: binary_big_endian is not supported");
            } else {
                throw PlyError(Kind::MalformedHeader, where + ": unknown format '" + fmt + "'");
            }
            have_format = true;
        } else if (keyword == "element") {
            Element e;
            long long count = -1;
            words >> e.name >> count;
            if (e.name.empty() || words.fail() || count < 0) {
                throw PlyError(Kind::MalformedHeader, where + ": malformed element line");
            }
            e.count = static_cast<std::size_t>(count);
            header.elements.push_back(std::move(e));
        } else if (keyword == "property") {
            if (header.elements.empty()) {
                throw PlyError(Kind::MalformedHeader, where + ": property before any element");
            }
            Property p;
            std::string type;
            words >> type;
            if (type == "list") {
                std::string count_type, item_type;
                words >> count_type >> item_type >> p.name;
                if (!parse_scalar_type(count_type) || !parse_scalar_type(item_type)) {
                    throw PlyError(Kind::MalformedHeader, where + ": unknown list property types");
                }
                p.is_list = true;
            } else {
                auto t = parse_scalar_type(type);
                if (!t) throw PlyError(Kind::MalformedHeader, where + ": unknown property type '" + type + "'");
                p.type = *t;
                words >> p.name;
            }
            if (p.name.empty()) throw PlyError(Kind::MalformedHeader, where + ": property without a name");
            header.elements.back().properties.push_back(std::move(p));
        } else {
            throw PlyError(Kind::MalformedHeader, where + ": unexpected keyword '" + keyword + "'");
        }
    }
    throw PlyError(Kind::MalformedHeader, "ply: end_header not found");
}

// Column index of each attribute in the vertex record, -1 when absent.
struct VertexLayout {
    int pos[3] = {-1, -1, -1};
    int color[3] = {-1, -1, -1};
    int normal[3] = {-1, -1, -1};
    bool color_is_uchar = true;
};

VertexLayout resolve_layout(const Element& vertex) {
    VertexLayout layout;
    static const char* kPos[3] = {"x", "y", "z"};
    static const char* kColor[3] = {"red", "green", "blue"};
    static const char* kNormal[3] = {"nx", "ny", "nz"};
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        const Property& p = vertex.properties[i];
        if (p.is_list) throw PlyError(Kind::UnsupportedLayout, "ply: list property '" + p.name + "' in vertex element");
        for (int a = 0; a < 3; ++a) {
            if (p.name == kPos[a]) layout.pos[a] = static_cast<int>(i);
            if (p.name == kColor[a]) layout.color[a] = static_cast<int>(i);
            if (p.name == kNormal[a]) layout.normal[a] = static_cast<int>(i);
        }
    }
    auto check_group = [&](const int (&cols)[3], const char* what, bool require) {
        const int present = static_cast<int>(std::count_if(cols, cols + 3, [](int c) { return c >= 0; }));
        if (present == 0 && !require) return false;
        if (present != 3) throw PlyError(Kind::UnsupportedLayout, std::string("ply: incomplete ") + what + " properties");
        return true;
    };
    check_group(layout.pos, "position", true);
    for (int c : layout.pos) {
        if (!is_float(vertex.properties[c].type)) {
            throw PlyError(Kind::UnsupportedLayout, "ply: positions must be float or double");
        }
    }
    if (check_group(layout.normal, "normal", false)) {
        for (int c : layout.normal) {
            if (!is_float(vertex.properties[c].type)) {
                throw PlyError(Kind::UnsupportedLayout, "ply: normals must be float or double");
            }
        }
    }
    if (check_group(layout.color, "color", false)) {
        const ScalarType t0 = vertex.properties[layout.color[0]].type;
        for (int c : layout.color) {
            if (vertex.properties[c].type != t0) throw PlyError(Kind::UnsupportedLayout, "ply: mixed color types");
        }
        if (t0 == ScalarType::UInt8) {
            layout.color_is_uchar = true;
        } else if (is_float(t0)) {
            layout.color_is_uchar = false;
        } else {
            throw PlyError(Kind::UnsupportedLayout, "ply: colors must be uchar or float");
        }
    }
    return layout;
}

void assemble_vertex(ppm::PointCloud& cloud, const VertexLayout& layout, const std::vector<double>& row) {
    cloud.positions.emplace_back(row[layout.pos[0]], row[layout.pos[1]], row[layout.pos[2]]);
    if (layout.color[0] >= 0) {
        const double scale = layout.color_is_uchar ? 1.0 / 255.0 : 1.0;
        cloud.colors.emplace_back(row[layout.color[0]] * scale, row[layout.color[1]] * scale,
                                  row[layout.color[2]] * scale);
    }
    if (layout.normal[0] >= 0) {
        cloud.normals.emplace_back(row[layout.normal[0]], row[layout.normal[1]], row[layout.normal[2]]);
    }
}

void read_binary_body(std::istream& in, const Element& vertex, const VertexLayout& layout, ppm::PointCloud& cloud) {
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (const auto& p : vertex.properties) {
        offsets.push_back(stride);
        stride += scalar_size(p.type);
    }
    std::vector<unsigned char> record(stride);
    std::vector<double> row(vertex.properties.size());
    for (std::size_t v = 0; v < vertex.count; ++v) {
        in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(stride));
        if (in.gcount() != static_cast<std::streamsize>(stride)) {
            throw PlyError(Kind::TruncatedBody, "ply: body truncated at vertex " + std::to_string(v) + " of " +
                                                    std::to_string(vertex.count));
        }
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = decode_binary(vertex.properties[i].type, &record[offsets[i]]);
        assemble_vertex(cloud, layout, row);
    }
}

void read_ascii_body(std::istream& in, const Element& vertex, const VertexLayout& layout, ppm::PointCloud& cloud) {
    std::vector<double> row(vertex.properties.size());
    std::string token;
    for (std::size_t v = 0; v < vertex.count; ++v) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!(in >> token)) {
                throw PlyError(Kind::TruncatedBody, "ply: body truncated at vertex " + std::to_string(v) + " of " +
                                                        std::to_string(vertex.count));
            }
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
            if (ec != std::errc() || ptr != token.data() + token.size()) {
                throw PlyError(Kind::MalformedBody, "ply: vertex " + std::to_string(v) + " property '" +
                                                        vertex.properties[i].name + "' is not a number: '" + token + "'");
            }
            row[i] = vertex.properties[i].type == ScalarType::Float32 ? static_cast<float>(value) : value;
        }
        assemble_vertex(cloud, layout, row);
    }
}

std::string format_float(float v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::uint8_t to_uchar(double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

}  // namespace

ppm::PointCloud read_ply(std::istream& in) {
    const Header header = parse_header(in);
    const Element* vertex = nullptr;
    for (const auto& e : header.elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
        if (e.count > 0) {
            throw PlyError(Kind::UnsupportedLayout, "ply: element '" + e.name + "' precedes the vertex element");
        }
    }
    if (vertex == nullptr) throw PlyError(Kind::UnsupportedLayout, "ply: no vertex element");

    const VertexLayout layout = resolve_layout(*vertex);
    ppm::PointCloud cloud;
    cloud.positions.reserve(vertex->count);
    if (header.format == PlyFormat::BinaryLittleEndian) {
        read_binary_body(in, *vertex, layout, cloud);
    } else {
        read_ascii_body(in, *vertex, layout, cloud);
    }

    // Gaussian-splatting exports commonly carry placeholder zero normals.
    if (cloud.has_normals() &&
        std::all_of(cloud.normals.begin(), cloud.normals.end(), [](const ppm::Vec3& n) { return n.isZero(0.0); })) {
        cloud.normals.clear();
    }
    try {
        cloud.validate();
    } catch (const InvalidArgument& e) {
        throw PlyError(Kind::MalformedBody, std::string("ply: ") + e.what());
    }
    return cloud;
}

ppm::PointCloud read_ply(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Direction::Read, "cannot open '" + path.string() + "' for reading");
    try {
        return read_ply(in);
    } catch (const PlyError& e) {
        throw PlyError(e.kind(), path.string() + ": " + e.what());
    }
}

void write_ply(const ppm::PointCloud& cloud, std::ostream& out, PlyFormat format) {
    cloud.validate();
    out << "ply\n"
        << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_normals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions[i];
        if (format == PlyFormat::BinaryLittleEndian) {
            for (int a = 0; a < 3; ++a) store_le(out, static_cast<float>(p(a)));
            if (cloud.has_normals()) {
                for (int a = 0; a < 3; ++a) store_le(out, static_cast<float>(cloud.normals[i](a)));
            }
            if (cloud.has_colors()) {
                for (int a = 0; a < 3; ++a) store_le(out, to_uchar(cloud.colors[i](a)));
            }
        } else {
            out << format_float(static_cast<float>(p.x())) << ' ' << format_float(static_cast<float>(p.y())) << ' '
                << format_float(static_cast<float>(p.z()));
            if (cloud.has_normals()) {
                for (int a = 0; a < 3; ++a) out << ' ' << format_float(static_cast<float>(cloud.normals[i](a)));
            }
            if (cloud.has_colors()) {
                for (int a = 0; a < 3; ++a) out << ' ' << static_cast<int>(to_uchar(cloud.colors[i](a)));
            }
            out << '\n';
        }
    }
}

void write_ply(const ppm::PointCloud& cloud, const fs::path& path, PlyFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Direction::Write, "cannot open '" + path.string() + "' for writing");
    write_ply(cloud, out, format);
    out.flush();
    if (!out) throw IoError(IoError::Direction::Write, "failed writing '" + path.string() + "'");
}

}  // namespace nakags::io
