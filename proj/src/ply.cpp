#include "polerisk/ply.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"

namespace polerisk {

namespace {

enum class ScalarType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
    if (name == "char" || name == "int8") return ScalarType::int8;
    if (name == "uchar" || name == "uint8") return ScalarType::uint8;
    if (name == "short" || name == "int16") return ScalarType::int16;
    if (name == "ushort" || name == "uint16") return ScalarType::uint16;
    if (name == "int" || name == "int32") return ScalarType::int32;
    if (name == "uint" || name == "uint32") return ScalarType::uint32;
    if (name == "float" || name == "float32") return ScalarType::float32;
    if (name == "double" || name == "float64") return ScalarType::float64;
    return std::nullopt;
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::int8:
        case ScalarType::uint8: return 1;
        case ScalarType::int16:
        case ScalarType::uint16: return 2;
        case ScalarType::int32:
        case ScalarType::uint32:
        case ScalarType::float32: return 4;
        case ScalarType::float64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::float32;
    bool is_list = false;
    ScalarType count_type = ScalarType::uint8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
    std::size_t line = 0;
};

struct Header {
    bool ascii = true;
    std::vector<Element> elements;
    std::size_t body_offset = 0;
    std::size_t end_line = 0;
};

std::vector<std::string_view> words(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

Header parse_header(std::span<const std::uint8_t> bytes) {
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    Header h;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool saw_format = false;
    for (;;) {
        const std::size_t end = text.find('\n', pos);
        ++line_no;
        if (end == std::string_view::npos) throw ParseError::at_line("PLY header not terminated by end_header", line_no);
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        const auto w = words(line);
        if (line_no == 1) {
            if (w.size() != 1 || w[0] != "ply") throw ParseError::at_line("missing 'ply' magic", line_no);
            continue;
        }
        if (w.empty() || w[0] == "comment" || w[0] == "obj_info") continue;
        if (w[0] == "format") {
            if (w.size() != 3 || w[2] != "1.0") throw ParseError::at_line("malformed format line", line_no);
            if (w[1] == "ascii") {
                h.ascii = true;
            } else if (w[1] == "binary_little_endian") {
                h.ascii = false;
            } else {
                throw ParseError::at_line("unsupported PLY format '" + std::string(w[1]) + "'", line_no);
            }
            saw_format = true;
        } else if (w[0] == "element") {
            const auto count = w.size() == 3 ? csv::parse_int(w[2]) : std::nullopt;
            if (!count || *count < 0) throw ParseError::at_line("malformed element line", line_no);
            h.elements.push_back({std::string(w[1]), static_cast<std::size_t>(*count), {}, line_no});
        } else if (w[0] == "property") {
            if (h.elements.empty()) throw ParseError::at_line("property before any element", line_no);
            Property p;
            if (w.size() == 5 && w[1] == "list") {
                const auto ct = scalar_type(w[2]);
                const auto it = scalar_type(w[3]);
                if (!ct || !it) throw ParseError::at_line("unknown list property type", line_no);
                p = {std::string(w[4]), *it, true, *ct};
            } else if (w.size() == 3) {
                const auto t = scalar_type(w[1]);
                if (!t) throw ParseError::at_line("unknown property type '" + std::string(w[1]) + "'", line_no);
                p = {std::string(w[2]), *t, false, ScalarType::uint8};
            } else {
                throw ParseError::at_line("malformed property line", line_no);
            }
            h.elements.back().properties.push_back(p);
        } else if (w[0] == "end_header") {
            if (!saw_format) throw ParseError::at_line("missing format line", line_no);
            h.body_offset = pos;
            h.end_line = line_no;
            return h;
        } else {
            throw ParseError::at_line("unexpected header keyword '" + std::string(w[0]) + "'", line_no);
        }
    }
}

class BodyReader {
public:
    BodyReader(std::span<const std::uint8_t> bytes, std::size_t offset, bool ascii)
        : bytes_(bytes), pos_(offset), ascii_(ascii) {}

    double read(ScalarType t) { return ascii_ ? read_ascii() : read_binary(t); }
    std::size_t offset() const { return pos_; }

private:
    double read_ascii() {
        while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
        if (start == pos_) throw ParseError::at_offset("unexpected end of PLY body", start);
        const std::string_view token(reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start);
        const auto v = csv::parse_double(token);
        if (!v) throw ParseError::at_offset("invalid number '" + std::string(token) + "'", start);
        return *v;
    }

    double read_binary(ScalarType t) {
        const std::size_t n = type_size(t);
        if (bytes_.size() - pos_ < n) throw ParseError::at_offset("unexpected end of PLY body", pos_);
        std::uint64_t raw = 0;
        for (std::size_t k = 0; k < n; ++k) raw |= std::uint64_t{bytes_[pos_ + k]} << (8 * k);
        pos_ += n;
        switch (t) {
            case ScalarType::int8: return static_cast<std::int8_t>(raw);
            case ScalarType::uint8: return static_cast<std::uint8_t>(raw);
            case ScalarType::int16: return static_cast<std::int16_t>(raw);
            case ScalarType::uint16: return static_cast<std::uint16_t>(raw);
            case ScalarType::int32: return static_cast<std::int32_t>(raw);
            case ScalarType::uint32: return static_cast<std::uint32_t>(raw);
            case ScalarType::float32: return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
            case ScalarType::float64: return std::bit_cast<double>(raw);
        }
        return 0;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
    bool ascii_;
};

}  // namespace

PointCloud parse_ply(std::span<const std::uint8_t> bytes) {
    const Header header = parse_header(bytes);
    const auto vertex = std::find_if(header.elements.begin(), header.elements.end(),
                                     [](const Element& e) { return e.name == "vertex"; });
    if (vertex == header.elements.end()) {
        throw ParseError::at_line("PLY header has no vertex element", header.end_line);
    }

    auto index_of = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
            if (vertex->properties[i].name == name && !vertex->properties[i].is_list) return i;
        }
        return std::nullopt;
    };
    const auto ix = index_of("x");
    const auto iy = index_of("y");
    const auto iz = index_of("z");
    if (!ix || !iy || !iz) throw ParseError::at_line("PLY vertex element lacks x, y or z", vertex->line);
    const auto ir = index_of("red");
    const auto ig = index_of("green");
    const auto ib = index_of("blue");
    const bool colors = ir && ig && ib;

    PointCloud cloud;
    BodyReader reader(bytes, header.body_offset, header.ascii);
    std::vector<double> values;
    for (const Element& element : header.elements) {
        const bool is_vertex = &element == &*vertex;
        if (is_vertex) {
            cloud.points.reserve(element.count);
            if (colors) cloud.colors.reserve(element.count);
        }
        for (std::size_t i = 0; i < element.count; ++i) {
            const std::size_t record_offset = reader.offset();
            values.assign(element.properties.size(), 0.0);
            for (std::size_t p = 0; p < element.properties.size(); ++p) {
                const Property& prop = element.properties[p];
                if (prop.is_list) {
                    const double n = reader.read(prop.count_type);
                    if (n < 0 || n != std::floor(n)) throw ParseError::at_offset("invalid list length", reader.offset());
                    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) reader.read(prop.type);
                } else {
                    values[p] = reader.read(prop.type);
                }
            }
            if (!is_vertex) continue;
            const Vec3 pt{values[*ix], values[*iy], values[*iz]};
            if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
                throw ParseError::at_offset("non-finite vertex coordinate", record_offset);
            }
            cloud.points.push_back(pt);
            if (colors) {
                auto channel = [&](std::size_t k) {
                    return static_cast<std::uint8_t>(std::clamp(values[k], 0.0, 255.0));
                };
                cloud.colors.push_back({channel(*ir), channel(*ig), channel(*ib)});
            }
        }
        if (is_vertex) break;
    }
    return cloud;
}

std::vector<std::uint8_t> serialize_ply(const PointCloud& cloud, PlyFormat format) {
    std::string header = "ply\nformat ";
    header += format == PlyFormat::ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
    header += "element vertex " + std::to_string(cloud.points.size()) + "\n";
    header += "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_colors()) header += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    header += "end_header\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());

    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (format == PlyFormat::ascii) {
            std::string line = csv::format_double(p.x) + " " + csv::format_double(p.y) + " " + csv::format_double(p.z);
            if (cloud.has_colors()) {
                for (std::uint8_t c : cloud.colors[i]) line += " " + std::to_string(c);
            }
            line += "\n";
            out.insert(out.end(), line.begin(), line.end());
        } else {
            for (double v : {p.x, p.y, p.z}) {
                const auto raw = std::bit_cast<std::uint64_t>(v);
                for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(raw >> (8 * k)));
            }
            if (cloud.has_colors()) out.insert(out.end(), cloud.colors[i].begin(), cloud.colors[i].end());
        }
    }
    return out;
}

}  // namespace polerisk
