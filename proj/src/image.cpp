#include "polerisk/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

#include "pnm_header.hpp"
#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"

namespace polerisk {

GrayRaster::GrayRaster(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

GrayRaster::GrayRaster(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) throw Error("raster data length does not match dimensions");
}

std::size_t EdgeMask::count() const {
    return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace detail {

std::string HeaderTokenizer::next(const char* what) {
    for (;;) {
        while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
        if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
            while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            continue;
        }
        break;
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    if (start == pos_) throw ParseError::at_offset(std::string("truncated header: missing ") + what, start);
    return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
}

std::size_t HeaderTokenizer::unsigned_value(const char* what) {
    const std::size_t start = pos_;
    const std::string token = next(what);
    const auto v = csv::parse_int(token);
    if (!v || *v <= 0) throw ParseError::at_offset(std::string("invalid ") + what, start);
    return static_cast<std::size_t>(*v);
}

void HeaderTokenizer::single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
        throw ParseError::at_offset("truncated header: expected whitespace before payload", pos_);
    }
    ++pos_;
}

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes) {
    HeaderTokenizer tok(bytes);
    PnmHeader h;
    h.magic = tok.next("magic");
    if (h.magic != "P5" && h.magic != "P6") throw ParseError::at_offset("bad magic '" + h.magic + "'", 0);
    h.width = tok.unsigned_value("width");
    h.height = tok.unsigned_value("height");
    const std::size_t maxval_at = tok.offset();
    const std::size_t maxval = tok.unsigned_value("maxval");
    if (maxval > 65535) throw ParseError::at_offset("maxval out of range", maxval_at);
    h.maxval = static_cast<std::uint32_t>(maxval);
    tok.single_whitespace();
    h.data_offset = tok.offset();
    return h;
}

}  // namespace detail

namespace {

struct PnmSamples {
    detail::PnmHeader header;
    std::vector<std::uint32_t> samples;
};

PnmSamples read_samples(std::span<const std::uint8_t> bytes, std::size_t channels) {
    PnmSamples out{detail::parse_pnm_header(bytes), {}};
    const auto& h = out.header;
    const std::size_t bps = h.maxval > 255 ? 2 : 1;
    const std::size_t count = h.width * h.height * channels;
    const std::size_t need = count * bps;
    if (bytes.size() - h.data_offset < need) {
        throw ParseError::at_offset("truncated payload", bytes.size());
    }
    out.samples.resize(count);
    const std::uint8_t* p = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < count; ++i) {
        out.samples[i] = bps == 2 ? (std::uint32_t{p[2 * i]} << 8) | p[2 * i + 1] : p[i];
    }
    return out;
}

std::vector<std::uint8_t> encode_header(const char* magic, std::size_t w, std::size_t h, unsigned maxval) {
    const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                          std::to_string(maxval) + "\n";
    return {s.begin(), s.end()};
}

}  // namespace

RgbImage decode_pnm_rgb(std::span<const std::uint8_t> bytes) {
    const auto header = detail::parse_pnm_header(bytes);
    const std::size_t channels = header.magic == "P6" ? 3 : 1;
    const auto px = read_samples(bytes, channels);
    RgbImage img(header.width, header.height);
    const double scale = 255.0 / header.maxval;
    for (std::size_t i = 0; i < header.width * header.height; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const std::uint32_t s = px.samples[i * channels + (channels == 3 ? c : 0)];
            img.data[3 * i + c] = static_cast<std::uint8_t>(std::min(255.0, s * scale + 0.5));
        }
    }
    return img;
}

GrayRaster decode_pgm_gray(std::span<const std::uint8_t> bytes) {
    const auto header = detail::parse_pnm_header(bytes);
    if (header.magic != "P5") throw ParseError::at_offset("expected P5 graymap", 0);
    const auto px = read_samples(bytes, 1);
    std::vector<double> data(px.samples.size());
    std::transform(px.samples.begin(), px.samples.end(), data.begin(),
                   [&](std::uint32_t s) { return std::min(1.0, static_cast<double>(s) / header.maxval); });
    return GrayRaster(header.width, header.height, std::move(data));
}

EdgeMask decode_pgm_mask(std::span<const std::uint8_t> bytes) {
    const auto header = detail::parse_pnm_header(bytes);
    if (header.magic != "P5") throw ParseError::at_offset("expected P5 graymap", 0);
    const auto px = read_samples(bytes, 1);
    EdgeMask mask(header.width, header.height);
    for (std::size_t y = 0; y < header.height; ++y) {
        for (std::size_t x = 0; x < header.width; ++x) {
            if (px.samples[y * header.width + x] != 0) mask.set(x, y);
        }
    }
    return mask;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
    auto out = encode_header("P6", image.width, image.height, 255);
    out.insert(out.end(), image.data.begin(), image.data.end());
    return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayRaster& raster) {
    auto out = encode_header("P5", raster.width(), raster.height(), 255);
    for (double v : raster.values()) {
        out.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
    }
    return out;
}

std::vector<std::uint8_t> encode_pgm(const EdgeMask& mask) {
    auto out = encode_header("P5", mask.width(), mask.height(), 255);
    for (std::uint8_t b : mask.bits()) out.push_back(b ? 255 : 0);
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path);
}

}  // namespace polerisk
