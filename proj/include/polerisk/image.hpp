#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polerisk {

/// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> data;  // 3 * width * height

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h) : width(w), height(h), data(3 * w * h, 0) {}
};

/// Row-major luminance plane with values in [0,1].
class GrayRaster {
public:
    GrayRaster() = default;
    GrayRaster(std::size_t width, std::size_t height, double fill = 0.0);
    GrayRaster(std::size_t width, std::size_t height, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    double& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

    std::span<double> row(std::size_t y) { return {data_.data() + y * width_, width_}; }
    std::span<const double> row(std::size_t y) const { return {data_.data() + y * width_, width_}; }

    const std::vector<double>& values() const noexcept { return data_; }
    std::vector<double>& values() noexcept { return data_; }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

struct GradientField {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> gx;
    std::vector<double> gy;
    std::vector<double> magnitude;
};

/// Binary per-pixel edge map.
class EdgeMask {
public:
    EdgeMask() = default;
    EdgeMask(std::size_t width, std::size_t height) : width_(width), height_(height), bits_(width * height, 0) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
    void set(std::size_t x, std::size_t y, bool on = true) { bits_[y * width_ + x] = on ? 1 : 0; }

    std::size_t count() const;
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    friend bool operator==(const EdgeMask&, const EdgeMask&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Binary PNM codecs (P5 8/16-bit gray, P6 8-bit RGB). Errors are ParseError
/// with a byte offset.
RgbImage decode_pnm_rgb(std::span<const std::uint8_t> bytes);
GrayRaster decode_pgm_gray(std::span<const std::uint8_t> bytes);
EdgeMask decode_pgm_mask(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
std::vector<std::uint8_t> encode_pgm(const GrayRaster& raster);
std::vector<std::uint8_t> encode_pgm(const EdgeMask& mask);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace polerisk
