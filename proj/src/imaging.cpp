#include "polerisk/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "polerisk/error.hpp"
#include "polerisk/simd/kernels.hpp"

namespace polerisk {

GrayRaster to_grayscale(const RgbImage& rgb) {
    if (rgb.width == 0 || rgb.height == 0) throw Error("to_grayscale: zero-dimension raster");
    if (rgb.data.size() != 3 * rgb.width * rgb.height) throw Error("to_grayscale: pixel buffer size mismatch");
    std::vector<double> out(rgb.width * rgb.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lum = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
        out[i] = std::clamp(lum / 255.0, 0.0, 1.0);
    }
    return GrayRaster(rgb.width, rgb.height, std::move(out));
}

GrayRaster gaussian_blur5(const GrayRaster& img, double sigma) {
    if (img.empty()) throw Error("gaussian_blur5: empty raster");
    if (!(sigma > 0)) throw Error("gaussian_blur5: sigma must be positive");
    std::array<double, 3> taps{};  // outer, inner, centre
    for (int k = 0; k < 3; ++k) {
        const double d = 2.0 - k;
        taps[static_cast<std::size_t>(k)] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    const double norm = 2.0 * taps[0] + 2.0 * taps[1] + taps[2];
    for (double& t : taps) t /= norm;

    const auto& k = simd::kernels();
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    GrayRaster horiz(w, h);
    for (std::size_t y = 0; y < h; ++y) k.blur_row5(img.row(y).data(), w, taps.data(), horiz.row(y).data());
    GrayRaster out(w, h);
    auto row = [&](std::ptrdiff_t y) {
        return horiz.row(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1)))
            .data();
    };
    for (std::size_t y = 0; y < h; ++y) {
        const auto iy = static_cast<std::ptrdiff_t>(y);
        k.blur_col5(row(iy - 2), row(iy - 1), row(iy), row(iy + 1), row(iy + 2), w, taps.data(), out.row(y).data());
    }
    return out;
}

GradientField sobel_gradients(const GrayRaster& img) {
    if (img.width() < 3 || img.height() < 3) throw Error("sobel_gradients: raster smaller than 3x3");
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    GradientField g{w, h, std::vector<double>(w * h), std::vector<double>(w * h), std::vector<double>(w * h)};
    const auto& k = simd::kernels();
    for (std::size_t y = 0; y < h; ++y) {
        const double* up = img.row(y == 0 ? 0 : y - 1).data();
        const double* down = img.row(y + 1 == h ? h - 1 : y + 1).data();
        k.sobel_row(up, img.row(y).data(), down, w, g.gx.data() + y * w, g.gy.data() + y * w,
                    g.magnitude.data() + y * w);
    }
    return g;
}

GradientDirection quantize_direction(double gx, double gy) {
    constexpr double kTan22 = 0.41421356237309503;  // tan(22.5 deg)
    constexpr double kTan67 = 2.414213562373095;    // tan(67.5 deg)
    const double ax = std::abs(gx);
    const double ay = std::abs(gy);
    if (ay <= kTan22 * ax) return GradientDirection::horizontal;
    if (ay > kTan67 * ax) return GradientDirection::vertical;
    // Image y grows downwards: same-sign components point down-right.
    return (gx > 0) == (gy > 0) ? GradientDirection::diagonal_down : GradientDirection::diagonal_up;
}

EdgeMask suppress_and_link(const GradientField& g, double low_abs, double high_abs) {
    const std::size_t w = g.width;
    const std::size_t h = g.height;
    const auto mag = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(w) || y >= static_cast<std::ptrdiff_t>(h)) return 0.0;
        return g.magnitude[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };

    // 0 = suppressed, 1 = weak, 2 = strong
    std::vector<std::uint8_t> state(w * h, 0);
    std::vector<std::size_t> stack;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = y * w + x;
            const double m = g.magnitude[i];
            if (m <= 0.0 || m < low_abs) continue;
            int dx = 1;
            int dy = 0;
            switch (quantize_direction(g.gx[i], g.gy[i])) {
                case GradientDirection::horizontal: dx = 1; dy = 0; break;
                case GradientDirection::vertical: dx = 0; dy = 1; break;
                case GradientDirection::diagonal_down: dx = 1; dy = 1; break;
                case GradientDirection::diagonal_up: dx = 1; dy = -1; break;
            }
            const auto ix = static_cast<std::ptrdiff_t>(x);
            const auto iy = static_cast<std::ptrdiff_t>(y);
            if (m < mag(ix + dx, iy + dy) || m < mag(ix - dx, iy - dy)) continue;
            state[i] = m >= high_abs ? 2 : 1;
            if (state[i] == 2) stack.push_back(i);
        }
    }

    EdgeMask mask(w, h);
    for (std::size_t i : stack) mask.set(i % w, i / w);
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const auto x = static_cast<std::ptrdiff_t>(i % w);
        const auto y = static_cast<std::ptrdiff_t>(i / w);
        for (std::ptrdiff_t ny = y - 1; ny <= y + 1; ++ny) {
            for (std::ptrdiff_t nx = x - 1; nx <= x + 1; ++nx) {
                if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w) || ny >= static_cast<std::ptrdiff_t>(h)) {
                    continue;
                }
                const auto ux = static_cast<std::size_t>(nx);
                const auto uy = static_cast<std::size_t>(ny);
                const std::size_t j = uy * w + ux;
                if (state[j] == 1 && !mask.at(ux, uy)) {
                    mask.set(ux, uy);
                    stack.push_back(j);
                }
            }
        }
    }
    return mask;
}

EdgeMask canny_edges(const GrayRaster& img, const CannyConfig& config) {
    if (!(config.low >= 0.0 && config.low < config.high)) throw Error("canny_edges: require 0 <= low < high");
    const GradientField g = sobel_gradients(config.blur ? gaussian_blur5(img, config.sigma) : img);
    return suppress_and_link(g, config.low * kSobelMagnitudeScale, config.high * kSobelMagnitudeScale);
}

EdgeMask canny_edges(const GrayRaster& img, double low, double high) {
    CannyConfig config;
    config.low = low;
    config.high = high;
    return canny_edges(img, config);
}

Crop crop_window(std::size_t width, std::size_t height, const BBox& box, double margin) {
    if (!box.valid()) throw Error("crop_roi: invalid box");
    const double x0 = std::max(0.0, std::floor(box.x_min - margin));
    const double y0 = std::max(0.0, std::floor(box.y_min - margin));
    const double x1 = std::min(static_cast<double>(width), std::ceil(box.x_max + margin));
    const double y1 = std::min(static_cast<double>(height), std::ceil(box.y_max + margin));
    if (!(x0 < x1 && y0 < y1)) throw Error("crop_roi: box does not intersect the image");
    return {static_cast<std::size_t>(x0), static_cast<std::size_t>(y0), static_cast<std::size_t>(x1 - x0),
            static_cast<std::size_t>(y1 - y0)};
}

GrayCrop crop_roi(const GrayRaster& img, const BBox& box, double margin) {
    const Crop c = crop_window(img.width(), img.height(), box, margin);
    GrayRaster out(c.width, c.height);
    for (std::size_t y = 0; y < c.height; ++y) {
        const auto src = img.row(c.y0 + y).subspan(c.x0, c.width);
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return {std::move(out), c};
}

MaskCrop crop_roi(const EdgeMask& mask, const BBox& box, double margin) {
    const Crop c = crop_window(mask.width(), mask.height(), box, margin);
    EdgeMask out(c.width, c.height);
    for (std::size_t y = 0; y < c.height; ++y) {
        for (std::size_t x = 0; x < c.width; ++x) {
            if (mask.at(c.x0 + x, c.y0 + y)) out.set(x, y);
        }
    }
    return {std::move(out), c};
}

}  // namespace polerisk
