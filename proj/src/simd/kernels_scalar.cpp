#include <cmath>
#include <limits>

#include "polerisk/simd/kernels.hpp"

namespace polerisk::simd {

namespace {

inline std::size_t clamp_index(std::ptrdiff_t i, std::size_t width) {
    if (i < 0) return 0;
    if (static_cast<std::size_t>(i) >= width) return width - 1;
    return static_cast<std::size_t>(i);
}

void blur_row5(const double* src, std::size_t width, const double* w, double* dst) {
    for (std::size_t x = 0; x < width; ++x) {
        const auto ix = static_cast<std::ptrdiff_t>(x);
        const double outer = src[clamp_index(ix - 2, width)] + src[clamp_index(ix + 2, width)];
        const double inner = src[clamp_index(ix - 1, width)] + src[clamp_index(ix + 1, width)];
        double acc = w[2] * src[x];
        acc = acc + w[1] * inner;
        acc = acc + w[0] * outer;
        dst[x] = acc;
    }
}

void blur_col5(const double* r0, const double* r1, const double* r2, const double* r3, const double* r4,
               std::size_t width, const double* w, double* dst) {
    for (std::size_t x = 0; x < width; ++x) {
        double acc = w[2] * r2[x];
        acc = acc + w[1] * (r1[x] + r3[x]);
        acc = acc + w[0] * (r0[x] + r4[x]);
        dst[x] = acc;
    }
}

void sobel_row(const double* up, const double* mid, const double* down, std::size_t width, double* gx, double* gy,
               double* mag) {
    for (std::size_t x = 0; x < width; ++x) {
        const auto ix = static_cast<std::ptrdiff_t>(x);
        const std::size_t l = clamp_index(ix - 1, width);
        const std::size_t r = clamp_index(ix + 1, width);
        const double sx = 2.0 * (mid[r] - mid[l]) + ((up[r] - up[l]) + (down[r] - down[l]));
        const double sy = 2.0 * (down[x] - up[x]) + ((down[l] - up[l]) + (down[r] - up[r]));
        gx[x] = sx;
        gy[x] = sy;
        mag[x] = std::sqrt(sx * sx + sy * sy);
    }
}

void hough_bins(double x, double y, const double* cos_t, const double* sin_t, std::size_t n, double inv_rho_res,
                double offset, std::int32_t* bins) {
    for (std::size_t t = 0; t < n; ++t) {
        const double rho = x * cos_t[t] + y * sin_t[t];
        bins[t] = static_cast<std::int32_t>(std::floor(rho * inv_rho_res + offset + 0.5));
    }
}

NearestHit nearest(double px, double py, double pz, const double* xs, const double* ys, const double* zs,
                   std::size_t n) {
    NearestHit best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double dz = zs[i] - pz;
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best.d2) best = {d2, i};
    }
    return best;
}

std::size_t within_radius(double px, double py, double pz, const double* xs, const double* ys, const double* zs,
                          std::size_t n, double r2, std::uint32_t* out) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double dz = zs[i] - pz;
        if (dx * dx + dy * dy + dz * dz <= r2) out[count++] = static_cast<std::uint32_t>(i);
    }
    return count;
}

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
    static const KernelTable table{blur_row5, blur_col5, sobel_row, hough_bins, nearest, within_radius};
    return table;
}

}  // namespace detail

}  // namespace polerisk::simd
