#include "polerisk/simd/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <limits>

#define POLERISK_AVX2 __attribute__((target("avx2")))

namespace polerisk::simd {

namespace {

// Border columns are delegated to the scalar reference so the clamp logic
// lives in one place.

POLERISK_AVX2 void blur_row5(const double* src, std::size_t width, const double* w, double* dst) {
    if (width < 8) {
        detail::scalar_table().blur_row5(src, width, w, dst);
        return;
    }
    double head[2];
    double tail[2];
    const auto scalar_at = [&](std::size_t x) {
        const auto clamp = [&](std::ptrdiff_t i) {
            return src[i < 0 ? 0 : (static_cast<std::size_t>(i) >= width ? width - 1 : static_cast<std::size_t>(i))];
        };
        const auto ix = static_cast<std::ptrdiff_t>(x);
        const double outer = clamp(ix - 2) + clamp(ix + 2);
        const double inner = clamp(ix - 1) + clamp(ix + 1);
        double acc = w[2] * src[x];
        acc = acc + w[1] * inner;
        acc = acc + w[0] * outer;
        return acc;
    };
    head[0] = scalar_at(0);
    head[1] = scalar_at(1);
    tail[0] = scalar_at(width - 2);
    tail[1] = scalar_at(width - 1);

    const __m256d w0 = _mm256_set1_pd(w[0]);
    const __m256d w1 = _mm256_set1_pd(w[1]);
    const __m256d w2 = _mm256_set1_pd(w[2]);
    std::size_t x = 2;
    for (; x + 4 <= width - 2; x += 4) {
        const __m256d c = _mm256_loadu_pd(src + x);
        const __m256d inner = _mm256_add_pd(_mm256_loadu_pd(src + x - 1), _mm256_loadu_pd(src + x + 1));
        const __m256d outer = _mm256_add_pd(_mm256_loadu_pd(src + x - 2), _mm256_loadu_pd(src + x + 2));
        __m256d acc = _mm256_mul_pd(w2, c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w1, inner));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w0, outer));
        _mm256_storeu_pd(dst + x, acc);
    }
    for (; x < width - 2; ++x) dst[x] = scalar_at(x);
    dst[0] = head[0];
    dst[1] = head[1];
    dst[width - 2] = tail[0];
    dst[width - 1] = tail[1];
}

POLERISK_AVX2 void blur_col5(const double* r0, const double* r1, const double* r2, const double* r3,
                             const double* r4, std::size_t width, const double* w, double* dst) {
    const __m256d w0 = _mm256_set1_pd(w[0]);
    const __m256d w1 = _mm256_set1_pd(w[1]);
    const __m256d w2 = _mm256_set1_pd(w[2]);
    std::size_t x = 0;
    for (; x + 4 <= width; x += 4) {
        __m256d acc = _mm256_mul_pd(w2, _mm256_loadu_pd(r2 + x));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w1, _mm256_add_pd(_mm256_loadu_pd(r1 + x), _mm256_loadu_pd(r3 + x))));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w0, _mm256_add_pd(_mm256_loadu_pd(r0 + x), _mm256_loadu_pd(r4 + x))));
        _mm256_storeu_pd(dst + x, acc);
    }
    if (x < width) detail::scalar_table().blur_col5(r0 + x, r1 + x, r2 + x, r3 + x, r4 + x, width - x, w, dst + x);
}

POLERISK_AVX2 void sobel_row(const double* up, const double* mid, const double* down, std::size_t width, double* gx,
                             double* gy, double* mag) {
    if (width < 6) {
        detail::scalar_table().sobel_row(up, mid, down, width, gx, gy, mag);
        return;
    }
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t x = 1;
    for (; x + 4 <= width - 1; x += 4) {
        const __m256d ul = _mm256_loadu_pd(up + x - 1);
        const __m256d uc = _mm256_loadu_pd(up + x);
        const __m256d ur = _mm256_loadu_pd(up + x + 1);
        const __m256d ml = _mm256_loadu_pd(mid + x - 1);
        const __m256d mr = _mm256_loadu_pd(mid + x + 1);
        const __m256d dl = _mm256_loadu_pd(down + x - 1);
        const __m256d dc = _mm256_loadu_pd(down + x);
        const __m256d dr = _mm256_loadu_pd(down + x + 1);
        const __m256d sx = _mm256_add_pd(_mm256_mul_pd(two, _mm256_sub_pd(mr, ml)),
                                         _mm256_add_pd(_mm256_sub_pd(ur, ul), _mm256_sub_pd(dr, dl)));
        const __m256d sy = _mm256_add_pd(_mm256_mul_pd(two, _mm256_sub_pd(dc, uc)),
                                         _mm256_add_pd(_mm256_sub_pd(dl, ul), _mm256_sub_pd(dr, ur)));
        _mm256_storeu_pd(gx + x, sx);
        _mm256_storeu_pd(gy + x, sy);
        _mm256_storeu_pd(mag + x, _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(sx, sx), _mm256_mul_pd(sy, sy))));
    }
    // Column 0, the scalar remainder and the last column, each computed on a
    // 3-wide window so the clamp at the true borders is reproduced exactly.
    double tgx[3];
    double tgy[3];
    double tmag[3];
    detail::scalar_table().sobel_row(up, mid, down, 2, tgx, tgy, tmag);
    // A 2-wide window clamps x+1 to column 1 for x=0, which matches the full row.
    gx[0] = tgx[0];
    gy[0] = tgy[0];
    mag[0] = tmag[0];
    for (; x < width - 1; ++x) {
        detail::scalar_table().sobel_row(up + x - 1, mid + x - 1, down + x - 1, 3, tgx, tgy, tmag);
        gx[x] = tgx[1];
        gy[x] = tgy[1];
        mag[x] = tmag[1];
    }
    detail::scalar_table().sobel_row(up + width - 2, mid + width - 2, down + width - 2, 2, tgx, tgy, tmag);
    gx[width - 1] = tgx[1];
    gy[width - 1] = tgy[1];
    mag[width - 1] = tmag[1];
}

POLERISK_AVX2 void hough_bins(double x, double y, const double* cos_t, const double* sin_t, std::size_t n,
                              double inv_rho_res, double offset, std::int32_t* bins) {
    const __m256d vx = _mm256_set1_pd(x);
    const __m256d vy = _mm256_set1_pd(y);
    const __m256d inv = _mm256_set1_pd(inv_rho_res);
    const __m256d off = _mm256_set1_pd(offset);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d rho = _mm256_add_pd(_mm256_mul_pd(vx, _mm256_loadu_pd(cos_t + t)),
                                          _mm256_mul_pd(vy, _mm256_loadu_pd(sin_t + t)));
        const __m256d v = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rho, inv), off), half);
        const __m128i b = _mm256_cvttpd_epi32(_mm256_floor_pd(v));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(bins + t), b);
    }
    if (t < n) detail::scalar_table().hough_bins(x, y, cos_t + t, sin_t + t, n - t, inv_rho_res, offset, bins + t);
}

POLERISK_AVX2 NearestHit nearest(double px, double py, double pz, const double* xs, const double* ys,
                                 const double* zs, std::size_t n) {
    const __m256d vx = _mm256_set1_pd(px);
    const __m256d vy = _mm256_set1_pd(py);
    const __m256d vz = _mm256_set1_pd(pz);
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best_idx = _mm256_setzero_pd();
    __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    const __m256d four = _mm256_set1_pd(4.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vy);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vz);
        const __m256d d2 =
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
        const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
        best = _mm256_blendv_pd(best, d2, lt);
        best_idx = _mm256_blendv_pd(best_idx, idx, lt);
        idx = _mm256_add_pd(idx, four);
    }
    alignas(32) double lane_d2[4];
    alignas(32) double lane_idx[4];
    _mm256_store_pd(lane_d2, best);
    _mm256_store_pd(lane_idx, best_idx);
    NearestHit hit{std::numeric_limits<double>::infinity(), 0};
    for (int l = 0; l < 4; ++l) {
        const auto li = static_cast<std::size_t>(lane_idx[l]);
        if (lane_d2[l] < hit.d2 || (lane_d2[l] == hit.d2 && li < hit.index)) hit = {lane_d2[l], li};
    }
    if (i < n) {
        const NearestHit rest = detail::scalar_table().nearest(px, py, pz, xs + i, ys + i, zs + i, n - i);
        if (rest.d2 < hit.d2) hit = {rest.d2, rest.index + i};
    }
    return hit;
}

POLERISK_AVX2 std::size_t within_radius(double px, double py, double pz, const double* xs, const double* ys,
                                        const double* zs, std::size_t n, double r2, std::uint32_t* out) {
    const __m256d vx = _mm256_set1_pd(px);
    const __m256d vy = _mm256_set1_pd(py);
    const __m256d vz = _mm256_set1_pd(pz);
    const __m256d vr2 = _mm256_set1_pd(r2);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vy);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vz);
        const __m256d d2 =
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
        int mask = _mm256_movemask_pd(_mm256_cmp_pd(d2, vr2, _CMP_LE_OQ));
        while (mask != 0) {
            const int bit = __builtin_ctz(static_cast<unsigned>(mask));
            out[count++] = static_cast<std::uint32_t>(i + static_cast<std::size_t>(bit));
            mask &= mask - 1;
        }
    }
    if (i < n) {
        const std::size_t tail = detail::scalar_table().within_radius(px, py, pz, xs + i, ys + i, zs + i, n - i, r2,
                                                                      out + count);
        for (std::size_t k = 0; k < tail; ++k) out[count + k] += static_cast<std::uint32_t>(i);
        count += tail;
    }
    return count;
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
    static const KernelTable table{blur_row5, blur_col5, sobel_row, hough_bins, nearest, within_radius};
    return &table;
}

}  // namespace detail

}  // namespace polerisk::simd

#else

namespace polerisk::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace polerisk::simd::detail

#endif
