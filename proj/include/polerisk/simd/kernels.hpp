#pragma once

// Data-parallel inner loops used by the imaging, Hough and point-cloud code.
// Every kernel has a scalar reference implementation and an AVX2 variant;
// the variants perform the same IEEE operations in the same order, so results
// are bit-identical and either path can be selected at runtime.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace polerisk::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

struct NearestHit {
    double d2;           // squared distance, +inf when n == 0
    std::size_t index;   // offset into the block
};

struct KernelTable {
    /// dst[x] = w[2]*src[x] + w[1]*(src[x-1]+src[x+1]) + w[0]*(src[x-2]+src[x+2]),
    /// with clamped borders. `w` holds the outer, inner and centre tap.
    void (*blur_row5)(const double* src, std::size_t width, const double* w, double* dst);

    /// dst[x] = w[2]*r2[x] + w[1]*(r1[x]+r3[x]) + w[0]*(r0[x]+r4[x]).
    void (*blur_col5)(const double* r0, const double* r1, const double* r2, const double* r3, const double* r4,
                      std::size_t width, const double* w, double* dst);

    /// 3x3 Sobel for one row given its clamped neighbours `up` and `down`:
    ///   gx = 2*(mid[x+1]-mid[x-1]) + ((up[x+1]-up[x-1]) + (down[x+1]-down[x-1]))
    ///   gy = 2*(down[x]-up[x]) + ((down[x-1]-up[x-1]) + (down[x+1]-up[x+1]))
    ///   mag = sqrt(gx*gx + gy*gy)
    void (*sobel_row)(const double* up, const double* mid, const double* down, std::size_t width, double* gx,
                      double* gy, double* mag);

    /// bins[t] = floor((x*cos_t[t] + y*sin_t[t]) * inv_rho_res + offset + 0.5)
    void (*hough_bins)(double x, double y, const double* cos_t, const double* sin_t, std::size_t n,
                       double inv_rho_res, double offset, std::int32_t* bins);

    /// Closest of n SoA points to (px,py,pz); d2 = dx*dx + dy*dy + dz*dz.
    /// Ties resolve to the lowest index.
    NearestHit (*nearest)(double px, double py, double pz, const double* xs, const double* ys, const double* zs,
                          std::size_t n);

    /// Writes offsets i (ascending) with d2(i) <= r2 to `out`; returns count.
    std::size_t (*within_radius)(double px, double py, double pz, const double* xs, const double* ys,
                                 const double* zs, std::size_t n, double r2, std::uint32_t* out);
};

/// Best ISA the running CPU supports.
Isa detected_isa();
/// ISA currently used by `kernels()`. Defaults to `detected_isa()` unless the
/// POLERISK_SIMD environment variable is `scalar`.
Isa active_isa();
/// Forces a path; requesting an unsupported ISA falls back to scalar.
void set_active_isa(Isa isa);

const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

namespace detail {
const KernelTable& scalar_table();
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_table();
}  // namespace detail

}  // namespace polerisk::simd
