#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "polerisk/hough.hpp"
#include "polerisk/imaging.hpp"
#include "polerisk/simd/kernels.hpp"
#include "polerisk/spatial_index.hpp"
#include "support/synthetic.hpp"

using namespace polerisk;
using polerisk::simd::Isa;

namespace {

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

const simd::KernelTable* vector_table() { return simd::detail::avx2_table(); }

bool have_avx2() { return vector_table() != nullptr && simd::detected_isa() == Isa::avx2; }

struct IsaGuard {
    Isa saved = simd::active_isa();
    ~IsaGuard() { simd::set_active_isa(saved); }
};

}  // namespace

TEST_CASE("scalar table is always available") {
    const auto& t = simd::detail::scalar_table();
    CHECK(t.blur_row5 != nullptr);
    CHECK(t.nearest != nullptr);
    CHECK(simd::to_string(Isa::scalar) == "scalar");
}

TEST_CASE("forcing scalar takes effect") {
    IsaGuard guard;
    simd::set_active_isa(Isa::scalar);
    CHECK(simd::active_isa() == Isa::scalar);
    CHECK(&simd::kernels() == &simd::detail::scalar_table());
}

TEST_CASE("blur kernels agree bit for bit") {
    if (!have_avx2()) return;
    const auto& s = simd::detail::scalar_table();
    const auto& v = *vector_table();
    std::mt19937_64 rng(7);
    const double w[3] = {0.0544887, 0.2442013, 0.4026200};
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 17u, 31u, 64u, 101u}) {
        const auto src = random_row(rng, n);
        std::vector<double> a(n), b(n);
        s.blur_row5(src.data(), n, w, a.data());
        v.blur_row5(src.data(), n, w, b.data());
        CHECK_MESSAGE(bits_equal(a, b), "row width ", n);

        const auto r0 = random_row(rng, n), r1 = random_row(rng, n), r3 = random_row(rng, n),
                   r4 = random_row(rng, n);
        s.blur_col5(r0.data(), r1.data(), src.data(), r3.data(), r4.data(), n, w, a.data());
        v.blur_col5(r0.data(), r1.data(), src.data(), r3.data(), r4.data(), n, w, b.data());
        CHECK_MESSAGE(bits_equal(a, b), "column width ", n);
    }
}

TEST_CASE("sobel kernel agrees bit for bit") {
    if (!have_avx2()) return;
    const auto& s = simd::detail::scalar_table();
    const auto& v = *vector_table();
    std::mt19937_64 rng(11);
    for (std::size_t n : {3u, 4u, 5u, 6u, 9u, 13u, 34u, 99u}) {
        const auto up = random_row(rng, n), mid = random_row(rng, n), down = random_row(rng, n);
        std::vector<double> gx1(n), gy1(n), m1(n), gx2(n), gy2(n), m2(n);
        s.sobel_row(up.data(), mid.data(), down.data(), n, gx1.data(), gy1.data(), m1.data());
        v.sobel_row(up.data(), mid.data(), down.data(), n, gx2.data(), gy2.data(), m2.data());
        CHECK(bits_equal(gx1, gx2));
        CHECK(bits_equal(gy1, gy2));
        CHECK(bits_equal(m1, m2));
    }
}

TEST_CASE("hough bin kernel agrees exactly") {
    if (!have_avx2()) return;
    const HoughAccumulator acc(620, 620, 0.25, 1.0);
    const auto& s = simd::detail::scalar_table();
    const auto& v = *vector_table();
    const std::size_t n = acc.theta_bins();
    std::vector<std::int32_t> a(n), b(n);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 619);
    for (int k = 0; k < 200; ++k) {
        const double x = std::floor(u(rng)), y = std::floor(u(rng));
        s.hough_bins(x, y, acc.cos_table().data(), acc.sin_table().data(), n, 1.0,
                     static_cast<double>(acc.rho_offset()), a.data());
        v.hough_bins(x, y, acc.cos_table().data(), acc.sin_table().data(), n, 1.0,
                     static_cast<double>(acc.rho_offset()), b.data());
        REQUIRE(a == b);
    }
}

TEST_CASE("distance kernels agree, including ties and tails") {
    if (!have_avx2()) return;
    const auto& s = simd::detail::scalar_table();
    const auto& v = *vector_table();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> grid(0, 4);  // coarse grid forces ties
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 33u, 200u}) {
        std::vector<double> xs(n), ys(n), zs(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = grid(rng) * 0.5;
            ys[i] = grid(rng) * 0.5;
            zs[i] = grid(rng) * 0.5;
        }
        for (int q = 0; q < 20; ++q) {
            const double px = grid(rng) * 0.5, py = grid(rng) * 0.25, pz = grid(rng) * 0.5;
            const auto h1 = s.nearest(px, py, pz, xs.data(), ys.data(), zs.data(), n);
            const auto h2 = v.nearest(px, py, pz, xs.data(), ys.data(), zs.data(), n);
            CHECK(std::memcmp(&h1.d2, &h2.d2, sizeof(double)) == 0);
            if (n > 0) CHECK(h1.index == h2.index);

            std::vector<std::uint32_t> o1(n + 1), o2(n + 1);
            const std::size_t c1 = s.within_radius(px, py, pz, xs.data(), ys.data(), zs.data(), n, 0.75, o1.data());
            const std::size_t c2 = v.within_radius(px, py, pz, xs.data(), ys.data(), zs.data(), n, 0.75, o2.data());
            REQUIRE(c1 == c2);
            o1.resize(c1);
            o2.resize(c2);
            CHECK(o1 == o2);
        }
    }
}

TEST_CASE("end-to-end canny and hough match across paths") {
    if (!have_avx2()) return;
    IsaGuard guard;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    GrayRaster img(97, 61);
    for (auto& p : img.values()) p = u(rng);

    simd::set_active_isa(Isa::scalar);
    const EdgeMask e1 = canny_edges(img);
    const GradientField g1 = sobel_gradients(gaussian_blur5(img, 1.4));
    const auto acc1 = hough_accumulate(e1);

    simd::set_active_isa(Isa::avx2);
    const EdgeMask e2 = canny_edges(img);
    const GradientField g2 = sobel_gradients(gaussian_blur5(img, 1.4));
    const auto acc2 = hough_accumulate(e2);

    CHECK(e1 == e2);
    CHECK(bits_equal(g1.magnitude, g2.magnitude));
    CHECK(acc1.grid() == acc2.grid());
}

TEST_CASE("spatial index queries match across paths") {
    if (!have_avx2()) return;
    IsaGuard guard;
    std::mt19937_64 rng(99);
    const auto pts = synth::blob_cloud(rng, 800, 5.0);
    const SpatialIndex index(pts, 0.4);
    std::uniform_real_distribution<double> u(-1, 6);
    for (int q = 0; q < 100; ++q) {
        const Vec3 p{u(rng), u(rng), u(rng)};
        simd::set_active_isa(Isa::scalar);
        const auto r1 = index.radius_query(p, 0.4);
        const auto n1 = index.nearest(p);
        simd::set_active_isa(Isa::avx2);
        const auto r2 = index.radius_query(p, 0.4);
        const auto n2 = index.nearest(p);
        CHECK(r1 == r2);
        CHECK(n1.index == n2.index);
        CHECK(n1.d2 == n2.d2);
    }
}
