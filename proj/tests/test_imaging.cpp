#include <doctest.h>

#include <cmath>
#include <random>

#include "polerisk/error.hpp"
#include "polerisk/imaging.hpp"

using namespace polerisk;

namespace {

GrayRaster step_image(std::size_t w, std::size_t h, std::size_t edge_col, bool half_step) {
    GrayRaster img(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            img.at(x, y) = x < edge_col ? 0.0 : (x == edge_col && half_step ? 0.5 : 1.0);
        }
    }
    return img;
}

GrayRaster random_image(std::uint64_t seed, std::size_t w, std::size_t h) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    GrayRaster img(w, h);
    for (auto& v : img.values()) v = u(rng);
    // a few bright structures so hysteresis has something to link
    for (std::size_t y = h / 4; y < 3 * h / 4; ++y) img.at(w / 3, y) = 1.0;
    return img;
}

GrayRaster rotate180(const GrayRaster& img) {
    GrayRaster out(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            out.at(img.width() - 1 - x, img.height() - 1 - y) = img.at(x, y);
        }
    }
    return out;
}

GrayRaster transpose(const GrayRaster& img) {
    GrayRaster out(img.height(), img.width());
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) out.at(y, x) = img.at(x, y);
    }
    return out;
}

EdgeMask rotate180(const EdgeMask& m) {
    EdgeMask out(m.width(), m.height());
    for (std::size_t y = 0; y < m.height(); ++y) {
        for (std::size_t x = 0; x < m.width(); ++x) {
            if (m.at(x, y)) out.set(m.width() - 1 - x, m.height() - 1 - y);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("grayscale luminance") {
    RgbImage white(4, 3), black(4, 3), red(4, 3);
    std::fill(white.data.begin(), white.data.end(), 255);
    for (std::size_t i = 0; i < red.data.size(); i += 3) red.data[i] = 255;
    const GrayRaster gw = to_grayscale(white), gb = to_grayscale(black), gr = to_grayscale(red);
    for (double v : gw.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : gb.values()) CHECK(v == 0.0);
    for (double v : gr.values()) CHECK(v == doctest::Approx(0.299).epsilon(1e-12));
    CHECK_THROWS_AS(to_grayscale(RgbImage(0, 5)), Error);
}

TEST_CASE("sobel on constant and step images") {
    const GradientField flat = sobel_gradients(GrayRaster(8, 6, 0.3));
    for (std::size_t i = 0; i < flat.gx.size(); ++i) {
        CHECK(flat.gx[i] == 0.0);
        CHECK(flat.gy[i] == 0.0);
    }

    const GrayRaster step = step_image(10, 7, 5, false);
    const GradientField g = sobel_gradients(step);
    for (std::size_t y = 0; y < 7; ++y) {
        double best = 0;
        for (std::size_t x = 0; x < 10; ++x) best = std::max(best, std::abs(g.gx[y * 10 + x]));
        // columns 4 and 5 straddle the step; hand-convolved value is 4
        CHECK(std::abs(g.gx[y * 10 + 4]) == best);
        CHECK(std::abs(g.gx[y * 10 + 5]) == best);
        CHECK(best == 4.0);
        CHECK(g.gy[y * 10 + 4] == 0.0);
        CHECK(g.gy[y * 10 + 5] == 0.0);
    }
    CHECK_THROWS_AS(sobel_gradients(GrayRaster(2, 5)), Error);
}

TEST_CASE("sobel magnitude matches components") {
    const GradientField g = sobel_gradients(random_image(4, 31, 17));
    for (std::size_t i = 0; i < g.magnitude.size(); ++i) {
        CHECK(std::abs(g.magnitude[i] - std::hypot(g.gx[i], g.gy[i])) <= 1e-9);
    }
}

TEST_CASE("sobel transpose swaps components") {
    const GrayRaster img = random_image(9, 23, 14);
    const GradientField a = sobel_gradients(img);
    const GradientField b = sobel_gradients(transpose(img));
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            const std::size_t i = y * img.width() + x;
            const std::size_t j = x * img.height() + y;
            CHECK(a.gx[i] == b.gy[j]);
            CHECK(a.gy[i] == b.gx[j]);
        }
    }
}

TEST_CASE("canny on constant image is empty") {
    CHECK(canny_edges(GrayRaster(20, 20, 0.7)).count() == 0);
    CHECK_THROWS_AS(canny_edges(GrayRaster(20, 20), 0.3, 0.3), Error);
    CHECK_THROWS_AS(canny_edges(GrayRaster(20, 20), -0.1, 0.3), Error);
}

TEST_CASE("ideal step gives a one pixel line") {
    const std::size_t w = 21, h = 15, c = 10;
    const GrayRaster img = step_image(w, h, c, true);
    const EdgeMask m = canny_edges(img);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) CHECK_MESSAGE(m.at(x, y) == (x == c), "pixel ", x, ",", y);
    }

    // unsmoothed: compare against NMS on the hand-computed gradient
    // (columns c-1, c, c+1 carry |gx| = 2, 4, 2; only the centre is a maximum)
    CannyConfig raw;
    raw.blur = false;
    const EdgeMask r = canny_edges(img, raw);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) CHECK(r.at(x, y) == (x == c));
    }
}

TEST_CASE("canny commutes with 180 degree rotation") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const GrayRaster img = random_image(seed, 40 + seed, 29);
        const EdgeMask a = canny_edges(img);
        const EdgeMask b = rotate180(canny_edges(rotate180(img)));
        CHECK(a == b);
    }
}

TEST_CASE("canny edges are above low and locally maximal") {
    const GrayRaster img = random_image(77, 50, 40);
    CannyConfig cfg;
    cfg.blur = false;
    cfg.low = 0.15;
    cfg.high = 0.3;
    const EdgeMask m = canny_edges(img, cfg);
    const GradientField g = sobel_gradients(img);
    const double low = cfg.low * kSobelMagnitudeScale;
    const std::size_t w = g.width;
    for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (!m.at(x, y)) continue;
            const double mag = g.magnitude[y * w + x];
            CHECK(mag >= low);
            int dx = 0, dy = 0;
            switch (quantize_direction(g.gx[y * w + x], g.gy[y * w + x])) {
                case GradientDirection::horizontal: dx = 1; break;
                case GradientDirection::vertical: dy = 1; break;
                case GradientDirection::diagonal_down: dx = 1; dy = 1; break;
                case GradientDirection::diagonal_up: dx = 1; dy = -1; break;
            }
            for (int s : {-1, 1}) {
                const long nx = static_cast<long>(x) + s * dx, ny = static_cast<long>(y) + s * dy;
                if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(g.height)) continue;
                CHECK(mag >= g.magnitude[static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx)]);
            }
        }
    }
}

TEST_CASE("crop examples") {
    const GrayRaster img = random_image(3, 40, 30);
    const GrayCrop full = crop_roi(img, {0, 0, 40, 30}, 0);
    CHECK(full.raster.values() == img.values());

    const GrayCrop inner = crop_roi(img, {10, 10, 20, 20}, 5);
    CHECK(inner.raster.width() == 20);
    CHECK(inner.raster.height() == 20);
    CHECK(inner.window.x0 == 5);

    const GrayCrop edge = crop_roi(img, {30, 20, 50, 45}, 0);
    CHECK(edge.raster.width() == 10);
    CHECK(edge.raster.height() == 10);

    CHECK_THROWS_AS(crop_roi(img, {100, 100, 120, 120}, 2), Error);
    CHECK_THROWS_AS(crop_roi(img, {-30, 5, -10, 10}, 2), Error);
}

TEST_CASE("crop coordinates map back to the source") {
    const GrayRaster img = random_image(8, 37, 26);
    const GrayCrop c = crop_roi(img, {7.5, 3.2, 19.9, 20.1}, 2.5);
    for (std::size_t y = 0; y < c.raster.height(); ++y) {
        for (std::size_t x = 0; x < c.raster.width(); ++x) {
            const double fx = c.window.to_full_x(static_cast<double>(x));
            const double fy = c.window.to_full_y(static_cast<double>(y));
            CHECK(c.raster.at(x, y) == img.at(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy)));
        }
    }
    EdgeMask m(37, 26);
    m.set(10, 10);
    const MaskCrop mc = crop_roi(m, {5, 5, 15, 15}, 0);
    CHECK(mc.mask.at(5, 5));
    CHECK(mc.mask.count() == 1);
}
