#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "polerisk/error.hpp"
#include "polerisk/segmentation.hpp"
#include "polerisk/spatial_index.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace polerisk;

namespace {

PointCloud cloud_of(std::vector<Vec3> pts) {
    PointCloud c;
    c.points = std::move(pts);
    return c;
}

std::vector<std::uint32_t> brute_ball(const std::vector<Vec3>& pts, Vec3 p, double r) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < pts.size(); ++i)
        if (squared_distance(pts[i], p) <= r * r) out.push_back(i);
    return out;
}

double angle_deg(Vec3 a, Vec3 b) {
    const double c = std::clamp(std::abs(a.dot(b)) / (a.norm() * b.norm()), 0.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST_CASE("spatial index radius queries match brute force") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = synth::blob_cloud(rng, 600, 4.0);
        const double cell = 0.2 + 0.05 * trial;
        const SpatialIndex index(pts, cell);
        CHECK(index.size() == pts.size());
        std::uniform_real_distribution<double> u(-0.5, 4.5);
        for (int q = 0; q < 30; ++q) {
            const Vec3 p = q % 3 == 0 ? pts[static_cast<std::size_t>(q) % pts.size()] : Vec3{u(rng), u(rng), u(rng)};
            const double r = cell * (q % 2 ? 1.0 : 0.6);
            CHECK(index.radius_query(p, r) == brute_ball(pts, p, r));
            CHECK(index.cells_examined(p, r) <= 27);
        }
    }
}

TEST_CASE("points on cell boundaries are found from both sides") {
    std::vector<Vec3> pts{{1.0, 1.0, 1.0}, {0.5, 1.0, 1.0}, {2.0, 0.0, 0.0}};
    const SpatialIndex index(pts, 0.5);
    CHECK(index.radius_query({0.99, 1.0, 1.0}, 0.5) == std::vector<std::uint32_t>{0, 1});
    CHECK(index.radius_query({1.01, 1.0, 1.0}, 0.5) == std::vector<std::uint32_t>{0});
    CHECK(index.radius_query({0.75, 1.0, 1.0}, 0.25) == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("empty index") {
    const SpatialIndex index(std::vector<Vec3>{}, 1.0);
    CHECK(index.size() == 0);
    CHECK(index.radius_query({0, 0, 0}, 1.0).empty());
    CHECK_FALSE(index.nearest({0, 0, 0}).found());
}

TEST_CASE("nearest neighbour matches brute force") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = synth::blob_cloud(rng, 400 + 100 * trial, 6.0);
        const SpatialIndex index(pts, 0.15 + 0.1 * trial);
        std::uniform_real_distribution<double> u(-10, 16);
        for (int q = 0; q < 50; ++q) {
            const Vec3 p{u(rng), u(rng), u(rng)};
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t arg = 0;
            for (std::uint32_t i = 0; i < pts.size(); ++i) {
                const double d = squared_distance(pts[i], p);
                if (d < best) {
                    best = d;
                    arg = i;
                }
            }
            const auto hit = index.nearest(p);
            CHECK(hit.d2 == best);
            CHECK(hit.index == arg);
            CHECK_FALSE(index.nearest(p, best).found());
        }
    }
}

TEST_CASE("dbscan basics") {
    const auto same = dbscan(cloud_of(std::vector<Vec3>(6, Vec3{1, 2, 3})), 0.1, 6);
    CHECK(same.n_clusters == 1);
    for (int l : same.labels) CHECK(l == 0);

    const auto lone = dbscan(cloud_of({{0, 0, 0}}), 0.5, 4);
    CHECK(lone.labels[0] == kNoise);
    CHECK(lone.n_clusters == 0);

    std::mt19937_64 rng(1);
    auto a = synth::canopy(rng, 200, {0, 0, 0}, {1, 1, 1});
    const auto b = synth::canopy(rng, 200, {20, 0, 0}, {1, 1, 1});
    a.insert(a.end(), b.begin(), b.end());
    const auto two = dbscan(cloud_of(a), 0.5, 5);
    CHECK(two.n_clusters == 2);
    CHECK(two.labels[0] == 0);
    CHECK(two.labels[399] == 1);
    CHECK(oracle::same_partition(two.labels, oracle::dbscan(a, 0.5, 5)));
}

TEST_CASE("dbscan matches the brute-force reference on random clouds") {
    std::mt19937_64 rng(2718);
    std::uniform_int_distribution<std::size_t> n_dist(1, 700);
    std::uniform_real_distribution<double> eps_dist(0.05, 0.6);
    std::uniform_int_distribution<std::size_t> mp_dist(1, 12);
    for (int trial = 0; trial < 40; ++trial) {
        const auto pts = synth::blob_cloud(rng, n_dist(rng), 5.0);
        const double eps = eps_dist(rng);
        const std::size_t min_pts = mp_dist(rng);
        const auto got = dbscan(cloud_of(pts), eps, min_pts);
        const auto want = oracle::dbscan(pts, eps, min_pts);
        CHECK(got.labels == want);  // same scan order gives identical ids
        CHECK(got.labels.size() == pts.size());
        const int max_label = *std::max_element(got.labels.begin(), got.labels.end());
        CHECK(got.n_clusters == static_cast<std::size_t>(max_label + 1));
    }
}

TEST_CASE("dbscan partition is order invariant when every point is core") {
    std::mt19937_64 rng(9);
    auto pts = synth::canopy(rng, 300, {0, 0, 0}, {1, 1, 1});
    const auto other = synth::canopy(rng, 300, {5, 0, 0}, {1, 1, 1});
    pts.insert(pts.end(), other.begin(), other.end());
    const auto base = dbscan(cloud_of(pts), 0.8, 3);
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec3> shuffled;
    for (std::size_t i : perm) shuffled.push_back(pts[i]);
    const auto moved = dbscan(cloud_of(shuffled), 0.8, 3);
    std::vector<int> back(pts.size());
    for (std::size_t k = 0; k < perm.size(); ++k) back[perm[k]] = moved.labels[k];
    CHECK(oracle::same_partition(base.labels, back));
    CHECK_THROWS_AS(dbscan(cloud_of(pts), 0.0, 3), Error);
    CHECK_THROWS_AS(dbscan(cloud_of(pts), 0.5, 0), Error);
}

TEST_CASE("cluster features") {
    std::vector<Vec3> seg;
    for (int i = 0; i < 50; ++i) seg.push_back({2, 3, 0.1 * i});
    const auto lab = dbscan(cloud_of(seg), 0.2, 2);
    const auto f = cluster_features(cloud_of(seg), lab);
    REQUIRE(f.size() == 1);
    CHECK(f[0].linearity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f[0].verticality == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f[0].principal_axis.z > 0);
    CHECK(std::abs(f[0].principal_axis.norm() - 1.0) <= 1e-9);
    CHECK(f[0].vertical_extent == doctest::Approx(4.9));

    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0, 1);
    std::vector<Vec3> blob;
    for (int i = 0; i < 5000; ++i) blob.push_back({g(rng), g(rng), g(rng)});
    ClusterLabeling one{std::vector<int>(blob.size(), 0), 1.0, 1, 1};
    const auto fb = cluster_features(cloud_of(blob), one);
    CHECK(fb[0].linearity < 0.2);
    CHECK(fb[0].eigenvalues[0] >= fb[0].eigenvalues[1]);
    CHECK(fb[0].eigenvalues[1] >= fb[0].eigenvalues[2]);
    CHECK(fb[0].eigenvalues[2] >= 0);

    const auto disc = synth::ground(rng, 3000, {0, 0, 0}, 3.0, 0.0);
    ClusterLabeling dl{std::vector<int>(disc.size(), 0), 1.0, 1, 1};
    CHECK(cluster_features(cloud_of(disc), dl)[0].verticality < 0.05);

    ClusterLabeling tiny{{0, 0}, 1.0, 1, 1};
    const auto ft = cluster_features(cloud_of({{0, 0, 0}, {0, 0, 1}}), tiny);
    CHECK(ft[0].eigenvalues[1] == 0.0);
    CHECK(ft[0].eigenvalues[2] == 0.0);
    CHECK(classify_clusters(ft).at(0) == ClusterRole::other);
}

TEST_CASE("cylinder is a pole and canopy is vegetation") {
    std::mt19937_64 rng(5);
    auto pts = synth::cylinder(rng, 3000, 0.15, 10, 2, 30, {0, 0, 0}, 0.02);
    const auto veg = synth::canopy(rng, 1000, {4, 0, 7}, {1.5, 1.5, 1.2});
    pts.insert(pts.end(), veg.begin(), veg.end());
    const auto g = synth::ground(rng, 4000, {0, 0, -0.8}, 5, 0.01);
    pts.insert(pts.end(), g.begin(), g.end());
    const PointCloud cloud = cloud_of(pts);
    const auto lab = dbscan(cloud, 0.35, 8);
    const auto feats = cluster_features(cloud, lab);
    const auto roles = classify_clusters(feats);
    const int pole_id = lab.labels[0];
    const int veg_id = lab.labels[3000];
    const int ground_id = lab.labels[4000];
    REQUIRE(pole_id >= 0);
    REQUIRE(veg_id >= 0);
    REQUIRE(ground_id >= 0);
    CHECK(roles.at(pole_id) == ClusterRole::pole);
    CHECK(roles.at(veg_id) == ClusterRole::vegetation);
    CHECK(roles.at(ground_id) == ClusterRole::other);

    const auto a = analyze_point_cloud(cloud);
    REQUIRE(a.corridor);
    CHECK(std::abs(a.corridor->tilt_deg - 2.0) < 0.3);
    REQUIRE(a.corridor->clearance);
    std::vector<Vec3> pole_pts(pts.begin(), pts.begin() + 3000), veg_pts(pts.begin() + 3000, pts.begin() + 4000);
    CHECK(std::abs(a.corridor->clearance->clearance_m - oracle::nearest_pair(pole_pts, veg_pts)) <= 1e-12);
    REQUIRE(a.ground_tilt_deg);
    CHECK(*a.ground_tilt_deg < 2.0);
    CHECK_FALSE(a.up_vector_suspect);
    const auto json = point_cloud_analysis_json(a);
    CHECK(json.find("\"tilt_deg\"") != std::string::npos);
    CHECK(json.find("\"clearance_m\"") != std::string::npos);
}

TEST_CASE("only the tallest pole-like cluster is the pole") {
    std::mt19937_64 rng(6);
    auto pts = synth::cylinder(rng, 2000, 0.15, 10, 0, 0, {0, 0, 0}, 0.01);
    const auto shorter = synth::cylinder(rng, 1200, 0.15, 6, 0, 0, {5, 5, 0}, 0.01);
    pts.insert(pts.end(), shorter.begin(), shorter.end());
    const auto lab = dbscan(cloud_of(pts), 0.35, 8);
    const auto roles = classify_clusters(cluster_features(cloud_of(pts), lab));
    CHECK(roles.at(lab.labels[0]) == ClusterRole::pole);
    CHECK(roles.at(lab.labels[2500]) == ClusterRole::other);
}

TEST_CASE("axis fitting") {
    std::vector<Vec3> vertical, diag;
    for (int i = 0; i < 20; ++i) {
        vertical.push_back({1, 1, 0.5 * i});
        diag.push_back({0.1 * i, 0, 0.1 * i});
    }
    const Line3D v = fit_pole_axis(vertical);
    CHECK(std::abs(std::abs(v.direction.z) - 1.0) <= 1e-12);
    const Line3D d = fit_pole_axis(diag);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(d.direction.x - s) <= 1e-9);
    CHECK(std::abs(d.direction.z - s) <= 1e-9);
    CHECK(std::abs(d.direction.norm() - 1.0) <= 1e-9);

    std::mt19937_64 rng(7);
    const auto cyl = synth::cylinder(rng, 5000, 0.15, 10, 5, 0, {0, 0, 0}, 0.02);
    const Line3D c = fit_pole_axis(cyl);
    const Vec3 truth{std::sin(5 * synth::kDeg), 0, std::cos(5 * synth::kDeg)};
    CHECK(angle_deg(c.direction, truth) < 0.3);

    // translation invariance
    std::vector<Vec3> moved;
    for (const auto& p : cyl) moved.push_back(p + Vec3{100, -50, 7});
    const Line3D m = fit_pole_axis(moved);
    CHECK(std::abs(m.direction.x - c.direction.x) <= 1e-9);
    CHECK(std::abs(m.direction.y - c.direction.y) <= 1e-9);
    CHECK(std::abs(m.direction.z - c.direction.z) <= 1e-9);

    // rotation equivariance about z by 90 degrees
    std::vector<Vec3> rotated;
    for (const auto& p : cyl) rotated.push_back({-p.y, p.x, p.z});
    const Line3D r = fit_pole_axis(rotated);
    CHECK(std::abs(r.direction.x + c.direction.y) <= 1e-9);
    CHECK(std::abs(r.direction.y - c.direction.x) <= 1e-9);

    const auto blob = synth::canopy(rng, 500, {0, 0, 0}, {1, 1, 1});
    CHECK_THROWS_WITH_AS(fit_pole_axis(blob), "axis ill-defined", Error);
}

TEST_CASE("tilt from vertical") {
    CHECK(tilt_from_vertical({{0, 0, 0}, {0, 0, 1}}) == 0.0);
    CHECK(tilt_from_vertical({{0, 0, 0}, {1, 0, 0}}) == 90.0);
    const Vec3 five{std::sin(5 * synth::kDeg), 0, std::cos(5 * synth::kDeg)};
    CHECK(std::abs(tilt_from_vertical({{0, 0, 0}, five}) - 5.0) <= 1e-6);
    CHECK(tilt_from_vertical({{0, 0, 0}, five}) == tilt_from_vertical({{0, 0, 0}, -1.0 * five}));
}

TEST_CASE("clearance distance") {
    const std::vector<Vec3> a{{0, 0, 0}, {1, 1, 1}}, shared{{1, 1, 1}, {5, 5, 5}};
    CHECK(clearance_distance(a, shared, SpatialIndex(shared, 0.5)).clearance_m == 0.0);
    const std::vector<Vec3> p{{0, 0, 0}}, q{{1, 0, 0}};
    const auto r = clearance_distance(p, q, SpatialIndex(q, 0.35));
    CHECK(r.clearance_m == 1.0);
    CHECK(r.vegetation_point == q[0]);
    CHECK_THROWS_AS(clearance_distance({}, q, SpatialIndex(q, 1.0)), Error);

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 15; ++trial) {
        const auto pole = synth::cylinder(rng, 500 + 100 * trial, 0.15, 8, u(rng), 360 * u(rng), {0, 0, 0}, 0.02);
        const auto veg = synth::canopy(rng, 300 + 80 * trial, {u(rng), u(rng), 5 + u(rng)}, {1.5, 1, 1});
        const auto res = clearance_distance(pole, veg, SpatialIndex(veg, 0.35));
        CHECK(res.clearance_m == oracle::nearest_pair(pole, veg));
        CHECK(std::sqrt(squared_distance(res.vegetation_point, res.pole_point)) == res.clearance_m);
    }
}

TEST_CASE("up vector disagreement is flagged") {
    std::mt19937_64 rng(8);
    auto pts = synth::cylinder(rng, 3000, 0.15, 10, 0, 0, {0, 0, 0}, 0.01);
    const auto g = synth::ground(rng, 4000, {0, 0, -0.8}, 5, 0.01);
    pts.insert(pts.end(), g.begin(), g.end());
    PointCloudConfig cfg;
    cfg.up = Vec3{std::sin(20 * synth::kDeg), 0, std::cos(20 * synth::kDeg)};
    cfg.classifier.pole_min_verticality = 0.5;
    const auto a = analyze_point_cloud(cloud_of(pts), cfg);
    REQUIRE(a.ground_tilt_deg);
    CHECK(*a.ground_tilt_deg == doctest::Approx(20.0).epsilon(0.02));
    CHECK(a.up_vector_suspect);
    REQUIRE(a.corridor);
    CHECK_FALSE(a.corridor->clearance.has_value());
}

TEST_CASE("scale is applied before clustering") {
    std::mt19937_64 rng(9);
    auto pts = synth::cylinder(rng, 3000, 0.015, 1.0, 3, 0, {0, 0, 0}, 0.001);
    for (auto& p : pts) p = 1.0 * p;
    PointCloudConfig cfg;
    cfg.scale_m_per_unit = 10.0;
    const auto a = analyze_point_cloud(cloud_of(pts), cfg);
    REQUIRE(a.corridor);
    CHECK(std::abs(a.corridor->tilt_deg - 3.0) < 0.3);
    PointCloudConfig unscaled;
    CHECK_FALSE(analyze_point_cloud(cloud_of(pts), unscaled).corridor.has_value());
}
