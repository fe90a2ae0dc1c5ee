#include "polerisk/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <json.hpp>

#include "polerisk/error.hpp"

namespace polerisk {

namespace {

constexpr int kUnvisited = -2;

struct Pca {
    Vec3 centroid;
    std::array<double, 3> eigenvalues{};  // descending
    std::array<Vec3, 3> eigenvectors{};   // matching order
};

Pca principal_components(std::span<const Vec3> pts) {
    Pca pca;
    if (pts.empty()) return pca;
    const auto n = static_cast<double>(pts.size());
    Vec3 sum{};
    for (const Vec3& p : pts) sum = sum + p;
    pca.centroid = (1.0 / n) * sum;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
        const Eigen::Vector3d d(p.x - pca.centroid.x, p.y - pca.centroid.y, p.z - pca.centroid.z);
        cov.noalias() += d * d.transpose();
    }
    cov /= n;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    for (int k = 0; k < 3; ++k) {
        const int src = 2 - k;  // solver sorts ascending
        pca.eigenvalues[static_cast<std::size_t>(k)] = std::max(0.0, solver.eigenvalues()(src));
        const auto v = solver.eigenvectors().col(src);
        pca.eigenvectors[static_cast<std::size_t>(k)] = Vec3{v(0), v(1), v(2)}.normalized();
    }
    return pca;
}

Vec3 orient_up(Vec3 v, Vec3 up) {
    const double d = v.dot(up);
    if (d < 0) return -1.0 * v;
    if (d == 0) {
        for (double c : {v.x, v.y, v.z}) {
            if (c != 0) return c < 0 ? -1.0 * v : v;
        }
    }
    return v;
}

Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }

double angle_between_lines_deg(Vec3 a, Vec3 b) {
    const Vec3 ua = a.normalized();
    const Vec3 ub = b.normalized();
    return std::atan2(cross(ua, ub).norm(), std::abs(ua.dot(ub))) * 180.0 / std::numbers::pi;
}

}  // namespace

ClusterLabeling dbscan(const PointCloud& cloud, double eps, std::size_t min_pts) {
    if (!(eps > 0)) throw Error("dbscan: eps must be positive");
    if (min_pts < 1) throw Error("dbscan: min_pts must be at least 1");
    const std::size_t n = cloud.size();
    ClusterLabeling out{std::vector<int>(n, kUnvisited), eps, min_pts, 0};
    if (n == 0) return out;

    const SpatialIndex index(cloud.points, eps);
    std::vector<std::uint32_t> neighbours;
    std::vector<std::uint32_t> queue;
    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.labels[i] != kUnvisited) continue;
        index.radius_query(cloud.points[i], eps, neighbours);
        if (neighbours.size() < min_pts) {
            out.labels[i] = kNoise;
            continue;
        }
        out.labels[i] = cluster;
        queue.assign(neighbours.begin(), neighbours.end());
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::uint32_t j = queue[q];
            if (out.labels[j] == kNoise) {
                out.labels[j] = cluster;  // border point, already known to be non-core
                continue;
            }
            if (out.labels[j] != kUnvisited) continue;
            out.labels[j] = cluster;
            index.radius_query(cloud.points[j], eps, neighbours);
            if (neighbours.size() >= min_pts) queue.insert(queue.end(), neighbours.begin(), neighbours.end());
        }
        ++cluster;
    }
    out.n_clusters = static_cast<std::size_t>(cluster);
    return out;
}

std::vector<ClusterFeatures> cluster_features(const PointCloud& cloud, const ClusterLabeling& labeling, Vec3 up) {
    if (labeling.labels.size() != cloud.size()) throw Error("cluster_features: labeling does not match cloud");
    up = up.normalized();
    std::vector<std::vector<Vec3>> members(labeling.n_clusters);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const int l = labeling.labels[i];
        if (l >= 0) members.at(static_cast<std::size_t>(l)).push_back(cloud.points[i]);
    }
    std::vector<ClusterFeatures> out;
    out.reserve(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto& pts = members[c];
        ClusterFeatures f;
        f.cluster_id = static_cast<int>(c);
        f.n_points = pts.size();
        const Pca pca = principal_components(pts);
        f.centroid = pca.centroid;
        f.eigenvalues = pca.eigenvalues;
        if (pts.size() < 3) f.eigenvalues[1] = f.eigenvalues[2] = 0.0;
        f.principal_axis = orient_up(pca.eigenvectors[0], up);
        f.normal = orient_up(pca.eigenvectors[2], up);
        f.linearity = f.eigenvalues[0] > 0 ? (f.eigenvalues[0] - f.eigenvalues[1]) / f.eigenvalues[0] : 0.0;
        f.linearity = std::clamp(f.linearity, 0.0, 1.0);
        f.verticality = std::clamp(std::abs(f.principal_axis.dot(up)), 0.0, 1.0);
        if (!pts.empty()) {
            Vec3 lo = pts.front();
            Vec3 hi = pts.front();
            double lo_up = pts.front().dot(up);
            double hi_up = lo_up;
            for (const Vec3& p : pts) {
                lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
                hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
                lo_up = std::min(lo_up, p.dot(up));
                hi_up = std::max(hi_up, p.dot(up));
            }
            f.extent = hi - lo;
            f.vertical_extent = hi_up - lo_up;
        }
        out.push_back(f);
    }
    return out;
}

std::string_view to_string(ClusterRole role) {
    switch (role) {
        case ClusterRole::pole: return "pole";
        case ClusterRole::vegetation: return "vegetation";
        case ClusterRole::other: break;
    }
    return "other";
}

std::map<int, ClusterRole> classify_clusters(std::span<const ClusterFeatures> features, const ClassifierConfig& rules) {
    std::map<int, ClusterRole> roles;
    const ClusterFeatures* pole = nullptr;
    for (const auto& f : features) {
        ClusterRole role = ClusterRole::other;
        if (f.n_points >= 3) {
            const bool pole_like = f.linearity >= rules.pole_min_linearity &&
                                   f.verticality >= rules.pole_min_verticality &&
                                   f.vertical_extent >= rules.min_pole_height;
            if (pole_like) {
                if (!pole || f.vertical_extent > pole->vertical_extent) pole = &f;
            } else if (f.linearity < rules.vegetation_max_linearity && f.n_points >= rules.min_vegetation_points &&
                       f.eigenvalues[2] >= rules.vegetation_min_scatter * f.eigenvalues[0]) {
                role = ClusterRole::vegetation;
            }
        }
        roles[f.cluster_id] = role;
    }
    if (pole) roles[pole->cluster_id] = ClusterRole::pole;
    return roles;
}

Line3D fit_pole_axis(std::span<const Vec3> points, Vec3 up) {
    if (points.size() < 3) throw Error("fit_pole_axis: need at least 3 points");
    const Pca pca = principal_components(points);
    const double l1 = pca.eigenvalues[0];
    const double l2 = pca.eigenvalues[1];
    if (!(l1 > 0) || l1 < 1.5 * l2) throw Error("axis ill-defined");
    return {pca.centroid, orient_up(pca.eigenvectors[0], up.normalized())};
}

double tilt_from_vertical(const Line3D& axis, Vec3 up) {
    return std::clamp(angle_between_lines_deg(axis.direction, up), 0.0, 90.0);
}

ClearanceResult clearance_distance(std::span<const Vec3> pole_points, std::span<const Vec3> vegetation_points,
                                   const SpatialIndex& vegetation_index) {
    if (pole_points.empty() || vegetation_points.empty()) throw Error("clearance_distance: empty point set");
    if (vegetation_index.size() != vegetation_points.size()) throw Error("clearance_distance: index/point mismatch");
    double best_d2 = std::numeric_limits<double>::infinity();
    ClearanceResult result;
    for (const Vec3& p : pole_points) {
        const auto hit = vegetation_index.nearest(p, best_d2);
        if (hit.found() && hit.d2 < best_d2) {
            best_d2 = hit.d2;
            result.pole_point = p;
            result.vegetation_point = vegetation_points[hit.index];
        }
    }
    result.clearance_m = std::sqrt(best_d2);
    return result;
}

PointCloudAnalysis analyze_point_cloud(const PointCloud& input, const PointCloudConfig& config) {
    if (!(config.scale_m_per_unit > 0)) throw Error("scale_m_per_unit must be positive");
    const Vec3 up = config.up.normalized();
    if (up.norm() == 0) throw Error("up vector must be non-zero");

    PointCloud cloud = input;
    if (config.scale_m_per_unit != 1.0) {
        for (Vec3& p : cloud.points) p = config.scale_m_per_unit * p;
    }

    PointCloudAnalysis a;
    a.labeling = dbscan(cloud, config.eps, config.min_pts);
    a.features = cluster_features(cloud, a.labeling, up);
    a.roles = classify_clusters(a.features, config.classifier);

    std::vector<Vec3> pole_pts;
    std::vector<Vec3> veg_pts;
    for (const auto& [id, role] : a.roles) {
        if (role == ClusterRole::pole) a.pole_cluster = id;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const int l = a.labeling.labels[i];
        if (l < 0) continue;
        const ClusterRole role = a.roles.at(l);
        if (role == ClusterRole::pole) pole_pts.push_back(cloud.points[i]);
        if (role == ClusterRole::vegetation) veg_pts.push_back(cloud.points[i]);
    }

    const ClusterFeatures* ground = nullptr;
    for (const auto& f : a.features) {
        if (a.roles.at(f.cluster_id) == ClusterRole::pole || f.n_points < 50) continue;
        const auto& ev = f.eigenvalues;
        const bool planar = ev[1] >= 0.1 * ev[0] && ev[2] <= 0.05 * ev[1];
        if (planar && (!ground || f.n_points > ground->n_points)) ground = &f;
    }
    if (ground) {
        a.ground_tilt_deg = angle_between_lines_deg(ground->normal, up);
        a.up_vector_suspect = *a.ground_tilt_deg > config.ground_disagreement_deg;
    }

    if (a.pole_cluster) {
        a.pole_axis = fit_pole_axis(pole_pts, up);
        CorridorResult corridor;
        corridor.tilt_deg = tilt_from_vertical(*a.pole_axis, up);
        if (!veg_pts.empty()) {
            const SpatialIndex index(veg_pts, config.eps);
            corridor.clearance = clearance_distance(pole_pts, veg_pts, index);
        }
        a.corridor = corridor;
    }
    return a;
}

std::string point_cloud_analysis_json(const PointCloudAnalysis& a) {
    using nlohmann::json;
    auto vec = [](Vec3 v) { return json::array({v.x, v.y, v.z}); };
    json clusters = json::array();
    for (const auto& f : a.features) {
        clusters.push_back({
            {"cluster_id", f.cluster_id},
            {"role", std::string(to_string(a.roles.at(f.cluster_id)))},
            {"n_points", f.n_points},
            {"centroid", vec(f.centroid)},
            {"linearity", f.linearity},
            {"verticality", f.verticality},
            {"vertical_extent", f.vertical_extent},
        });
    }
    std::size_t noise = 0;
    for (int l : a.labeling.labels) noise += l == kNoise ? 1 : 0;

    json j = {
        {"eps", a.labeling.eps},
        {"min_pts", a.labeling.min_pts},
        {"n_points", a.labeling.labels.size()},
        {"n_noise", noise},
        {"clusters", clusters},
        {"pole_cluster", a.pole_cluster ? json(*a.pole_cluster) : json(nullptr)},
        {"up_vector_suspect", a.up_vector_suspect},
        {"ground_tilt_deg", a.ground_tilt_deg ? json(*a.ground_tilt_deg) : json(nullptr)},
        {"tilt_deg", nullptr},
        {"inclination_deg", nullptr},
        {"clearance_m", nullptr},
        {"nearest_pair", nullptr},
    };
    if (a.pole_axis) j["pole_axis"] = {{"point", vec(a.pole_axis->point_on_line)}, {"direction", vec(a.pole_axis->direction)}};
    if (a.corridor) {
        j["tilt_deg"] = a.corridor->tilt_deg;
        j["inclination_deg"] = 90.0 - a.corridor->tilt_deg;
        if (a.corridor->clearance) {
            j["clearance_m"] = a.corridor->clearance->clearance_m;
            j["nearest_pair"] = {vec(a.corridor->clearance->pole_point), vec(a.corridor->clearance->vegetation_point)};
        }
    }
    return j.dump(2);
}

}  // namespace polerisk
