#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polerisk/geometry.hpp"
#include "polerisk/ply.hpp"
#include "polerisk/spatial_index.hpp"

namespace polerisk {

inline constexpr int kNoise = -1;

struct ClusterLabeling {
    std::vector<int> labels;  // kNoise or a dense cluster id
    double eps = 0;
    std::size_t min_pts = 0;
    std::size_t n_clusters = 0;
};

/// DBSCAN with closed eps-balls; a point counts towards its own neighbourhood.
/// Points are scanned in ascending index order and each cluster is expanded
/// completely before the next seed, so a border point reachable from several
/// clusters joins the one discovered first.
ClusterLabeling dbscan(const PointCloud& cloud, double eps, std::size_t min_pts);

struct ClusterFeatures {
    int cluster_id = 0;
    std::size_t n_points = 0;
    Vec3 centroid;
    std::array<double, 3> eigenvalues{};  // descending
    Vec3 principal_axis;                  // unit, non-negative along `up`
    Vec3 normal;                          // eigenvector of the smallest eigenvalue
    double linearity = 0;                 // (l1 - l2) / l1
    double verticality = 0;               // |axis . up|
    Vec3 extent;                          // axis-aligned size
    double vertical_extent = 0;           // spread along `up`
};

std::vector<ClusterFeatures> cluster_features(const PointCloud& cloud, const ClusterLabeling& labeling,
                                              Vec3 up = {0, 0, 1});

enum class ClusterRole { pole, vegetation, other };

std::string_view to_string(ClusterRole role);

struct ClassifierConfig {
    double pole_min_linearity = 0.85;
    double pole_min_verticality = 0.9;
    double min_pole_height = 4.0;
    double vegetation_max_linearity = 0.5;
    /// l3 / l1 floor for vegetation; flat clusters such as ground stay `other`.
    double vegetation_min_scatter = 0.01;
    std::size_t min_vegetation_points = 50;
};

/// At most one pole: the tallest qualifying cluster.
std::map<int, ClusterRole> classify_clusters(std::span<const ClusterFeatures> features,
                                             const ClassifierConfig& rules = {});

struct Line3D {
    Vec3 point_on_line;
    Vec3 direction;  // unit
};

/// Total-least-squares line through the points. Throws Error("axis ill-defined")
/// when the two largest covariance eigenvalues are within a factor 1.5.
Line3D fit_pole_axis(std::span<const Vec3> points, Vec3 up = {0, 0, 1});

/// Deflection of the axis from `up` in degrees, in [0, 90].
double tilt_from_vertical(const Line3D& axis, Vec3 up = {0, 0, 1});

struct ClearanceResult {
    double clearance_m = 0;
    Vec3 pole_point;
    Vec3 vegetation_point;
};

/// Exact minimum distance between the two sets. `vegetation_index` must be
/// built over `vegetation_points`.
ClearanceResult clearance_distance(std::span<const Vec3> pole_points, std::span<const Vec3> vegetation_points,
                                   const SpatialIndex& vegetation_index);

struct CorridorResult {
    double tilt_deg = 0;
    std::optional<ClearanceResult> clearance;  // absent when no vegetation cluster exists
};

struct PointCloudConfig {
    double eps = 0.35;
    std::size_t min_pts = 8;
    double scale_m_per_unit = 1.0;
    Vec3 up{0, 0, 1};
    ClassifierConfig classifier;
    double ground_disagreement_deg = 10.0;
};

struct PointCloudAnalysis {
    ClusterLabeling labeling;
    std::vector<ClusterFeatures> features;
    std::map<int, ClusterRole> roles;
    std::optional<int> pole_cluster;
    std::optional<Line3D> pole_axis;
    std::optional<CorridorResult> corridor;
    /// Angle between `up` and the normal of the dominant planar cluster.
    std::optional<double> ground_tilt_deg;
    bool up_vector_suspect = false;
};

/// dbscan -> features -> classification -> axis fit -> tilt and clearance.
/// Coordinates are multiplied by `scale_m_per_unit` first. A missing pole
/// cluster leaves `corridor` empty.
PointCloudAnalysis analyze_point_cloud(const PointCloud& cloud, const PointCloudConfig& config = {});

std::string point_cloud_analysis_json(const PointCloudAnalysis& analysis);

}  // namespace polerisk
