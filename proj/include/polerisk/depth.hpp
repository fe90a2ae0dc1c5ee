#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polerisk/geometry.hpp"

namespace polerisk {

/// Row-major, top row first, model-relative non-negative depth.
struct DepthMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

enum class DepthFormat { pgm16, pfm };

/// PGM (`P5`, maxval up to 65535, big-endian samples) keeps raw sample values.
/// PFM (`Pf`) honours the scale sign for byte order and flips the bottom-up rows.
DepthMap load_depth_map(std::span<const std::uint8_t> bytes, DepthFormat format);

std::vector<std::uint8_t> encode_pfm(const DepthMap& map, bool little_endian = true);
std::vector<std::uint8_t> encode_pgm16(const DepthMap& map);

enum class RegionStatistic { median, mean, min };

/// Statistic over the pixels covered by `box` clipped to the map.
double region_depth(const DepthMap& map, const BBox& box, RegionStatistic statistic = RegionStatistic::median);

/// |vegetation - pole|
double relative_depth(double pole_depth, double vegetation_depth);

struct DepthEstimate {
    std::string pole_id;
    double relative_depth = 0;
    std::optional<double> actual_distance_m;
    BBox pole_box;
    BBox vegetation_box;
};

DepthEstimate estimate_depth(const DepthMap& map, std::string pole_id, const BBox& pole_box, const BBox& veg_box,
                             std::optional<double> actual_distance_m = std::nullopt,
                             RegionStatistic statistic = RegionStatistic::median);

std::string depth_estimate_json(const DepthEstimate& estimate);

enum class AccuracyMode {
    clearance,  // relative depth at least the threshold
    error,      // |relative - actual| within the threshold
};

struct DepthAccuracyReport {
    double threshold = 0;
    std::size_t n_within = 0;
    std::size_t n_total = 0;
    double accuracy = 0;
    AccuracyMode mode = AccuracyMode::clearance;
};

DepthAccuracyReport depth_accuracy(std::span<const DepthEstimate> estimates, double threshold,
                                   AccuracyMode mode = AccuracyMode::clearance);

struct DepthCalibration {
    double scale = 1;
    double offset = 0;
    double r_squared = 0;

    double apply(double relative) const { return scale * relative + offset; }
};

/// Least-squares fit actual ~ scale * relative + offset over (relative, actual) pairs.
DepthCalibration calibrate_depth(std::span<const std::pair<double, double>> pairs);

}  // namespace polerisk
