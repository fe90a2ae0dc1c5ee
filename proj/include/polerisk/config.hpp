#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "polerisk/depth.hpp"
#include "polerisk/imaging.hpp"
#include "polerisk/risk.hpp"
#include "polerisk/segmentation.hpp"

namespace polerisk {

struct HoughSettings {
    double theta_res = 0.25;
    double rho_res = 1.0;
    double min_votes_fraction = 0.3;  // of the ROI height
    std::size_t nms_theta = 5;
    std::size_t nms_rho = 5;
    std::size_t max_peaks = 10;
    double max_candidate_deflection = 30.0;
    double roi_margin = 10.0;
};

struct PipelineConfig {
    RiskConfig risk;
    CannyConfig canny;
    HoughSettings hough;
    RegionStatistic depth_statistic = RegionStatistic::median;
    PointCloudConfig pointcloud;
};

/// Parses the `key = value` config with [sections]:
///   [fire] thresh_low thresh_mod depth_threshold clearance_threshold_m
///   [topple] thresh_low thresh_mod
///   [fragility] w_tilt w_age w_material w_wind tilt_ref_deg age_cap_years wind_ref_ms wind_speed_ms
///   [material_factor] wood steel concrete composite unknown
///   [class_score] low moderate high
///   [cost] implementation_cost
///   [canny] low high sigma
///   [hough] theta_res rho_res min_votes_fraction nms_theta nms_rho max_peaks
///           max_candidate_deflection roi_margin
///   [depth] statistic (median|mean|min)
///   [pointcloud] eps min_pts scale_m_per_unit up pole_min_linearity pole_min_verticality
///                min_pole_height vegetation_max_linearity vegetation_min_scatter
///                min_vegetation_points
/// Fire and topple thresholds are mandatory. Throws ConfigError.
PipelineConfig parse_pipeline_config(std::string_view text);
PipelineConfig load_pipeline_config(const std::string& path);

/// Canonical `section.key = value` listing of every setting, sorted.
std::string config_snapshot(const PipelineConfig& config);

}  // namespace polerisk
