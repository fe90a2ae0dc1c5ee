#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polerisk/catalog.hpp"
#include "polerisk/config.hpp"
#include "polerisk/depth.hpp"
#include "polerisk/error.hpp"
#include "polerisk/hough.hpp"
#include "polerisk/risk.hpp"
#include "polerisk/segmentation.hpp"

namespace polerisk {

/// One row of a ROI table. `pole_id` is only filled when the table carries
/// a leading pole_id column.
struct RoiRow {
    std::string pole_id;
    std::string image;
    double heading = 0;
    BBox box;
};

/// Header `image,heading,x_min,y_min,x_max,y_max`, optionally preceded by `pole_id`.
std::vector<RoiRow> parse_roi_table(std::string_view text);

struct DepthBoxRow {
    std::string map;
    BBox pole_box;
    BBox vegetation_box;
    std::optional<double> actual_m;
};

/// Header `map,pole_x_min,pole_y_min,pole_x_max,pole_y_max,veg_x_min,veg_y_min,veg_x_max,veg_y_max,actual_m`.
std::vector<DepthBoxRow> parse_depth_boxes(std::string_view text);

/// Crop around the ROI, vote, pick peaks and return the inclination of the
/// selected pole line in degrees. Throws when no pole-like line is found.
double view_inclination(const EdgeMask& mask, const BBox& roi, const HoughSettings& settings = {});

/// Stage outputs for one pole.
struct PoleStageResults {
    std::string pole_id;
    std::optional<InclinationResult> inclination;
    std::optional<CorridorResult> corridor;
    std::vector<DepthEstimate> depth;
};

struct StageFailure {
    std::string pole_id;
    std::string stage;
    std::string message;
};

struct PipelineRun {
    std::string run_id;
    std::string config_snapshot;
    std::vector<PoleRiskAssessment> assessments;  // by pole_id
    std::vector<PoleStageResults> stages;         // parallel to assessments
    std::vector<StageFailure> failures;           // by pole_id
    std::map<std::string, double> stage_seconds;  // summed over poles
};

/// Runs every stage whose inputs exist under `<inputs>/<pole_id>/`:
///   edges/*.pgm + rois.csv (or images/*.ppm|*.pgm + rois.csv) -> inclination
///   depth/*.pfm|*.pgm + depth/boxes.csv                       -> depth estimates
///   cloud.ply                                                 -> corridor
/// A pole with a failing stage, or with no inputs at all, is reported in
/// `failures` instead of `assessments`.
PipelineRun run_pipeline(std::span<const PoleRecord> catalog, const std::filesystem::path& inputs,
                         const PipelineConfig& config, std::size_t jobs = 1);

/// Stage pipeline for a single pole directory. Throws StageError.
PoleStageResults run_pole_stages(const std::string& pole_id, const std::filesystem::path& pole_dir,
                                 const PipelineConfig& config, std::map<std::string, double>* seconds = nullptr);

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message) : Error(message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// FeatureCollection with one point feature per assessment. Keys of features,
/// geometries and properties are sorted; numbers carry at most 6 decimals.
std::string emit_geojson(const PipelineRun& run);
std::string emit_geojson(std::span<const PoleRiskAssessment> assessments);

/// Per-pole CSV rows followed by `# key,value` footer lines.
std::string emit_summary(const PipelineRun& run);
std::string emit_summary(std::span<const PoleRiskAssessment> assessments, std::span<const StageFailure> failures);

/// Flat stage outputs, one row per (pole, measurement):
/// `pole_id,inclination_deg,n_views,corridor_tilt_deg,clearance_m,relative_depth,actual_m`.
std::string emit_stage_results(std::span<const PoleStageResults> stages);
std::vector<PoleStageResults> parse_stage_results(std::string_view text);

/// assess_pole over stage results, matched to catalog rows by pole_id.
/// Poles without stage results are skipped; unknown ids raise Error.
std::vector<PoleRiskAssessment> assess_stage_results(std::span<const PoleRecord> catalog,
                                                     std::span<const PoleStageResults> stages,
                                                     const RiskConfig& config);

}  // namespace polerisk
