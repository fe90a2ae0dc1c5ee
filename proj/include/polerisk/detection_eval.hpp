#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polerisk/geometry.hpp"

namespace polerisk {

struct Detection {
    std::string image_id;
    int class_id = 0;
    double score = 0;
    BBox box;
};

struct GroundTruth {
    std::string image_id;
    int class_id = 0;
    BBox box;
};

struct MatchedDetection {
    Detection detection;
    bool true_positive = false;
};

struct EvalReport {
    std::map<int, double> per_class_ap;
    std::size_t n_classes = 0;
    double map_value = 0;
    double iou_threshold = 0.5;
};

double iou(const BBox& a, const BBox& b);

/// Greedy matching in descending score order (stable for equal scores). Each
/// detection takes the highest-IoU unmatched ground truth of the same image
/// and class with IoU >= threshold.
std::vector<MatchedDetection> match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                               double iou_threshold = 0.5);

/// All-point interpolated AP over TP/FP flags in ranked order. Returns nullopt
/// when there is neither ground truth nor a detection (class is not
/// evaluable); 0 when detections exist without ground truth.
std::optional<double> average_precision(std::span<const bool> ranked_flags, std::size_t n_gt);

/// Per-class AP and their arithmetic mean. `classes`, when given, lists the
/// classes to report; otherwise every class seen in either input is used.
/// Throws when no class is evaluable.
EvalReport mean_average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                  double iou_threshold = 0.5, std::optional<std::vector<int>> classes = std::nullopt);

/// `image_id,class_id,score,x_min,y_min,x_max,y_max`
std::vector<Detection> parse_detections_csv(std::string_view text);
/// `image_id,class_id,x_min,y_min,x_max,y_max`
std::vector<GroundTruth> parse_ground_truth_csv(std::string_view text);

std::string eval_report_json(const EvalReport& report);

}  // namespace polerisk
