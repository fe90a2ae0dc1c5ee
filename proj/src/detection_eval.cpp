#include "polerisk/detection_eval.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <set>

#include <json.hpp>

#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"

namespace polerisk {

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<MatchedDetection> match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                               double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw Error("match_detections: IoU threshold must be in (0,1]");
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> used(gts.size(), false);
    std::vector<MatchedDetection> out;
    out.reserve(dets.size());
    for (std::size_t di : order) {
        const Detection& d = dets[di];
        std::optional<std::size_t> best;
        double best_iou = iou_threshold;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].class_id != d.class_id || gts[g].image_id != d.image_id) continue;
            const double v = iou(d.box, gts[g].box);
            if (v >= best_iou && (!best || v > best_iou)) {
                best = g;
                best_iou = v;
            }
        }
        if (best) used[*best] = true;
        out.push_back({d, best.has_value()});
    }
    return out;
}

std::optional<double> average_precision(std::span<const bool> ranked_flags, std::size_t n_gt) {
    if (n_gt == 0) {
        if (ranked_flags.empty()) return std::nullopt;
        return 0.0;
    }
    const std::size_t n = ranked_flags.size();
    std::vector<double> precision(n);
    std::vector<double> recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ranked_flags[i]) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    }
    // Precision envelope: running maximum from the right.
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0;
    double prev_recall = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

EvalReport mean_average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                  double iou_threshold, std::optional<std::vector<int>> classes) {
    std::set<int> class_set;
    if (classes) {
        class_set.insert(classes->begin(), classes->end());
    } else {
        for (const auto& d : dets) class_set.insert(d.class_id);
        for (const auto& g : gts) class_set.insert(g.class_id);
    }

    EvalReport report;
    report.iou_threshold = iou_threshold;
    for (int cls : class_set) {
        std::vector<Detection> cls_dets;
        std::vector<GroundTruth> cls_gts;
        std::copy_if(dets.begin(), dets.end(), std::back_inserter(cls_dets), [&](const auto& d) { return d.class_id == cls; });
        std::copy_if(gts.begin(), gts.end(), std::back_inserter(cls_gts), [&](const auto& g) { return g.class_id == cls; });
        const auto matches = match_detections(cls_dets, cls_gts, iou_threshold);
        const auto flags = std::make_unique<bool[]>(matches.size());
        for (std::size_t i = 0; i < matches.size(); ++i) flags[i] = matches[i].true_positive;
        if (const auto ap = average_precision(std::span<const bool>(flags.get(), matches.size()), cls_gts.size())) {
            report.per_class_ap[cls] = *ap;
        }
    }
    if (report.per_class_ap.empty()) throw Error("mean_average_precision: no evaluable class");
    report.n_classes = report.per_class_ap.size();
    double sum = 0;
    for (const auto& [cls, ap] : report.per_class_ap) sum += ap;
    report.map_value = sum / static_cast<double>(report.n_classes);
    return report;
}

namespace {

BBox parse_box(const std::vector<std::string>& f, std::size_t first, std::size_t line) {
    BBox b;
    double* dst[4] = {&b.x_min, &b.y_min, &b.x_max, &b.y_max};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto v = csv::parse_double(f[first + k]);
        if (!v) throw ParseError::at_line("unparsable box coordinate", line);
        *dst[k] = *v;
    }
    if (!b.valid()) throw ParseError::at_line("degenerate box", line);
    return b;
}

template <typename Row>
std::vector<Row> parse_rows(std::string_view text, std::string_view header, std::size_t columns,
                            Row (*make)(const std::vector<std::string>&, std::size_t)) {
    const auto lines = csv::split_lines(text);
    if (lines.empty() || csv::trim(lines.front()) != header) throw ParseError::at_line("unexpected header", 1);
    std::vector<Row> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        const auto f = csv::split_fields(lines[i]);
        if (f.size() != columns) throw ParseError::at_line("wrong column count", i + 1);
        rows.push_back(make(f, i + 1));
    }
    return rows;
}

int parse_class(const std::string& field, std::size_t line) {
    const auto v = csv::parse_int(field);
    if (!v) throw ParseError::at_line("unparsable class_id", line);
    return static_cast<int>(*v);
}

}  // namespace

std::vector<Detection> parse_detections_csv(std::string_view text) {
    return parse_rows<Detection>(text, "image_id,class_id,score,x_min,y_min,x_max,y_max", 7,
                                 [](const std::vector<std::string>& f, std::size_t line) {
                                     const auto score = csv::parse_double(f[2]);
                                     if (!score || *score < 0.0 || *score > 1.0) {
                                         throw ParseError::at_line("score must be in [0,1]", line);
                                     }
                                     return Detection{std::string(csv::trim(f[0])), parse_class(f[1], line), *score,
                                                      parse_box(f, 3, line)};
                                 });
}

std::vector<GroundTruth> parse_ground_truth_csv(std::string_view text) {
    return parse_rows<GroundTruth>(text, "image_id,class_id,x_min,y_min,x_max,y_max", 6,
                                   [](const std::vector<std::string>& f, std::size_t line) {
                                       return GroundTruth{std::string(csv::trim(f[0])), parse_class(f[1], line),
                                                          parse_box(f, 2, line)};
                                   });
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [cls, ap] : report.per_class_ap) per_class[std::to_string(cls)] = ap;
    const nlohmann::json j = {
        {"iou_threshold", report.iou_threshold},
        {"map", report.map_value},
        {"n_classes", report.n_classes},
        {"per_class_ap", per_class},
    };
    return j.dump();
}

}  // namespace polerisk
