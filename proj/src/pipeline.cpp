#include "polerisk/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"
#include "polerisk/image.hpp"
#include "polerisk/imaging.hpp"
#include "polerisk/ply.hpp"

namespace fs = std::filesystem;

namespace polerisk {

namespace {

std::vector<std::string> header_fields(std::string_view line) {
    auto fields = csv::split_fields(line);
    for (auto& f : fields) f = std::string(csv::trim(f));
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
    return fields;
}

double field_number(const std::string& text, const char* what, std::size_t line) {
    const auto v = csv::parse_double(text);
    if (!v || !std::isfinite(*v)) throw ParseError::at_line(std::string("bad ") + what, line);
    return *v;
}

std::optional<double> optional_number(const std::string& text, const char* what, std::size_t line) {
    if (csv::trim(text).empty()) return std::nullopt;
    return field_number(text, what, line);
}

BBox box_from(const std::vector<std::string>& f, std::size_t at, std::size_t line) {
    BBox b{field_number(f[at], "x_min", line), field_number(f[at + 1], "y_min", line),
           field_number(f[at + 2], "x_max", line), field_number(f[at + 3], "y_max", line)};
    if (!b.valid()) throw ParseError::at_line("box has x_max <= x_min or y_max <= y_min", line);
    return b;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_file_bytes(path.string());
    return std::string(bytes.begin(), bytes.end());
}

class StageTimer {
public:
    StageTimer(std::map<std::string, double>* sink, std::string stage)
        : sink_(sink), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        if (sink_) {
            (*sink_)[stage_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        }
    }

private:
    std::map<std::string, double>* sink_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

template <class F>
auto in_stage(const std::string& stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

EdgeMask load_view_edges(const fs::path& pole_dir, const std::string& image, const CannyConfig& canny) {
    const fs::path edge_file = pole_dir / "edges" / image;
    if (fs::is_regular_file(edge_file)) return decode_pgm_mask(read_file_bytes(edge_file.string()));
    const fs::path raw = pole_dir / "images" / image;
    if (fs::is_regular_file(raw)) {
        const auto bytes = read_file_bytes(raw.string());
        if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
            return canny_edges(to_grayscale(decode_pnm_rgb(bytes)), canny);
        }
        return canny_edges(decode_pgm_gray(bytes), canny);
    }
    throw Error("view image not found: " + image);
}

std::optional<InclinationResult> inclination_stage(const fs::path& pole_dir, const PipelineConfig& config) {
    const fs::path rois = pole_dir / "rois.csv";
    if (!fs::is_regular_file(rois)) return std::nullopt;
    const auto rows = parse_roi_table(read_text(rois));
    std::vector<std::pair<double, double>> per_view;
    std::string last_error = "ROI table is empty";
    for (const auto& row : rows) {
        try {
            const EdgeMask mask = load_view_edges(pole_dir, row.image, config.canny);
            per_view.emplace_back(row.heading, view_inclination(mask, row.box, config.hough));
        } catch (const Error& e) {
            // A single occluded heading should not sink the pole.
            last_error = row.image + ": " + e.what();
        }
    }
    if (per_view.empty()) throw Error("no view produced a pole line (" + last_error + ")");
    return aggregate_pole_inclination(per_view);
}

std::vector<DepthEstimate> depth_stage(const std::string& pole_id, const fs::path& pole_dir,
                                       const PipelineConfig& config) {
    const fs::path boxes = pole_dir / "depth" / "boxes.csv";
    if (!fs::is_regular_file(boxes)) return {};
    std::vector<DepthEstimate> out;
    std::map<std::string, DepthMap> maps;
    for (const auto& row : parse_depth_boxes(read_text(boxes))) {
        auto it = maps.find(row.map);
        if (it == maps.end()) {
            const fs::path file = pole_dir / "depth" / row.map;
            const auto ext = file.extension().string();
            DepthFormat format;
            if (ext == ".pfm") format = DepthFormat::pfm;
            else if (ext == ".pgm") format = DepthFormat::pgm16;
            else throw Error("unsupported depth map format: " + row.map);
            it = maps.emplace(row.map, load_depth_map(read_file_bytes(file.string()), format)).first;
        }
        out.push_back(estimate_depth(it->second, pole_id, row.pole_box, row.vegetation_box, row.actual_m,
                                     config.depth_statistic));
    }
    return out;
}

std::optional<CorridorResult> pointcloud_stage(const fs::path& pole_dir, const PipelineConfig& config) {
    const fs::path ply = pole_dir / "cloud.ply";
    if (!fs::is_regular_file(ply)) return std::nullopt;
    const PointCloud cloud = parse_ply(read_file_bytes(ply.string()));
    const PointCloudAnalysis analysis = analyze_point_cloud(cloud, config.pointcloud);
    if (!analysis.corridor) throw Error("no pole cluster in point cloud");
    return analysis.corridor;
}

std::string opt_text(const std::optional<double>& v, int decimals = 6) {
    return v ? csv::format_fixed(*v, decimals) : std::string();
}

std::string json_number(double v) { return csv::format_fixed(v, 6); }

std::string json_string(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(c)));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out + "\"";
}

std::string json_opt(const std::optional<double>& v) { return v ? json_number(*v) : "null"; }
std::string json_opt(const std::optional<RiskClass>& c) { return c ? json_string(to_string(*c)) : "null"; }

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::vector<RoiRow> parse_roi_table(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError::at_line("missing ROI header", 1);
    const auto header = header_fields(lines[0]);
    const std::vector<std::string> base{"image", "heading", "x_min", "y_min", "x_max", "y_max"};
    bool with_id = false;
    if (header == base) {
        with_id = false;
    } else if (header.size() == 7 && header[0] == "pole_id" && std::equal(base.begin(), base.end(), header.begin() + 1)) {
        with_id = true;
    } else {
        throw ParseError::at_line("unexpected ROI header", 1);
    }
    const std::size_t width = with_id ? 7 : 6;
    std::vector<RoiRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        const std::size_t line = i + 1;
        auto f = csv::split_fields(lines[i]);
        if (f.size() != width) throw ParseError::at_line("expected " + std::to_string(width) + " fields", line);
        for (auto& s : f) s = std::string(csv::trim(s));
        RoiRow row;
        std::size_t at = 0;
        if (with_id) row.pole_id = f[at++];
        row.image = f[at++];
        if (row.image.empty()) throw ParseError::at_line("empty image name", line);
        row.heading = field_number(f[at++], "heading", line);
        row.box = box_from(f, at, line);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<DepthBoxRow> parse_depth_boxes(std::string_view text) {
    const auto lines = csv::split_lines(text);
    const std::vector<std::string> expected{"map",       "pole_x_min", "pole_y_min", "pole_x_max", "pole_y_max",
                                            "veg_x_min", "veg_y_min",  "veg_x_max",  "veg_y_max",  "actual_m"};
    if (lines.empty() || header_fields(lines[0]) != expected) {
        throw ParseError::at_line("unexpected depth box header", 1);
    }
    std::vector<DepthBoxRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        const std::size_t line = i + 1;
        auto f = csv::split_fields(lines[i]);
        if (f.size() != expected.size()) throw ParseError::at_line("expected 10 fields", line);
        for (auto& s : f) s = std::string(csv::trim(s));
        DepthBoxRow row;
        row.map = f[0];
        if (row.map.empty()) throw ParseError::at_line("empty map name", line);
        row.pole_box = box_from(f, 1, line);
        row.vegetation_box = box_from(f, 5, line);
        row.actual_m = optional_number(f[9], "actual_m", line);
        rows.push_back(std::move(row));
    }
    return rows;
}

double view_inclination(const EdgeMask& mask, const BBox& roi, const HoughSettings& settings) {
    const MaskCrop crop = crop_roi(mask, roi, settings.roi_margin);
    const HoughAccumulator acc = hough_accumulate(crop.mask, settings.theta_res, settings.rho_res);
    PeakOptions options;
    options.max_peaks = settings.max_peaks;
    options.nms_theta = settings.nms_theta;
    options.nms_rho = settings.nms_rho;
    const double min_votes = std::ceil(settings.min_votes_fraction * (roi.y_max - roi.y_min));
    options.min_votes = static_cast<std::uint32_t>(std::max(1.0, min_votes));
    auto lines = extract_peaks(acc, options);
    for (auto& line : lines) {
        line = translate_line(line, static_cast<double>(crop.window.x0), static_cast<double>(crop.window.y0));
    }
    return inclination_angle(select_pole_line(lines, roi, settings.max_candidate_deflection));
}

PoleStageResults run_pole_stages(const std::string& pole_id, const fs::path& pole_dir, const PipelineConfig& config,
                                 std::map<std::string, double>* seconds) {
    PoleStageResults r;
    r.pole_id = pole_id;
    {
        StageTimer t(seconds, "inclination");
        r.inclination = in_stage("inclination", [&] { return inclination_stage(pole_dir, config); });
    }
    {
        StageTimer t(seconds, "depth");
        r.depth = in_stage("depth", [&] { return depth_stage(pole_id, pole_dir, config); });
    }
    {
        StageTimer t(seconds, "pointcloud");
        r.corridor = in_stage("pointcloud", [&] { return pointcloud_stage(pole_dir, config); });
    }
    return r;
}

PipelineRun run_pipeline(std::span<const PoleRecord> catalog, const fs::path& inputs, const PipelineConfig& config,
                         std::size_t jobs) {
    PipelineRun run;
    run.config_snapshot = config_snapshot(config);

    std::vector<std::size_t> order(catalog.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return catalog[a].pole_id < catalog[b].pole_id; });

    std::uint64_t h = fnv1a64(run.config_snapshot);
    for (std::size_t i : order) h = fnv1a64(serialize_pole_catalog(catalog.subspan(i, 1)), h);
    char id[17];
    std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(h));
    run.run_id = id;

    struct Slot {
        std::optional<PoleStageResults> stages;
        std::optional<PoleRiskAssessment> assessment;
        std::optional<StageFailure> failure;
        std::map<std::string, double> seconds;
    };
    std::vector<Slot> slots(order.size());

    auto process = [&](std::size_t k) {
        const PoleRecord& pole = catalog[order[k]];
        Slot& slot = slots[k];
        if (k > 0 && catalog[order[k - 1]].pole_id == pole.pole_id) {
            slot.failure = StageFailure{pole.pole_id, "catalog", "duplicate pole_id"};
            return;
        }
        try {
            PoleStageResults stages = run_pole_stages(pole.pole_id, inputs / pole.pole_id, config, &slot.seconds);
            if (!stages.inclination && !stages.corridor && stages.depth.empty()) {
                slot.failure = StageFailure{pole.pole_id, "inputs", "no analysis inputs"};
                return;
            }
            StageTimer t(&slot.seconds, "risk");
            slot.assessment = in_stage("risk", [&] {
                return assess_pole(pole, stages.inclination, stages.corridor, stages.depth, config.risk);
            });
            slot.stages = std::move(stages);
        } catch (const StageError& e) {
            slot.failure = StageFailure{pole.pole_id, e.stage(), e.what()};
        } catch (const std::exception& e) {
            slot.failure = StageFailure{pole.pole_id, "unknown", e.what()};
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, order.size()));
    if (workers <= 1) {
        for (std::size_t k = 0; k < order.size(); ++k) process(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k; (k = next.fetch_add(1)) < order.size();) process(k);
            });
        }
    }

    for (auto& slot : slots) {
        for (const auto& [stage, s] : slot.seconds) run.stage_seconds[stage] += s;
        if (slot.assessment) {
            run.assessments.push_back(std::move(*slot.assessment));
            run.stages.push_back(std::move(*slot.stages));
        } else {
            run.failures.push_back(std::move(*slot.failure));
        }
    }
    return run;
}

std::string emit_geojson(const PipelineRun& run) { return emit_geojson(run.assessments); }

std::string emit_geojson(std::span<const PoleRiskAssessment> assessments) {
    std::string out = R"({"type":"FeatureCollection","features":[)";
    bool first = true;
    for (const auto& a : assessments) {
        if (!first) out += ',';
        first = false;
        out += R"({"geometry":{"coordinates":[)";
        out += json_number(a.longitude) + ',' + json_number(a.latitude);
        out += R"(],"type":"Point"},"properties":{)";
        out += "\"clearance_m\":" + json_opt(a.clearance_m);
        out += ",\"fire_risk\":" + json_opt(a.fire_risk);
        out += ",\"fragility\":" + json_opt(a.fragility);
        out += ",\"pole_id\":" + json_string(a.pole_id);
        out += ",\"tilt_deg\":" + json_opt(a.tilt_deg);
        out += ",\"topple_risk\":" + json_opt(a.topple_risk);
        out += R"(},"type":"Feature"})";
    }
    return out + "]}";
}

std::string emit_summary(const PipelineRun& run) { return emit_summary(run.assessments, run.failures); }

std::string emit_summary(std::span<const PoleRiskAssessment> assessments, std::span<const StageFailure> failures) {
    std::string out =
        "pole_id,lat,lon,fire_risk,fire_accuracy,topple_risk,fragility,tilt_deg,clearance_m,cost_metric\n";
    std::vector<double> tilts;
    std::map<std::string, std::size_t> fire_hist{{"Low", 0}, {"Moderate", 0}, {"High", 0}, {"none", 0}};
    auto topple_hist = fire_hist;
    for (const auto& a : assessments) {
        out += csv::escape_field(a.pole_id) + ',' + csv::format_fixed(a.latitude, 6) + ',' +
               csv::format_fixed(a.longitude, 6) + ',';
        out += (a.fire_risk ? std::string(to_string(*a.fire_risk)) : "") + ',' + opt_text(a.fire_accuracy) + ',';
        out += (a.topple_risk ? std::string(to_string(*a.topple_risk)) : "") + ',' + opt_text(a.fragility) + ',';
        out += opt_text(a.tilt_deg) + ',' + opt_text(a.clearance_m) + ',' + opt_text(a.cost_metric) + '\n';
        if (a.tilt_deg) tilts.push_back(*a.tilt_deg);
        ++fire_hist[a.fire_risk ? std::string(to_string(*a.fire_risk)) : "none"];
        ++topple_hist[a.topple_risk ? std::string(to_string(*a.topple_risk)) : "none"];
    }
    auto hist_text = [](const std::map<std::string, std::size_t>& h) {
        std::string s;
        for (const char* k : {"Low", "Moderate", "High", "none"}) {
            if (!s.empty()) s += ';';
            s += std::string(k) + '=' + std::to_string(h.at(k));
        }
        return s;
    };
    out += "# poles_assessed," + std::to_string(assessments.size()) + '\n';
    out += "# failures," + std::to_string(failures.size()) + '\n';
    out += "# poles_with_deflection," + std::to_string(tilts.size()) + '\n';
    if (!tilts.empty()) {
        const double mean = std::accumulate(tilts.begin(), tilts.end(), 0.0) / static_cast<double>(tilts.size());
        out += "# mean_deflection_deg," + csv::format_fixed(mean, 6) + '\n';
        out += "# median_deflection_deg," + csv::format_fixed(median_of(tilts), 6) + '\n';
    } else {
        out += "# mean_deflection_deg,\n# median_deflection_deg,\n";
    }
    out += "# fire_risk_histogram," + hist_text(fire_hist) + '\n';
    out += "# topple_risk_histogram," + hist_text(topple_hist) + '\n';
    for (const auto& f : failures) {
        out += "# failure," + csv::escape_field(f.pole_id) + ',' + csv::escape_field(f.stage) + ',' +
               csv::escape_field(f.message) + '\n';
    }
    return out;
}

namespace {
constexpr std::string_view kStageHeader =
    "pole_id,inclination_deg,n_views,corridor_tilt_deg,clearance_m,relative_depth,actual_m";
}

std::string emit_stage_results(std::span<const PoleStageResults> stages) {
    std::string out = std::string(kStageHeader) + '\n';
    auto fmt = [](double v) { return csv::format_double(v); };
    for (const auto& s : stages) {
        std::string inc, views, tilt, clear;
        if (s.inclination) {
            inc = fmt(s.inclination->inclination_deg);
            views = std::to_string(s.inclination->n_views_used);
        }
        if (s.corridor) {
            tilt = fmt(s.corridor->tilt_deg);
            if (s.corridor->clearance) clear = fmt(s.corridor->clearance->clearance_m);
        }
        const std::string id = csv::escape_field(s.pole_id);
        const std::string head = id + ',' + inc + ',' + views + ',' + tilt + ',' + clear + ',';
        if (s.depth.empty()) {
            out += head + ",\n";
            continue;
        }
        for (const auto& d : s.depth) {
            out += head + fmt(d.relative_depth) + ',' +
                   (d.actual_distance_m ? fmt(*d.actual_distance_m) : std::string()) + '\n';
        }
    }
    return out;
}

std::vector<PoleStageResults> parse_stage_results(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty() || csv::trim(lines[0]) != kStageHeader) {
        throw ParseError::at_line("unexpected stage results header", 1);
    }
    std::vector<PoleStageResults> out;
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        const std::size_t line = i + 1;
        auto f = csv::split_fields(lines[i]);
        if (f.size() != 7) throw ParseError::at_line("expected 7 fields", line);
        for (auto& s : f) s = std::string(csv::trim(s));
        if (f[0].empty()) throw ParseError::at_line("empty pole_id", line);
        auto [it, inserted] = slot.emplace(f[0], out.size());
        if (inserted) out.push_back(PoleStageResults{f[0], std::nullopt, std::nullopt, {}});
        PoleStageResults& r = out[it->second];
        if (const auto inc = optional_number(f[1], "inclination_deg", line); inc && !r.inclination) {
            if (*inc < 0 || *inc > 90) throw ParseError::at_line("inclination_deg outside [0, 90]", line);
            r.inclination = InclinationResult::from_inclination(*inc);
            const auto n = f[2].empty() ? std::optional<long long>(1) : csv::parse_int(f[2]);
            if (!n || *n < 1) throw ParseError::at_line("bad n_views", line);
            r.inclination->n_views_used = static_cast<std::size_t>(*n);
        }
        if (const auto tilt = optional_number(f[3], "corridor_tilt_deg", line); tilt && !r.corridor) {
            r.corridor = CorridorResult{*tilt, std::nullopt};
            if (const auto c = optional_number(f[4], "clearance_m", line)) {
                r.corridor->clearance = ClearanceResult{*c, {}, {}};
            }
        }
        if (const auto rel = optional_number(f[5], "relative_depth", line)) {
            DepthEstimate d;
            d.pole_id = f[0];
            d.relative_depth = *rel;
            d.actual_distance_m = optional_number(f[6], "actual_m", line);
            r.depth.push_back(std::move(d));
        }
    }
    return out;
}

std::vector<PoleRiskAssessment> assess_stage_results(std::span<const PoleRecord> catalog,
                                                     std::span<const PoleStageResults> stages,
                                                     const RiskConfig& config) {
    std::map<std::string, const PoleRecord*> by_id;
    for (const auto& p : catalog) by_id.emplace(p.pole_id, &p);
    std::vector<PoleRiskAssessment> out;
    for (const auto& s : stages) {
        const auto it = by_id.find(s.pole_id);
        if (it == by_id.end()) throw Error("pole not in catalog: " + s.pole_id);
        out.push_back(assess_pole(*it->second, s.inclination, s.corridor, s.depth, config));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.pole_id < b.pole_id; });
    return out;
}

}  // namespace polerisk
