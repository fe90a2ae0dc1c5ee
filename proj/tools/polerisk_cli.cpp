// polerisk: command-line front end for the pole risk pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polerisk/catalog.hpp"
#include "polerisk/config.hpp"
#include "polerisk/csv.hpp"
#include "polerisk/depth.hpp"
#include "polerisk/detection_eval.hpp"
#include "polerisk/error.hpp"
#include "polerisk/hough.hpp"
#include "polerisk/image.hpp"
#include "polerisk/pipeline.hpp"
#include "polerisk/ply.hpp"
#include "polerisk/segmentation.hpp"

namespace fs = std::filesystem;
using namespace polerisk;

namespace {

std::string read_text(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

BBox parse_box(const std::string& text) {
    const auto parts = csv::split_fields(text);
    if (parts.size() != 4) throw Error("box must be x_min,y_min,x_max,y_max: " + text);
    double v[4];
    for (int i = 0; i < 4; ++i) {
        const auto d = csv::parse_double(parts[i]);
        if (!d) throw Error("bad box coordinate: " + parts[i]);
        v[i] = *d;
    }
    const BBox b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) throw Error("box has x_max <= x_min or y_max <= y_min: " + text);
    return b;
}

// Exit codes: 0 ok, 1 bad input data, 2 bad catalog or config.
int cmd_run(const std::string& catalog_path, const std::string& inputs, const std::string& config_path,
            const std::string& geojson_out, const std::string& summary_out, const std::string& stages_out,
            std::size_t jobs) {
    std::vector<PoleRecord> catalog;
    PipelineConfig config;
    try {
        catalog = parse_pole_catalog(read_text(catalog_path));
        config = load_pipeline_config(config_path);
    } catch (const Error& e) {
        std::cerr << "polerisk: " << e.what() << '\n';
        return 2;
    }
    const PipelineRun run = run_pipeline(catalog, inputs, config, jobs);
    write_output(geojson_out, emit_geojson(run));
    if (!summary_out.empty()) write_output(summary_out, emit_summary(run));
    if (!stages_out.empty()) write_output(stages_out, emit_stage_results(run.stages));
    std::cerr << "run " << run.run_id << ": " << run.assessments.size() << " assessed, " << run.failures.size()
              << " failed\n";
    for (const auto& f : run.failures) std::cerr << "  " << f.pole_id << " [" << f.stage << "] " << f.message << '\n';
    for (const auto& [stage, s] : run.stage_seconds) std::cerr << "  " << stage << ": " << s << " s\n";
    return 0;
}

int cmd_inclination(const std::string& edges_dir, const std::string& rois_path, const std::string& out,
                    const std::string& config_path) {
    HoughSettings settings;
    if (!config_path.empty()) settings = load_pipeline_config(config_path).hough;
    const auto rows = parse_roi_table(read_text(rois_path));
    std::map<std::string, std::vector<std::pair<double, double>>> per_pole;
    for (const auto& row : rows) {
        if (row.pole_id.empty()) throw Error("ROI table needs a pole_id column");
        auto& views = per_pole[row.pole_id];
        try {
            const EdgeMask mask = decode_pgm_mask(read_file_bytes((fs::path(edges_dir) / row.image).string()));
            views.emplace_back(row.heading, view_inclination(mask, row.box, settings));
        } catch (const Error& e) {
            std::cerr << "polerisk: " << row.pole_id << " " << row.image << ": " << e.what() << '\n';
        }
    }
    std::string text = "pole_id,inclination_deg,deflection_deg,n_views\n";
    for (const auto& [id, views] : per_pole) {
        if (views.empty()) continue;
        const InclinationResult r = aggregate_pole_inclination(views);
        text += csv::escape_field(id) + ',' + csv::format_fixed(r.inclination_deg, 6) + ',' +
                csv::format_fixed(r.deflection_deg, 6) + ',' + std::to_string(r.n_views_used) + '\n';
    }
    write_output(out, text);
    return 0;
}

int cmd_eval_map(const std::string& dets, const std::string& gts, double iou_threshold) {
    const auto d = parse_detections_csv(read_text(dets));
    const auto g = parse_ground_truth_csv(read_text(gts));
    write_output("", eval_report_json(mean_average_precision(d, g, iou_threshold)));
    return 0;
}

int cmd_depth(const std::string& map_path, const std::string& pole_box, const std::string& veg_box,
              std::optional<double> actual, const std::string& statistic) {
    const auto ext = fs::path(map_path).extension().string();
    const DepthFormat format = ext == ".pfm" ? DepthFormat::pfm : DepthFormat::pgm16;
    const DepthMap map = load_depth_map(read_file_bytes(map_path), format);
    RegionStatistic stat = RegionStatistic::median;
    if (statistic == "mean") stat = RegionStatistic::mean;
    else if (statistic == "min") stat = RegionStatistic::min;
    const std::string id = fs::path(map_path).stem().string();
    write_output("", depth_estimate_json(estimate_depth(map, id, parse_box(pole_box), parse_box(veg_box), actual, stat)));
    return 0;
}

int cmd_pointcloud(const std::string& ply, double eps, std::size_t min_pts, double scale, const std::string& out) {
    PointCloudConfig config;
    config.eps = eps;
    config.min_pts = min_pts;
    config.scale_m_per_unit = scale;
    const PointCloudAnalysis a = analyze_point_cloud(parse_ply(read_file_bytes(ply)), config);
    write_output(out, point_cloud_analysis_json(a));
    return 0;
}

int cmd_risk(const std::string& stages_in, const std::string& catalog_path, const std::string& config_path,
             const std::string& format, const std::string& out) {
    std::vector<PoleRecord> catalog;
    PipelineConfig config;
    try {
        catalog = parse_pole_catalog(read_text(catalog_path));
        config = load_pipeline_config(config_path);
    } catch (const Error& e) {
        std::cerr << "polerisk: " << e.what() << '\n';
        return 2;
    }
    const auto stages = parse_stage_results(read_text(stages_in));
    const auto assessments = assess_stage_results(catalog, stages, config.risk);
    write_output(out, format == "geojson" ? emit_geojson(assessments) : emit_summary(assessments, {}));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Utility pole fire and topple risk"};
    app.require_subcommand(1);

    std::string catalog, inputs, config, geojson_out = "-", summary_out, stages_out;
    std::size_t jobs = 1;
    auto* run = app.add_subcommand("run", "Run every stage over a pole catalog");
    run->add_option("--catalog", catalog, "Pole catalog CSV")->required();
    run->add_option("--inputs", inputs, "Per-pole input root")->required();
    run->add_option("--config", config, "Risk config file")->required();
    run->add_option("--out-geojson", geojson_out, "GeoJSON output ('-' for stdout)");
    run->add_option("--out-summary", summary_out, "Summary CSV output");
    run->add_option("--out-stages", stages_out, "Stage results CSV output");
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string edges, rois, inc_out = "-", inc_config;
    auto* inc = app.add_subcommand("inclination", "Pole inclination from edge masks");
    inc->add_option("--edges", edges, "Directory of PGM edge masks")->required();
    inc->add_option("--rois", rois, "ROI CSV with pole_id column")->required();
    inc->add_option("--out", inc_out, "Output CSV");
    inc->add_option("--config", inc_config, "Config file for Hough settings");

    std::string dets, gts;
    double iou_threshold = 0.5;
    auto* ev = app.add_subcommand("eval-map", "Detection mAP");
    ev->add_option("--dets", dets, "Detections CSV")->required();
    ev->add_option("--gt", gts, "Ground truth CSV")->required();
    ev->add_option("--iou", iou_threshold, "IoU threshold")->check(CLI::Range(0.0, 1.0));

    std::string map_path, pole_box, veg_box, statistic = "median";
    std::optional<double> actual;
    auto* dep = app.add_subcommand("depth", "Relative depth between pole and vegetation boxes");
    dep->add_option("--map", map_path, "Depth map (.pfm or 16-bit .pgm)")->required();
    dep->add_option("--pole-box", pole_box, "x_min,y_min,x_max,y_max")->required();
    dep->add_option("--veg-box", veg_box, "x_min,y_min,x_max,y_max")->required();
    dep->add_option("--actual", actual, "Measured distance in metres");
    dep->add_option("--statistic", statistic, "median, mean or min")->check(CLI::IsMember({"median", "mean", "min"}));

    std::string ply, pc_out = "-";
    double eps = 0.35, scale = 1.0;
    std::size_t min_pts = 8;
    auto* pc = app.add_subcommand("pointcloud", "Pole tilt and vegetation clearance from a PLY cloud");
    pc->add_option("--ply", ply, "PLY point cloud")->required();
    pc->add_option("--eps", eps, "DBSCAN radius")->check(CLI::PositiveNumber);
    pc->add_option("--min-pts", min_pts, "DBSCAN core threshold")->check(CLI::PositiveNumber);
    pc->add_option("--scale", scale, "Metres per cloud unit")->check(CLI::PositiveNumber);
    pc->add_option("--out", pc_out, "Output JSON");

    std::string stages_in, risk_catalog, risk_config, risk_format = "csv", risk_out = "-";
    auto* rk = app.add_subcommand("risk", "Risk classes from stage results");
    rk->add_option("--assessments-in", stages_in, "Stage results CSV")->required();
    rk->add_option("--catalog", risk_catalog, "Pole catalog CSV")->required();
    rk->add_option("--config", risk_config, "Risk config file")->required();
    rk->add_option("--out", risk_format, "csv or geojson")->check(CLI::IsMember({"csv", "geojson"}));
    rk->add_option("--output", risk_out, "Output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(catalog, inputs, config, geojson_out, summary_out, stages_out, jobs);
        if (*inc) return cmd_inclination(edges, rois, inc_out, inc_config);
        if (*ev) return cmd_eval_map(dets, gts, iou_threshold);
        if (*dep) return cmd_depth(map_path, pole_box, veg_box, actual, statistic);
        if (*pc) return cmd_pointcloud(ply, eps, min_pts, scale, pc_out);
        if (*rk) return cmd_risk(stages_in, risk_catalog, risk_config, risk_format, risk_out);
    } catch (const ConfigError& e) {
        std::cerr << "polerisk: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "polerisk: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
