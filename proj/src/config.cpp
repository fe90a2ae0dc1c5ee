#include "polerisk/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"

namespace polerisk {

namespace {

using Setter = std::function<void(const std::string&)>;

double number(const std::string& key, const std::string& text) {
    const auto v = csv::parse_double(text);
    if (!v) throw ConfigError("config: '" + key + "' is not a number: '" + text + "'");
    return *v;
}

std::size_t count(const std::string& key, const std::string& text) {
    const auto v = csv::parse_int(text);
    if (!v || *v < 0) throw ConfigError("config: '" + key + "' is not a non-negative integer: '" + text + "'");
    return static_cast<std::size_t>(*v);
}

Vec3 vector3(const std::string& key, const std::string& text) {
    const auto parts = csv::split_fields(text);
    if (parts.size() != 3) throw ConfigError("config: '" + key + "' needs three comma-separated numbers");
    return {number(key, parts[0]), number(key, parts[1]), number(key, parts[2])};
}

std::map<std::string, Setter> setters(PipelineConfig& c, bool& fire_low, bool& fire_mod, bool& top_low, bool& top_mod) {
    auto num = [](double& dst) { return [&dst](const std::string& v) { dst = number("value", v); }; };
    std::map<std::string, Setter> s;
    s["fire.thresh_low"] = [&](const std::string& v) { c.risk.fire.thresh_low = number("fire.thresh_low", v); fire_low = true; };
    s["fire.thresh_mod"] = [&](const std::string& v) { c.risk.fire.thresh_mod = number("fire.thresh_mod", v); fire_mod = true; };
    s["fire.depth_threshold"] = [&](const std::string& v) { c.risk.depth_threshold = number("fire.depth_threshold", v); };
    s["fire.clearance_threshold_m"] = [&](const std::string& v) {
        c.risk.clearance_threshold_m = number("fire.clearance_threshold_m", v);
    };
    s["topple.thresh_low"] = [&](const std::string& v) { c.risk.topple.thresh_low = number("topple.thresh_low", v); top_low = true; };
    s["topple.thresh_mod"] = [&](const std::string& v) { c.risk.topple.thresh_mod = number("topple.thresh_mod", v); top_mod = true; };

    auto& w = c.risk.weights;
    s["fragility.w_tilt"] = num(w.w_tilt);
    s["fragility.w_age"] = num(w.w_age);
    s["fragility.w_material"] = num(w.w_material);
    s["fragility.w_wind"] = num(w.w_wind);
    s["fragility.tilt_ref_deg"] = num(w.tilt_ref_deg);
    s["fragility.age_cap_years"] = num(w.age_cap_years);
    s["fragility.wind_ref_ms"] = num(w.wind_ref_ms);
    s["fragility.wind_speed_ms"] = num(c.risk.wind_speed_ms);
    for (Material m : {Material::wood, Material::steel, Material::concrete, Material::composite, Material::unknown}) {
        s["material_factor." + std::string(to_string(m))] = [&w, m](const std::string& v) {
            w.material_factor[m] = number("material_factor", v);
        };
    }
    s["class_score.low"] = num(c.risk.class_scores.low);
    s["class_score.moderate"] = num(c.risk.class_scores.moderate);
    s["class_score.high"] = num(c.risk.class_scores.high);
    s["cost.implementation_cost"] = [&](const std::string& v) {
        c.risk.implementation_cost = number("cost.implementation_cost", v);
    };

    s["canny.low"] = num(c.canny.low);
    s["canny.high"] = num(c.canny.high);
    s["canny.sigma"] = num(c.canny.sigma);

    auto& h = c.hough;
    s["hough.theta_res"] = num(h.theta_res);
    s["hough.rho_res"] = num(h.rho_res);
    s["hough.min_votes_fraction"] = num(h.min_votes_fraction);
    s["hough.nms_theta"] = [&](const std::string& v) { h.nms_theta = count("hough.nms_theta", v); };
    s["hough.nms_rho"] = [&](const std::string& v) { h.nms_rho = count("hough.nms_rho", v); };
    s["hough.max_peaks"] = [&](const std::string& v) { h.max_peaks = count("hough.max_peaks", v); };
    s["hough.max_candidate_deflection"] = num(h.max_candidate_deflection);
    s["hough.roi_margin"] = num(h.roi_margin);

    s["depth.statistic"] = [&](const std::string& v) {
        if (v == "median") c.depth_statistic = RegionStatistic::median;
        else if (v == "mean") c.depth_statistic = RegionStatistic::mean;
        else if (v == "min") c.depth_statistic = RegionStatistic::min;
        else throw ConfigError("config: depth.statistic must be median, mean or min");
    };

    auto& p = c.pointcloud;
    s["pointcloud.eps"] = num(p.eps);
    s["pointcloud.min_pts"] = [&](const std::string& v) { p.min_pts = count("pointcloud.min_pts", v); };
    s["pointcloud.scale_m_per_unit"] = num(p.scale_m_per_unit);
    s["pointcloud.up"] = [&](const std::string& v) { p.up = vector3("pointcloud.up", v); };
    s["pointcloud.ground_disagreement_deg"] = num(p.ground_disagreement_deg);
    s["pointcloud.pole_min_linearity"] = num(p.classifier.pole_min_linearity);
    s["pointcloud.pole_min_verticality"] = num(p.classifier.pole_min_verticality);
    s["pointcloud.min_pole_height"] = num(p.classifier.min_pole_height);
    s["pointcloud.vegetation_max_linearity"] = num(p.classifier.vegetation_max_linearity);
    s["pointcloud.vegetation_min_scatter"] = num(p.classifier.vegetation_min_scatter);
    s["pointcloud.min_vegetation_points"] = [&](const std::string& v) {
        p.classifier.min_vegetation_points = count("pointcloud.min_vegetation_points", v);
    };
    return s;
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text) {
    boost::property_tree::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    PipelineConfig config;
    bool fire_low = false, fire_mod = false, top_low = false, top_mod = false;
    const auto table = setters(config, fire_low, fire_mod, top_low, top_mod);
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' must live inside a [section]");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) throw ConfigError("config: unknown setting '" + full + "'");
            try {
                it->second(std::string(csv::trim(value.data())));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError("config: bad value for '" + full + "': " + e.what());
            }
        }
    }
    if (!fire_low || !fire_mod) throw ConfigError("config: [fire] thresh_low and thresh_mod are required");
    if (!top_low || !top_mod) throw ConfigError("config: [topple] thresh_low and thresh_mod are required");
    try {
        config.risk.fire.validate();
        config.risk.topple.validate();
        config.risk.weights.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (config.risk.depth_threshold && !(*config.risk.depth_threshold > 0)) {
        throw ConfigError("config: fire.depth_threshold must be positive");
    }
    if (!(config.canny.low >= 0 && config.canny.low < config.canny.high)) {
        throw ConfigError("config: canny thresholds need 0 <= low < high");
    }
    if (!(config.pointcloud.eps > 0) || config.pointcloud.min_pts < 1) {
        throw ConfigError("config: pointcloud eps must be positive and min_pts at least 1");
    }
    return config;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_pipeline_config(buf.str());
}

std::string config_snapshot(const PipelineConfig& c) {
    std::map<std::string, std::string> kv;
    auto f = [](double v) { return csv::format_double(v); };
    kv["fire.thresh_low"] = f(c.risk.fire.thresh_low);
    kv["fire.thresh_mod"] = f(c.risk.fire.thresh_mod);
    if (c.risk.depth_threshold) kv["fire.depth_threshold"] = f(*c.risk.depth_threshold);
    if (c.risk.clearance_threshold_m) kv["fire.clearance_threshold_m"] = f(*c.risk.clearance_threshold_m);
    kv["topple.thresh_low"] = f(c.risk.topple.thresh_low);
    kv["topple.thresh_mod"] = f(c.risk.topple.thresh_mod);
    const auto& w = c.risk.weights;
    kv["fragility.w_tilt"] = f(w.w_tilt);
    kv["fragility.w_age"] = f(w.w_age);
    kv["fragility.w_material"] = f(w.w_material);
    kv["fragility.w_wind"] = f(w.w_wind);
    kv["fragility.tilt_ref_deg"] = f(w.tilt_ref_deg);
    kv["fragility.age_cap_years"] = f(w.age_cap_years);
    kv["fragility.wind_ref_ms"] = f(w.wind_ref_ms);
    kv["fragility.wind_speed_ms"] = f(c.risk.wind_speed_ms);
    for (const auto& [m, v] : w.material_factor) kv["material_factor." + std::string(to_string(m))] = f(v);
    kv["class_score.low"] = f(c.risk.class_scores.low);
    kv["class_score.moderate"] = f(c.risk.class_scores.moderate);
    kv["class_score.high"] = f(c.risk.class_scores.high);
    if (c.risk.implementation_cost) kv["cost.implementation_cost"] = f(*c.risk.implementation_cost);
    kv["canny.low"] = f(c.canny.low);
    kv["canny.high"] = f(c.canny.high);
    kv["canny.sigma"] = f(c.canny.sigma);
    kv["hough.theta_res"] = f(c.hough.theta_res);
    kv["hough.rho_res"] = f(c.hough.rho_res);
    kv["hough.min_votes_fraction"] = f(c.hough.min_votes_fraction);
    kv["hough.nms_theta"] = std::to_string(c.hough.nms_theta);
    kv["hough.nms_rho"] = std::to_string(c.hough.nms_rho);
    kv["hough.max_peaks"] = std::to_string(c.hough.max_peaks);
    kv["hough.max_candidate_deflection"] = f(c.hough.max_candidate_deflection);
    kv["hough.roi_margin"] = f(c.hough.roi_margin);
    kv["depth.statistic"] = c.depth_statistic == RegionStatistic::median ? "median"
                            : c.depth_statistic == RegionStatistic::mean ? "mean"
                                                                         : "min";
    const auto& p = c.pointcloud;
    kv["pointcloud.eps"] = f(p.eps);
    kv["pointcloud.min_pts"] = std::to_string(p.min_pts);
    kv["pointcloud.scale_m_per_unit"] = f(p.scale_m_per_unit);
    kv["pointcloud.up"] = f(p.up.x) + "," + f(p.up.y) + "," + f(p.up.z);
    kv["pointcloud.ground_disagreement_deg"] = f(p.ground_disagreement_deg);
    kv["pointcloud.pole_min_linearity"] = f(p.classifier.pole_min_linearity);
    kv["pointcloud.pole_min_verticality"] = f(p.classifier.pole_min_verticality);
    kv["pointcloud.min_pole_height"] = f(p.classifier.min_pole_height);
    kv["pointcloud.vegetation_max_linearity"] = f(p.classifier.vegetation_max_linearity);
    kv["pointcloud.vegetation_min_scatter"] = f(p.classifier.vegetation_min_scatter);
    kv["pointcloud.min_vegetation_points"] = std::to_string(p.classifier.min_vegetation_points);
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

}  // namespace polerisk
