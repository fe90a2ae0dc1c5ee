#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "polerisk/catalog.hpp"
#include "polerisk/depth.hpp"
#include "polerisk/hough.hpp"
#include "polerisk/segmentation.hpp"

namespace polerisk {

/// Two cut points with thresh_low > thresh_mod.
struct RiskThresholds {
    double thresh_low = 0;
    double thresh_mod = 0;

    void validate() const;
};

/// Ordered Low < Moderate < High.
enum class RiskClass { Low = 0, Moderate = 1, High = 2 };

std::string_view to_string(RiskClass c);
std::optional<RiskClass> parse_risk_class(std::string_view text);

/// Low if accuracy > thresh_low; Moderate if thresh_low >= accuracy > thresh_mod;
/// High if accuracy <= thresh_mod.
RiskClass fire_risk(double accuracy, const RiskThresholds& t);

/// Same inequalities applied to the fragility value, exactly as the fire-risk
/// rule. Note that this maps a *higher* fragility to a *lower* class.
RiskClass topple_risk(double fragility_value, const RiskThresholds& t);

struct FragilityInput {
    double tilt_deg = 0;
    double age_years = 0;
    Material material = Material::unknown;
    double wind_speed_ms = 0;
};

struct FragilityWeights {
    double w_tilt = 0.25;
    double w_age = 0.25;
    double w_material = 0.25;
    double w_wind = 0.25;
    std::map<Material, double> material_factor{
        {Material::wood, 1.0},     {Material::composite, 0.6}, {Material::steel, 0.3},
        {Material::concrete, 0.2}, {Material::unknown, 1.0},
    };
    double age_cap_years = 100;
    double wind_ref_ms = 40;
    double tilt_ref_deg = 10;

    void validate() const;
};

/// w_tilt*min(tilt/tilt_ref,1) + w_age*min(age/age_cap,1)
///   + w_material*factor(material) + w_wind*min(wind/wind_ref,1)
double fragility(const FragilityInput& input, const FragilityWeights& w);

struct ClassScores {
    double low = 1;
    double moderate = 2;
    double high = 3;
};

double risk_class_score(RiskClass c, const ClassScores& scores = {});

/// implementation_cost / fire_risk_score
double cost_metric(double implementation_cost, double fire_risk_score);

struct RiskConfig {
    RiskThresholds fire;
    RiskThresholds topple;
    FragilityWeights weights;
    ClassScores class_scores;
    /// Relative-depth clearance needed for a depth estimate to count as safe.
    std::optional<double> depth_threshold;
    /// Point-cloud clearance (metres) needed for the corridor to count as safe.
    std::optional<double> clearance_threshold_m;
    double wind_speed_ms = 0;
    std::optional<double> implementation_cost;
};

struct PoleRiskAssessment {
    std::string pole_id;
    double latitude = 0;
    double longitude = 0;
    std::optional<RiskClass> fire_risk;
    std::optional<double> fire_accuracy;
    std::optional<RiskClass> topple_risk;
    std::optional<double> fragility;
    std::optional<double> clearance_m;
    std::optional<double> tilt_deg;
    std::optional<double> cost_metric;
};

/// Combines whichever stage outputs are present. Tilt comes from the corridor
/// when available, else from the image inclination. Fire risk uses the share
/// of proximity measurements (depth estimates and corridor clearance) that
/// meet their configured thresholds. Throws when every input is absent.
PoleRiskAssessment assess_pole(const PoleRecord& pole, const std::optional<InclinationResult>& inclination,
                               const std::optional<CorridorResult>& corridor, std::span<const DepthEstimate> depth,
                               const RiskConfig& config);

}  // namespace polerisk
