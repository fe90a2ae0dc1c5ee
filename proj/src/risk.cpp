#include "polerisk/risk.hpp"

#include <algorithm>
#include <cmath>

#include "polerisk/error.hpp"

namespace polerisk {

void RiskThresholds::validate() const {
    if (!std::isfinite(thresh_low) || !std::isfinite(thresh_mod) || !(thresh_low > thresh_mod)) {
        throw Error("invalid risk thresholds: thresh_low must exceed thresh_mod");
    }
}

std::string_view to_string(RiskClass c) {
    switch (c) {
        case RiskClass::Low: return "Low";
        case RiskClass::Moderate: return "Moderate";
        case RiskClass::High: return "High";
    }
    return "High";
}

std::optional<RiskClass> parse_risk_class(std::string_view text) {
    for (RiskClass c : {RiskClass::Low, RiskClass::Moderate, RiskClass::High}) {
        if (text == to_string(c)) return c;
    }
    return std::nullopt;
}

namespace {

RiskClass classify(double value, const RiskThresholds& t) {
    t.validate();
    if (value > t.thresh_low) return RiskClass::Low;
    if (value > t.thresh_mod) return RiskClass::Moderate;
    return RiskClass::High;
}

double saturate(double value, double ref) { return std::min(value / ref, 1.0); }

}  // namespace

RiskClass fire_risk(double accuracy, const RiskThresholds& t) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error("fire_risk: accuracy must be in [0,1]");
    return classify(accuracy, t);
}

RiskClass topple_risk(double fragility_value, const RiskThresholds& t) {
    if (!(fragility_value >= 0.0 && fragility_value <= 1.0)) throw Error("topple_risk: fragility must be in [0,1]");
    return classify(fragility_value, t);
}

void FragilityWeights::validate() const {
    for (double w : {w_tilt, w_age, w_material, w_wind}) {
        if (!(w >= 0.0)) throw Error("fragility weights must be non-negative");
    }
    if (std::abs(w_tilt + w_age + w_material + w_wind - 1.0) > 1e-9) throw Error("fragility weights must sum to 1");
    if (!(age_cap_years > 0 && wind_ref_ms > 0 && tilt_ref_deg > 0)) {
        throw Error("fragility normalisers must be positive");
    }
    for (const auto& [m, f] : material_factor) {
        if (!(f >= 0.0 && f <= 1.0)) throw Error("material factor for " + std::string(to_string(m)) + " outside [0,1]");
    }
}

double fragility(const FragilityInput& in, const FragilityWeights& w) {
    w.validate();
    if (!(in.tilt_deg >= 0.0 && in.tilt_deg <= 90.0)) throw Error("fragility: tilt must be in [0,90]");
    if (!(in.age_years >= 0.0)) throw Error("fragility: age must be non-negative");
    if (!(in.wind_speed_ms >= 0.0)) throw Error("fragility: wind speed must be non-negative");
    const auto factor = w.material_factor.find(in.material);
    if (factor == w.material_factor.end()) {
        throw Error("fragility: no factor for material '" + std::string(to_string(in.material)) + "'");
    }
    const double value = w.w_tilt * saturate(in.tilt_deg, w.tilt_ref_deg) +
                         w.w_age * saturate(in.age_years, w.age_cap_years) + w.w_material * factor->second +
                         w.w_wind * saturate(in.wind_speed_ms, w.wind_ref_ms);
    return std::clamp(value, 0.0, 1.0);
}

double risk_class_score(RiskClass c, const ClassScores& scores) {
    switch (c) {
        case RiskClass::Low: return scores.low;
        case RiskClass::Moderate: return scores.moderate;
        case RiskClass::High: return scores.high;
    }
    return scores.high;
}

double cost_metric(double implementation_cost, double fire_risk_score) {
    if (!(fire_risk_score > 0.0)) throw Error("cost_metric: fire risk score must be positive");
    return implementation_cost / fire_risk_score;
}

PoleRiskAssessment assess_pole(const PoleRecord& pole, const std::optional<InclinationResult>& inclination,
                               const std::optional<CorridorResult>& corridor, std::span<const DepthEstimate> depth,
                               const RiskConfig& config) {
    if (!inclination && !corridor && depth.empty()) throw Error("assess_pole: no analysis input for " + pole.pole_id);

    PoleRiskAssessment a;
    a.pole_id = pole.pole_id;
    a.latitude = pole.latitude;
    a.longitude = pole.longitude;

    if (corridor) {
        a.tilt_deg = corridor->tilt_deg;
        if (corridor->clearance) a.clearance_m = corridor->clearance->clearance_m;
    } else if (inclination) {
        a.tilt_deg = inclination->deflection_deg;
    }

    if (a.tilt_deg) {
        // Unknown age counts as fully aged.
        const FragilityInput in{*a.tilt_deg, pole.age_years.value_or(config.weights.age_cap_years), pole.material,
                                config.wind_speed_ms};
        a.fragility = fragility(in, config.weights);
        a.topple_risk = topple_risk(*a.fragility, config.topple);
    }

    std::size_t within = 0;
    std::size_t total = 0;
    if (!depth.empty() && config.depth_threshold) {
        const auto report = depth_accuracy(depth, *config.depth_threshold, AccuracyMode::clearance);
        within += report.n_within;
        total += report.n_total;
    }
    if (a.clearance_m && config.clearance_threshold_m) {
        within += *a.clearance_m >= *config.clearance_threshold_m ? 1 : 0;
        total += 1;
    }
    if (total > 0) {
        a.fire_accuracy = static_cast<double>(within) / static_cast<double>(total);
        a.fire_risk = fire_risk(*a.fire_accuracy, config.fire);
        if (config.implementation_cost) {
            a.cost_metric = cost_metric(*config.implementation_cost, risk_class_score(*a.fire_risk, config.class_scores));
        }
    }
    return a;
}

}  // namespace polerisk
