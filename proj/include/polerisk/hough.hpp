#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "polerisk/geometry.hpp"
#include "polerisk/image.hpp"

namespace polerisk {

/// Vote grid over the normal parameterisation rho = x*cos(theta) + y*sin(theta),
/// theta in [0, 180). Stored theta-major.
class HoughAccumulator {
public:
    HoughAccumulator(std::size_t width, std::size_t height, double theta_res_deg, double rho_res);

    std::size_t theta_bins() const noexcept { return theta_bins_; }
    std::size_t rho_bins() const noexcept { return rho_bins_; }
    double theta_res() const noexcept { return theta_res_; }
    double rho_res() const noexcept { return rho_res_; }
    double rho_max() const noexcept { return rho_max_; }
    /// Bin index of rho = 0.
    std::size_t rho_offset() const noexcept { return rho_offset_; }

    double theta_of(std::size_t t) const { return static_cast<double>(t) * theta_res_; }
    double rho_of(std::size_t r) const {
        return (static_cast<double>(r) - static_cast<double>(rho_offset_)) * rho_res_;
    }

    std::uint32_t votes(std::size_t t, std::size_t r) const { return votes_[t * rho_bins_ + r]; }
    std::uint32_t& votes(std::size_t t, std::size_t r) { return votes_[t * rho_bins_ + r]; }
    const std::vector<std::uint32_t>& grid() const noexcept { return votes_; }
    std::vector<std::uint32_t>& grid() noexcept { return votes_; }

    std::uint64_t total_votes() const;

    const std::vector<double>& cos_table() const noexcept { return cos_; }
    const std::vector<double>& sin_table() const noexcept { return sin_; }

    /// Element-wise sum of a partial accumulator with identical geometry.
    void merge(const HoughAccumulator& other);

private:
    std::size_t theta_bins_;
    std::size_t rho_bins_;
    double theta_res_;
    double rho_res_;
    double rho_max_;
    std::size_t rho_offset_;
    std::vector<double> cos_;
    std::vector<double> sin_;
    std::vector<std::uint32_t> votes_;
};

struct HoughLine {
    double rho = 0;    // pixels, signed
    double theta = 0;  // degrees in [0, 180)
    std::uint32_t votes = 0;

    friend bool operator==(const HoughLine&, const HoughLine&) = default;
};

struct InclinationResult {
    double inclination_deg = 90;
    double deflection_deg = 0;
    std::vector<std::pair<double, double>> per_view;  // (heading, inclination)
    std::size_t n_views_used = 0;

    /// Builds a result whose two angles sum to exactly 90.
    static InclinationResult from_inclination(double inclination_deg);
};

HoughAccumulator hough_accumulate(const EdgeMask& edges, double theta_res_deg = 0.25, double rho_res = 1.0);

struct PeakOptions {
    std::size_t max_peaks = 10;
    std::uint32_t min_votes = 1;
    std::size_t nms_theta = 5;  // half-width in theta bins
    std::size_t nms_rho = 5;    // half-width in rho bins
};

/// Greedy peak picking with neighbourhood suppression; theta wraps at 180 deg
/// with a rho sign flip. Sorted by votes desc, then theta asc, then rho asc.
std::vector<HoughLine> extract_peaks(const HoughAccumulator& acc, const PeakOptions& options = {});

/// Angle between the line and the vertical axis, in [0, 90].
double line_deflection(const HoughLine& line);

/// Angle between the line and the horizontal: arctan(vertical extent / horizontal extent).
double inclination_angle(const HoughLine& line);

/// Near-vertical line closest to the ROI centre; ties go to more votes.
/// Throws Error("no pole-like line") when nothing passes the deflection filter.
HoughLine select_pole_line(std::span<const HoughLine> lines, const BBox& roi, double max_candidate_deflection = 30.0);

/// Median of the per-view inclinations. Throws on empty input.
InclinationResult aggregate_pole_inclination(std::span<const std::pair<double, double>> per_view);

/// Shifts a line found in a crop at (x0, y0) back to full-image coordinates.
HoughLine translate_line(const HoughLine& line, double x0, double y0);

}  // namespace polerisk
