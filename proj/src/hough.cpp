#include "polerisk/hough.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "polerisk/error.hpp"
#include "polerisk/simd/kernels.hpp"

namespace polerisk {

HoughAccumulator::HoughAccumulator(std::size_t width, std::size_t height, double theta_res_deg, double rho_res)
    : theta_res_(theta_res_deg), rho_res_(rho_res) {
    if (width == 0 || height == 0) throw Error("hough_accumulate: empty mask dimensions");
    if (!(theta_res_deg > 0.0 && theta_res_deg <= 10.0)) throw Error("hough_accumulate: theta_res must be in (0, 10]");
    if (!(rho_res > 0.0)) throw Error("hough_accumulate: rho_res must be positive");
    theta_bins_ = static_cast<std::size_t>(std::ceil(180.0 / theta_res_deg - 1e-9));
    rho_max_ = std::hypot(static_cast<double>(width), static_cast<double>(height));
    rho_offset_ = static_cast<std::size_t>(std::ceil(rho_max_ / rho_res));
    rho_bins_ = 2 * rho_offset_ + 1;
    cos_.resize(theta_bins_);
    sin_.resize(theta_bins_);
    for (std::size_t t = 0; t < theta_bins_; ++t) {
        const double rad = theta_of(t) * std::numbers::pi / 180.0;
        cos_[t] = std::cos(rad);
        sin_[t] = std::sin(rad);
    }
    votes_.assign(theta_bins_ * rho_bins_, 0);
}

std::uint64_t HoughAccumulator::total_votes() const {
    return std::accumulate(votes_.begin(), votes_.end(), std::uint64_t{0});
}

void HoughAccumulator::merge(const HoughAccumulator& other) {
    if (other.theta_bins_ != theta_bins_ || other.rho_bins_ != rho_bins_) {
        throw Error("HoughAccumulator::merge: geometry mismatch");
    }
    for (std::size_t i = 0; i < votes_.size(); ++i) votes_[i] += other.votes_[i];
}

InclinationResult InclinationResult::from_inclination(double inclination_deg) {
    InclinationResult r;
    const double clamped = std::clamp(inclination_deg, 0.0, 90.0);
    // 90 - d is exact for d in [45, 90], so re-deriving the inclination makes
    // the pair sum to exactly 90 in floating point.
    if (clamped >= 45.0) {
        r.inclination_deg = clamped;
        r.deflection_deg = 90.0 - clamped;
    } else {
        r.deflection_deg = 90.0 - clamped;
        r.inclination_deg = 90.0 - r.deflection_deg;
    }
    return r;
}

HoughAccumulator hough_accumulate(const EdgeMask& edges, double theta_res_deg, double rho_res) {
    HoughAccumulator acc(edges.width(), edges.height(), theta_res_deg, rho_res);
    const auto& k = simd::kernels();
    const std::size_t nt = acc.theta_bins();
    const std::size_t nr = acc.rho_bins();
    std::vector<std::int32_t> bins(nt);
    auto& grid = acc.grid();
    const double inv = 1.0 / rho_res;
    const auto offset = static_cast<double>(acc.rho_offset());
    for (std::size_t y = 0; y < edges.height(); ++y) {
        for (std::size_t x = 0; x < edges.width(); ++x) {
            if (!edges.at(x, y)) continue;
            k.hough_bins(static_cast<double>(x), static_cast<double>(y), acc.cos_table().data(),
                         acc.sin_table().data(), nt, inv, offset, bins.data());
            for (std::size_t t = 0; t < nt; ++t) ++grid[t * nr + static_cast<std::size_t>(bins[t])];
        }
    }
    return acc;
}

std::vector<HoughLine> extract_peaks(const HoughAccumulator& acc, const PeakOptions& options) {
    if (options.max_peaks == 0) throw Error("extract_peaks: max_peaks must be at least 1");
    std::vector<std::uint32_t> work = acc.grid();
    const std::size_t nt = acc.theta_bins();
    const std::size_t nr = acc.rho_bins();
    const auto mirror = [&](std::size_t r) { return 2 * acc.rho_offset() - r; };
    const std::uint32_t floor_votes = std::max<std::uint32_t>(1, options.min_votes);

    std::vector<HoughLine> peaks;
    while (peaks.size() < options.max_peaks) {
        // First maximum in (theta asc, rho asc) order.
        const auto it = std::max_element(work.begin(), work.end());
        if (it == work.end() || *it < floor_votes) break;
        const auto idx = static_cast<std::size_t>(it - work.begin());
        const std::size_t t = idx / nr;
        const std::size_t r = idx % nr;
        peaks.push_back({acc.rho_of(r), acc.theta_of(t), *it});

        const auto w_t = static_cast<std::ptrdiff_t>(options.nms_theta);
        const auto w_r = static_cast<std::ptrdiff_t>(options.nms_rho);
        for (std::ptrdiff_t dt = -w_t; dt <= w_t; ++dt) {
            auto tt = static_cast<std::ptrdiff_t>(t) + dt;
            bool flip = false;
            if (tt < 0) {
                tt += static_cast<std::ptrdiff_t>(nt);
                flip = true;
            } else if (tt >= static_cast<std::ptrdiff_t>(nt)) {
                tt -= static_cast<std::ptrdiff_t>(nt);
                flip = true;
            }
            if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(nt)) continue;
            const std::size_t centre = flip ? mirror(r) : r;
            for (std::ptrdiff_t dr = -w_r; dr <= w_r; ++dr) {
                const auto rr = static_cast<std::ptrdiff_t>(centre) + dr;
                if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(nr)) continue;
                work[static_cast<std::size_t>(tt) * nr + static_cast<std::size_t>(rr)] = 0;
            }
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const HoughLine& a, const HoughLine& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });
    return peaks;
}

double line_deflection(const HoughLine& line) {
    double theta = std::fmod(line.theta, 180.0);
    if (theta < 0) theta += 180.0;
    return std::min(theta, 180.0 - theta);
}

double inclination_angle(const HoughLine& line) { return 90.0 - line_deflection(line); }

HoughLine select_pole_line(std::span<const HoughLine> lines, const BBox& roi, double max_candidate_deflection) {
    if (lines.empty()) throw Error("select_pole_line: empty line list");
    const HoughLine* best = nullptr;
    double best_distance = 0;
    for (const auto& line : lines) {
        if (line_deflection(line) > max_candidate_deflection) continue;
        const double rad = line.theta * std::numbers::pi / 180.0;
        const double distance =
            std::abs(roi.center_x() * std::cos(rad) + roi.center_y() * std::sin(rad) - line.rho);
        if (!best || distance < best_distance || (distance == best_distance && line.votes > best->votes)) {
            best = &line;
            best_distance = distance;
        }
    }
    if (!best) throw Error("no pole-like line");
    return *best;
}

InclinationResult aggregate_pole_inclination(std::span<const std::pair<double, double>> per_view) {
    if (per_view.empty()) throw Error("aggregate_pole_inclination: no views with a detected line");
    std::vector<double> values;
    values.reserve(per_view.size());
    for (const auto& [heading, inclination] : per_view) values.push_back(inclination);
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    InclinationResult result = InclinationResult::from_inclination(median);
    result.per_view.assign(per_view.begin(), per_view.end());
    result.n_views_used = n;
    return result;
}

HoughLine translate_line(const HoughLine& line, double x0, double y0) {
    const double rad = line.theta * std::numbers::pi / 180.0;
    HoughLine out = line;
    out.rho = line.rho + x0 * std::cos(rad) + y0 * std::sin(rad);
    return out;
}

}  // namespace polerisk
