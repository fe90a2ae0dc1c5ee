#include "polerisk/depth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

#include "pnm_header.hpp"
#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"
#include "polerisk/imaging.hpp"

namespace polerisk {

namespace {

DepthMap load_pgm16(std::span<const std::uint8_t> bytes) {
    const auto h = detail::parse_pnm_header(bytes);
    if (h.magic != "P5") throw ParseError::at_offset("bad magic '" + h.magic + "', expected P5", 0);
    const std::size_t bps = h.maxval > 255 ? 2 : 1;
    const std::size_t count = h.width * h.height;
    if (bytes.size() - h.data_offset < count * bps) throw ParseError::at_offset("truncated payload", bytes.size());
    DepthMap map{h.width, h.height, std::vector<double>(count)};
    const std::uint8_t* p = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < count; ++i) {
        map.values[i] = bps == 2 ? static_cast<double>((std::uint32_t{p[2 * i]} << 8) | p[2 * i + 1]) : p[i];
    }
    return map;
}

DepthMap load_pfm(std::span<const std::uint8_t> bytes) {
    detail::HeaderTokenizer tok(bytes);
    const std::string magic = tok.next("magic");
    if (magic != "Pf") throw ParseError::at_offset("bad magic '" + magic + "', expected Pf", 0);
    const std::size_t width = tok.unsigned_value("width");
    const std::size_t height = tok.unsigned_value("height");
    const std::size_t scale_at = tok.offset();
    const auto scale = csv::parse_double(tok.next("scale"));
    if (!scale || *scale == 0.0) throw ParseError::at_offset("invalid scale", scale_at);
    tok.single_whitespace();
    const std::size_t start = tok.offset();
    const std::size_t count = width * height;
    if (bytes.size() - start < count * 4) throw ParseError::at_offset("truncated payload", bytes.size());

    const bool little = *scale < 0;
    DepthMap map{width, height, std::vector<double>(count)};
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* b = bytes.data() + start + 4 * i;
        const std::uint32_t raw = little ? (std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
                                            std::uint32_t{b[3]} << 24)
                                         : (std::uint32_t{b[3]} | std::uint32_t{b[2]} << 8 | std::uint32_t{b[1]} << 16 |
                                            std::uint32_t{b[0]} << 24);
        const float v = std::bit_cast<float>(raw);
        if (!std::isfinite(v) || v < 0.0f) {
            throw ParseError::at_offset("depth sample must be finite and non-negative", start + 4 * i);
        }
        // PFM scanlines run bottom to top.
        const std::size_t row = height - 1 - i / width;
        map.values[row * width + i % width] = v;
    }
    return map;
}

}  // namespace

DepthMap load_depth_map(std::span<const std::uint8_t> bytes, DepthFormat format) {
    return format == DepthFormat::pgm16 ? load_pgm16(bytes) : load_pfm(bytes);
}

std::vector<std::uint8_t> encode_pfm(const DepthMap& map, bool little_endian) {
    const std::string header = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n" +
                               (little_endian ? "-1.0" : "1.0") + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (std::size_t r = map.height; r-- > 0;) {
        for (std::size_t x = 0; x < map.width; ++x) {
            const auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(map.at(x, r)));
            for (int k = 0; k < 4; ++k) {
                const int shift = little_endian ? 8 * k : 8 * (3 - k);
                out.push_back(static_cast<std::uint8_t>(raw >> shift));
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_pgm16(const DepthMap& map) {
    const std::string header = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : map.values) {
        const auto s = static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0));
        out.push_back(static_cast<std::uint8_t>(s >> 8));
        out.push_back(static_cast<std::uint8_t>(s & 0xFF));
    }
    return out;
}

double region_depth(const DepthMap& map, const BBox& box, RegionStatistic statistic) {
    Crop c;
    try {
        c = crop_window(map.width, map.height, box, 0.0);
    } catch (const Error&) {
        throw Error("region_depth: box does not intersect the depth map");
    }
    std::vector<double> samples;
    samples.reserve(c.width * c.height);
    for (std::size_t y = c.y0; y < c.y0 + c.height; ++y) {
        for (std::size_t x = c.x0; x < c.x0 + c.width; ++x) samples.push_back(map.at(x, y));
    }
    switch (statistic) {
        case RegionStatistic::min: return *std::min_element(samples.begin(), samples.end());
        case RegionStatistic::mean:
            return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
        case RegionStatistic::median: break;
    }
    const std::size_t n = samples.size();
    std::sort(samples.begin(), samples.end());
    return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

double relative_depth(double pole_depth, double vegetation_depth) {
    if (pole_depth < 0 || vegetation_depth < 0) throw Error("relative_depth: depths must be non-negative");
    return std::abs(vegetation_depth - pole_depth);
}

DepthEstimate estimate_depth(const DepthMap& map, std::string pole_id, const BBox& pole_box, const BBox& veg_box,
                             std::optional<double> actual_distance_m, RegionStatistic statistic) {
    const double pole = region_depth(map, pole_box, statistic);
    const double veg = region_depth(map, veg_box, statistic);
    return {std::move(pole_id), relative_depth(pole, veg), actual_distance_m, pole_box, veg_box};
}

std::string depth_estimate_json(const DepthEstimate& e) {
    auto box = [](const BBox& b) { return nlohmann::json::array({b.x_min, b.y_min, b.x_max, b.y_max}); };
    nlohmann::json j = {
        {"pole_id", e.pole_id},
        {"relative_depth", e.relative_depth},
        {"actual_distance_m", e.actual_distance_m ? nlohmann::json(*e.actual_distance_m) : nlohmann::json(nullptr)},
        {"pole_box", box(e.pole_box)},
        {"vegetation_box", box(e.vegetation_box)},
    };
    return j.dump();
}

DepthAccuracyReport depth_accuracy(std::span<const DepthEstimate> estimates, double threshold, AccuracyMode mode) {
    if (estimates.empty()) throw Error("depth_accuracy: no estimates");
    if (!(threshold > 0)) throw Error("depth_accuracy: threshold must be positive");
    DepthAccuracyReport report{threshold, 0, estimates.size(), 0.0, mode};
    for (const auto& e : estimates) {
        bool within = false;
        if (mode == AccuracyMode::clearance) {
            within = e.relative_depth >= threshold;
        } else {
            if (!e.actual_distance_m) throw Error("depth_accuracy: error mode needs an actual distance for " + e.pole_id);
            within = std::abs(e.relative_depth - *e.actual_distance_m) <= threshold;
        }
        if (within) ++report.n_within;
    }
    report.accuracy = static_cast<double>(report.n_within) / static_cast<double>(report.n_total);
    return report;
}

DepthCalibration calibrate_depth(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw Error("calibrate_depth: need at least two pairs");
    const auto n = static_cast<double>(pairs.size());
    double mean_d = 0;
    double mean_a = 0;
    for (const auto& [d, a] : pairs) {
        mean_d += d;
        mean_a += a;
    }
    mean_d /= n;
    mean_a /= n;
    double sdd = 0;
    double sda = 0;
    double saa = 0;
    for (const auto& [d, a] : pairs) {
        sdd += (d - mean_d) * (d - mean_d);
        sda += (d - mean_d) * (a - mean_a);
        saa += (a - mean_a) * (a - mean_a);
    }
    if (sdd == 0.0) throw Error("calibrate_depth: degenerate fit, all relative depths identical");
    DepthCalibration fit;
    fit.scale = sda / sdd;
    fit.offset = mean_a - fit.scale * mean_d;
    double ss_res = 0;
    for (const auto& [d, a] : pairs) {
        const double r = a - fit.apply(d);
        ss_res += r * r;
    }
    fit.r_squared = saa > 0 ? 1.0 - ss_res / saa : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

}  // namespace polerisk
