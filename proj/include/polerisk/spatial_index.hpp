#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "polerisk/geometry.hpp"

namespace polerisk {

/// Uniform hash grid over a point set. Points are stored cell-sorted as
/// structure-of-arrays so each cell is one contiguous block for the SIMD
/// distance kernels. Queries return indices into the original point span.
class SpatialIndex {
public:
    SpatialIndex(std::span<const Vec3> points, double cell);

    std::size_t size() const noexcept { return order_.size(); }
    double cell() const noexcept { return cell_; }
    std::size_t occupied_cells() const noexcept { return cells_.size(); }

    /// Indices i with |points[i] - p|^2 <= r^2, ascending. A radius up to
    /// `cell()` touches at most 27 cells.
    void radius_query(Vec3 p, double r, std::vector<std::uint32_t>& out) const;
    std::vector<std::uint32_t> radius_query(Vec3 p, double r) const;

    /// Number of cells a radius query with this radius visits.
    std::size_t cells_examined(Vec3 p, double r) const;

    struct Nearest {
        double d2 = std::numeric_limits<double>::infinity();
        std::uint32_t index = 0;
        bool found() const { return d2 != std::numeric_limits<double>::infinity(); }
    };

    /// Exact nearest neighbour by expanding cell rings. Candidates at squared
    /// distance >= `bound_d2` may be skipped, which lets callers prune with a
    /// running best; ties resolve to the lowest original index.
    Nearest nearest(Vec3 p, double bound_d2 = std::numeric_limits<double>::infinity()) const;

private:
    struct Key {
        std::int64_t x;
        std::int64_t y;
        std::int64_t z;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
            h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
            h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };
    struct Range {
        std::uint32_t begin;
        std::uint32_t end;
    };

    Key key_of(double x, double y, double z) const;
    std::int64_t coord(double v) const;
    void scan_cell(const Range& range, Vec3 p, Nearest& best) const;

    double cell_;
    std::unordered_map<Key, Range, KeyHash> cells_;
    std::vector<Key> cell_keys_;  // occupied cells in storage order
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> zs_;
    std::vector<std::uint32_t> order_;  // storage slot -> original index
    Key lo_{0, 0, 0};
    Key hi_{0, 0, 0};
};

}  // namespace polerisk
