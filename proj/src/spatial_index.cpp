#include "polerisk/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polerisk/error.hpp"
#include "polerisk/simd/kernels.hpp"

namespace polerisk {

namespace {
// Widens query boxes so rounding in the bound never excludes a point whose
// rounded squared distance passes the radius test.
constexpr double kSlack = 1e-9;
}  // namespace

SpatialIndex::SpatialIndex(std::span<const Vec3> points, double cell) : cell_(cell) {
    if (!(cell > 0.0) || !std::isfinite(cell)) throw Error("SpatialIndex: cell size must be positive");
    if (points.size() > std::numeric_limits<std::uint32_t>::max()) throw Error("SpatialIndex: too many points");
    std::vector<Key> keys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) keys[i] = key_of(points[i].x, points[i].y, points[i].z);

    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0u);
    std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Key& ka = keys[a];
        const Key& kb = keys[b];
        if (ka.x != kb.x) return ka.x < kb.x;
        if (ka.y != kb.y) return ka.y < kb.y;
        if (ka.z != kb.z) return ka.z < kb.z;
        return a < b;
    });

    xs_.resize(points.size());
    ys_.resize(points.size());
    zs_.resize(points.size());
    for (std::size_t s = 0; s < order_.size(); ++s) {
        const Vec3& p = points[order_[s]];
        xs_[s] = p.x;
        ys_[s] = p.y;
        zs_[s] = p.z;
        const Key& k = keys[order_[s]];
        if (s == 0 || !(k == keys[order_[s - 1]])) {
            cells_.emplace(k, Range{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s + 1)});
            cell_keys_.push_back(k);
        } else {
            cells_[k].end = static_cast<std::uint32_t>(s + 1);
        }
        if (s == 0) {
            lo_ = hi_ = k;
        } else {
            lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
            hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
        }
    }
}

std::int64_t SpatialIndex::coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

SpatialIndex::Key SpatialIndex::key_of(double x, double y, double z) const { return {coord(x), coord(y), coord(z)}; }

void SpatialIndex::radius_query(Vec3 p, double r, std::vector<std::uint32_t>& out) const {
    out.clear();
    if (order_.empty() || r < 0) return;
    const double reach = r * (1.0 + kSlack) + kSlack;
    const Key a = key_of(p.x - reach, p.y - reach, p.z - reach);
    const Key b = key_of(p.x + reach, p.y + reach, p.z + reach);
    const double r2 = r * r;
    const auto& k = simd::kernels();
    std::vector<std::uint32_t> hits;
    for (std::int64_t cx = std::max(a.x, lo_.x); cx <= std::min(b.x, hi_.x); ++cx) {
        for (std::int64_t cy = std::max(a.y, lo_.y); cy <= std::min(b.y, hi_.y); ++cy) {
            for (std::int64_t cz = std::max(a.z, lo_.z); cz <= std::min(b.z, hi_.z); ++cz) {
                const auto it = cells_.find(Key{cx, cy, cz});
                if (it == cells_.end()) continue;
                const Range rg = it->second;
                hits.resize(rg.end - rg.begin);
                const std::size_t n = k.within_radius(p.x, p.y, p.z, xs_.data() + rg.begin, ys_.data() + rg.begin,
                                                      zs_.data() + rg.begin, rg.end - rg.begin, r2, hits.data());
                for (std::size_t h = 0; h < n; ++h) out.push_back(order_[rg.begin + hits[h]]);
            }
        }
    }
    std::sort(out.begin(), out.end());
}

std::vector<std::uint32_t> SpatialIndex::radius_query(Vec3 p, double r) const {
    std::vector<std::uint32_t> out;
    radius_query(p, r, out);
    return out;
}

std::size_t SpatialIndex::cells_examined(Vec3 p, double r) const {
    const double reach = r * (1.0 + kSlack) + kSlack;
    const Key a = key_of(p.x - reach, p.y - reach, p.z - reach);
    const Key b = key_of(p.x + reach, p.y + reach, p.z + reach);
    return static_cast<std::size_t>((b.x - a.x + 1) * (b.y - a.y + 1) * (b.z - a.z + 1));
}

void SpatialIndex::scan_cell(const Range& range, Vec3 p, Nearest& best) const {
    const auto hit = simd::kernels().nearest(p.x, p.y, p.z, xs_.data() + range.begin, ys_.data() + range.begin,
                                             zs_.data() + range.begin, range.end - range.begin);
    if (hit.d2 == std::numeric_limits<double>::infinity()) return;
    const std::uint32_t original = order_[range.begin + hit.index];
    if (hit.d2 < best.d2 || (hit.d2 == best.d2 && original < best.index)) {
        // Within a cell the kernel returns the lowest slot; slots are sorted by
        // original index inside a cell, so that is also the lowest original index.
        best.d2 = hit.d2;
        best.index = original;
    }
}

SpatialIndex::Nearest SpatialIndex::nearest(Vec3 p, double bound_d2) const {
    Nearest best;
    if (order_.empty()) return best;
    const Key c = key_of(p.x, p.y, p.z);

    // Lower bound on the distance from p to any cell at Chebyshev ring k: the
    // ring lies outside the (2k-1)^3 block around p's cell, so every point in
    // it is at least (k-1)*cell plus p's distance to its own cell face away.
    const double fx = p.x - static_cast<double>(c.x) * cell_;
    const double fy = p.y - static_cast<double>(c.y) * cell_;
    const double fz = p.z - static_cast<double>(c.z) * cell_;
    const double face = std::max(0.0, std::min({fx, fy, fz, cell_ - fx, cell_ - fy, cell_ - fz}));

    const std::int64_t max_ring =
        std::max({std::abs(c.x - lo_.x), std::abs(c.x - hi_.x), std::abs(c.y - lo_.y), std::abs(c.y - hi_.y),
                  std::abs(c.z - lo_.z), std::abs(c.z - hi_.z)});
    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
        if (ring > 0) {
            const double gap = std::max(0.0, static_cast<double>(ring - 1) * cell_ + face) * (1.0 - kSlack);
            const double gap2 = gap * gap;
            if (gap2 > best.d2 || (!best.found() && gap2 >= bound_d2)) break;
        }
        const auto side = static_cast<double>(2 * ring + 1);
        if (side * side * side > 4.0 * static_cast<double>(cells_.size())) {
            // The remaining rings hold more empty slots than there are occupied
            // cells: finish with a pruned pass over every occupied cell.
            for (const Key& k : cell_keys_) {
                const std::int64_t cheb = std::max({std::abs(k.x - c.x), std::abs(k.y - c.y), std::abs(k.z - c.z)});
                if (cheb < ring) continue;
                const double dx = std::max({0.0, static_cast<double>(k.x) * cell_ - p.x, p.x - static_cast<double>(k.x + 1) * cell_});
                const double dy = std::max({0.0, static_cast<double>(k.y) * cell_ - p.y, p.y - static_cast<double>(k.y + 1) * cell_});
                const double dz = std::max({0.0, static_cast<double>(k.z) * cell_ - p.z, p.z - static_cast<double>(k.z + 1) * cell_});
                const double box2 = (dx * dx + dy * dy + dz * dz) * (1.0 - kSlack);
                if (box2 > best.d2 || (!best.found() && box2 >= bound_d2)) continue;
                scan_cell(cells_.at(k), p, best);
            }
            break;
        }
        for (std::int64_t dx = -ring; dx <= ring; ++dx) {
            for (std::int64_t dy = -ring; dy <= ring; ++dy) {
                const bool edge = std::abs(dx) == ring || std::abs(dy) == ring;
                for (std::int64_t dz = -ring; dz <= ring; dz += (edge ? 1 : std::max<std::int64_t>(1, 2 * ring))) {
                    const auto it = cells_.find(Key{c.x + dx, c.y + dy, c.z + dz});
                    if (it != cells_.end()) scan_cell(it->second, p, best);
                }
            }
        }
    }
    if (best.found() && best.d2 >= bound_d2) return Nearest{};
    return best;
}

}  // namespace polerisk
