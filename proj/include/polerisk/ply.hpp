#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "polerisk/geometry.hpp"

namespace polerisk {

struct PointCloud {
    std::vector<Vec3> points;
    /// Empty, or one RGB triple per point.
    std::vector<std::array<std::uint8_t, 3>> colors;

    bool has_colors() const { return !colors.empty(); }
    std::size_t size() const { return points.size(); }

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

enum class PlyFormat { ascii, binary_little_endian };

/// Reads `ply` files in ascii 1.0 or binary_little_endian 1.0. The vertex
/// element must carry x, y, z; red/green/blue are optional and unknown
/// properties (including other elements and list properties) are skipped.
/// Header problems report the header line; body problems the byte offset.
PointCloud parse_ply(std::span<const std::uint8_t> bytes);

/// Writes x/y/z as float64 (exact round trip) plus uchar colours when present.
std::vector<std::uint8_t> serialize_ply(const PointCloud& cloud, PlyFormat format);

}  // namespace polerisk
