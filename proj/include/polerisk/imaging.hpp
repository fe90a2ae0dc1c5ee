#pragma once

#include <cstddef>

#include "polerisk/geometry.hpp"
#include "polerisk/image.hpp"

namespace polerisk {

/// Luminance 0.299R + 0.587G + 0.114B scaled to [0,1].
GrayRaster to_grayscale(const RgbImage& rgb);

/// Separable 5x5 Gaussian with clamped borders.
GrayRaster gaussian_blur5(const GrayRaster& img, double sigma);

/// 3x3 Sobel with replicated borders. Requires at least 3x3 pixels.
GradientField sobel_gradients(const GrayRaster& img);

struct CannyConfig {
    double low = 0.1;   // fraction of the largest possible Sobel magnitude
    double high = 0.2;
    double sigma = 1.4;
    bool blur = true;
};

/// Largest Sobel magnitude for inputs in [0,1]; thresholds are relative to it.
inline constexpr double kSobelMagnitudeScale = 5.656854249492380195;  // 4*sqrt(2)

enum class GradientDirection { horizontal, diagonal_down, vertical, diagonal_up };

/// Gradient orientation quantised to 4 bins. Symmetric under (gx,gy) -> (-gx,-gy).
GradientDirection quantize_direction(double gx, double gy);

/// Non-maximum suppression over `magnitude` (keeps pixels not smaller than both
/// neighbours along the gradient direction), then hysteresis with
/// 8-connectivity. Exposed separately for testing.
EdgeMask suppress_and_link(const GradientField& g, double low_abs, double high_abs);

EdgeMask canny_edges(const GrayRaster& img, const CannyConfig& config = {});
EdgeMask canny_edges(const GrayRaster& img, double low, double high);

/// Integer pixel window inside a larger image.
struct Crop {
    std::size_t x0 = 0;
    std::size_t y0 = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    double to_full_x(double x) const { return x + static_cast<double>(x0); }
    double to_full_y(double y) const { return y + static_cast<double>(y0); }
};

/// Box expanded by `margin` and clipped to the image, rounded outwards to whole
/// pixels. Throws when the box misses the image.
Crop crop_window(std::size_t width, std::size_t height, const BBox& box, double margin);

struct GrayCrop {
    GrayRaster raster;
    Crop window;
};

struct MaskCrop {
    EdgeMask mask;
    Crop window;
};

GrayCrop crop_roi(const GrayRaster& img, const BBox& box, double margin);
MaskCrop crop_roi(const EdgeMask& mask, const BBox& box, double margin);

}  // namespace polerisk
