#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polerisk/image.hpp"

namespace polerisk {

enum class Material { wood, steel, concrete, composite, unknown };

std::string_view to_string(Material m);
/// Case-insensitive; anything unrecognised (including empty) is `unknown`.
Material parse_material(std::string_view text);

struct PoleRecord {
    std::string pole_id;
    double latitude = 0;
    double longitude = 0;
    std::optional<double> age_years;
    Material material = Material::unknown;
    std::optional<double> height_m;
    std::optional<double> circumference_m;

    /// Poles older than 50 years form the aged cohort.
    bool is_aged() const { return age_years && *age_years > 50.0; }

    friend bool operator==(const PoleRecord&, const PoleRecord&) = default;
};

inline constexpr std::string_view kCatalogHeader =
    "pole_id,lat,lon,age_years,material,height_m,circumference_m";

/// Parses the pole catalog CSV. Throws ParseError naming the 1-based line.
std::vector<PoleRecord> parse_pole_catalog(std::string_view csv_text);
std::string serialize_pole_catalog(std::span<const PoleRecord> poles);

struct CaptureProfile {
    std::uint32_t image_width = 0;
    std::uint32_t image_height = 0;
    double fov_degrees = 0;
    double pitch_degrees = 0;
    std::vector<double> headings;

    /// Throws Error when an invariant is violated.
    void validate() const;
};

/// Evenly spaced headings starting at `start`, e.g. (10, 36) -> 0,36,...,324.
std::vector<double> heading_sweep(std::size_t count, double step_degrees, double start = 0.0);

struct DefaultProfiles {
    CaptureProfile detection;
    std::vector<CaptureProfile> reconstruction;
};

/// Street-view capture grid: 10 detection views at 620x620/fov 10/pitch 0 and
/// a 35-view 2500x2500 reconstruction grid mixing fov and pitch.
DefaultProfiles default_profiles();

struct ViewRequest {
    std::string pole_id;
    double latitude = 0;
    double longitude = 0;
    double heading = 0;
    double pitch = 0;
    double fov = 0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    friend bool operator==(const ViewRequest&, const ViewRequest&) = default;
};

std::vector<ViewRequest> build_view_requests(const PoleRecord& pole, const CaptureProfile& profile);

struct FetchSettings {
    std::string endpoint = "https://maps.googleapis.com/maps/api/streetview";
    std::string api_key_env = "STREETVIEW_API_KEY";
    /// Overrides the environment lookup when set.
    std::optional<std::string> api_key;
    std::filesystem::path cache_root = "cache";
    std::size_t jobs = 1;
};

/// `size=WxH&fov=F&pitch=P&heading=H&location=LAT,LON`
std::string view_query(const ViewRequest& request);
/// Endpoint plus query plus `&key=...` when a key is given.
std::string view_url(const ViewRequest& request, const std::string& endpoint, const std::string& api_key);

/// 16 hex digits; FNV-1a 64 of the key-less canonical URL.
std::string cache_key(const ViewRequest& request, const std::string& endpoint);

/// Transport used to download views. Implementations throw on failure.
class ImageFetchClient {
public:
    virtual ~ImageFetchClient() = default;
    virtual std::vector<std::uint8_t> get(const std::string& url) = 0;
};

using ImageDecoder = std::function<RgbImage(std::span<const std::uint8_t>)>;

struct ImageAsset {
    ViewRequest request;
    RgbImage pixels;
    std::chrono::system_clock::time_point fetched_at;
};

struct FetchFailure {
    ViewRequest request;
    std::string message;
};

struct FetchResult {
    std::vector<ImageAsset> assets;
    std::vector<FetchFailure> failures;
};

/// Content-addressed on-disk image cache:
/// `<root>/<key[0:2]>/<key>.img` plus `<key>.json` metadata.
class ImageCache {
public:
    explicit ImageCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path image_path(const std::string& key) const;
    std::filesystem::path metadata_path(const std::string& key) const;

    bool contains(const std::string& key) const;
    std::vector<std::uint8_t> load(const std::string& key) const;
    std::chrono::system_clock::time_point fetched_at(const std::string& key) const;
    /// Writes via temporary file and rename so readers never see partial files.
    void store(const std::string& key, std::span<const std::uint8_t> bytes, const ViewRequest& request,
               const std::string& canonical_url, std::chrono::system_clock::time_point fetched_at) const;

private:
    std::filesystem::path root_;
};

/// Fetches every request through the cache. Identical requests are fetched
/// at most once; cached views cost zero client calls. Per-request transport
/// or decode errors are recorded and do not stop the batch.
FetchResult fetch_views(std::span<const ViewRequest> requests, ImageFetchClient& client,
                        const FetchSettings& settings, const ImageDecoder& decoder = decode_pnm_rgb);

}  // namespace polerisk
