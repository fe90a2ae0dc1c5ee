#include "polerisk/catalog.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "polerisk/csv.hpp"
#include "polerisk/error.hpp"

namespace polerisk {

namespace {

constexpr std::size_t kCatalogColumns = 7;

std::optional<double> optional_number(const std::string& field, const char* name, std::size_t line) {
    if (csv::trim(field).empty()) return std::nullopt;
    const auto v = csv::parse_double(field);
    if (!v) throw ParseError::at_line(std::string("unparsable ") + name, line);
    return v;
}

std::string optional_text(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string_view to_string(Material m) {
    switch (m) {
        case Material::wood: return "wood";
        case Material::steel: return "steel";
        case Material::concrete: return "concrete";
        case Material::composite: return "composite";
        case Material::unknown: break;
    }
    return "unknown";
}

Material parse_material(std::string_view text) {
    std::string lower;
    for (char c : csv::trim(text)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (Material m : {Material::wood, Material::steel, Material::concrete, Material::composite}) {
        if (lower == to_string(m)) return m;
    }
    return Material::unknown;
}

std::vector<PoleRecord> parse_pole_catalog(std::string_view csv_text) {
    if (csv_text.starts_with("\xEF\xBB\xBF")) csv_text.remove_prefix(3);
    const auto lines = csv::split_lines(csv_text);
    if (lines.empty() || csv::trim(lines.front()) != kCatalogHeader) {
        throw ParseError::at_line("missing or unexpected catalog header", 1);
    }
    std::vector<PoleRecord> poles;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (csv::trim(lines[i]).empty()) continue;
        const auto f = csv::split_fields(lines[i]);
        if (f.size() != kCatalogColumns) {
            throw ParseError::at_line("expected " + std::to_string(kCatalogColumns) + " columns, got " +
                                          std::to_string(f.size()),
                                      line_no);
        }
        PoleRecord p;
        p.pole_id = std::string(csv::trim(f[0]));
        if (p.pole_id.empty()) throw ParseError::at_line("empty pole_id", line_no);
        const auto lat = csv::parse_double(f[1]);
        const auto lon = csv::parse_double(f[2]);
        if (!lat) throw ParseError::at_line("unparsable latitude", line_no);
        if (!lon) throw ParseError::at_line("unparsable longitude", line_no);
        if (*lat < -90.0 || *lat > 90.0) throw ParseError::at_line("latitude out of range", line_no);
        if (*lon < -180.0 || *lon > 180.0) throw ParseError::at_line("longitude out of range", line_no);
        p.latitude = *lat;
        p.longitude = *lon;
        p.age_years = optional_number(f[3], "age_years", line_no);
        if (p.age_years && *p.age_years < 0) throw ParseError::at_line("negative age_years", line_no);
        p.material = parse_material(f[4]);
        p.height_m = optional_number(f[5], "height_m", line_no);
        p.circumference_m = optional_number(f[6], "circumference_m", line_no);
        poles.push_back(std::move(p));
    }
    return poles;
}

std::string serialize_pole_catalog(std::span<const PoleRecord> poles) {
    std::string out(kCatalogHeader);
    out.push_back('\n');
    for (const auto& p : poles) {
        out += csv::escape_field(p.pole_id) + "," + csv::format_double(p.latitude) + "," +
               csv::format_double(p.longitude) + "," + optional_text(p.age_years) + "," +
               std::string(to_string(p.material)) + "," + optional_text(p.height_m) + "," +
               optional_text(p.circumference_m) + "\n";
    }
    return out;
}

void CaptureProfile::validate() const {
    if (image_width == 0 || image_height == 0) throw Error("capture profile size must be positive");
    if (!(fov_degrees > 0.0 && fov_degrees <= 120.0)) throw Error("capture profile fov must be in (0, 120]");
    for (double h : headings) {
        if (!(h >= 0.0 && h < 360.0)) throw Error("capture heading must be in [0, 360)");
    }
}

std::vector<double> heading_sweep(std::size_t count, double step_degrees, double start) {
    std::vector<double> headings;
    headings.reserve(count);
    for (std::size_t i = 0; i < count; ++i) headings.push_back(std::fmod(start + step_degrees * static_cast<double>(i), 360.0));
    return headings;
}

DefaultProfiles default_profiles() {
    DefaultProfiles p;
    p.detection = {620, 620, 10.0, 0.0, heading_sweep(10, 36.0)};
    p.reconstruction = {
        {2500, 2500, 10.0, 0.0, heading_sweep(10, 36.0)},
        {2500, 2500, 20.0, 0.0, heading_sweep(10, 36.0)},
        {2500, 2500, 10.0, 10.0, heading_sweep(10, 36.0)},
        {2500, 2500, 20.0, 10.0, heading_sweep(5, 72.0)},
    };
    return p;
}

std::vector<ViewRequest> build_view_requests(const PoleRecord& pole, const CaptureProfile& profile) {
    std::vector<double> headings = profile.headings;
    std::sort(headings.begin(), headings.end());
    std::vector<ViewRequest> out;
    out.reserve(headings.size());
    for (double h : headings) {
        out.push_back({pole.pole_id, pole.latitude, pole.longitude, h, profile.pitch_degrees, profile.fov_degrees,
                       profile.image_width, profile.image_height});
    }
    return out;
}

std::string view_query(const ViewRequest& r) {
    return "size=" + std::to_string(r.width) + "x" + std::to_string(r.height) + "&fov=" + csv::format_double(r.fov) +
           "&pitch=" + csv::format_double(r.pitch) + "&heading=" + csv::format_double(r.heading) +
           "&location=" + csv::format_double(r.latitude) + "," + csv::format_double(r.longitude);
}

std::string view_url(const ViewRequest& request, const std::string& endpoint, const std::string& api_key) {
    std::string url = endpoint + "?" + view_query(request);
    if (!api_key.empty()) url += "&key=" + api_key;
    return url;
}

std::string cache_key(const ViewRequest& request, const std::string& endpoint) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t h = fnv1a64(view_url(request, endpoint, ""));
    std::string key(16, '0');
    for (int i = 15; i >= 0; --i) {
        key[static_cast<std::size_t>(i)] = kHex[h & 0xF];
        h >>= 4;
    }
    return key;
}

std::filesystem::path ImageCache::image_path(const std::string& key) const {
    return root_ / key.substr(0, 2) / (key + ".img");
}

std::filesystem::path ImageCache::metadata_path(const std::string& key) const {
    return root_ / key.substr(0, 2) / (key + ".json");
}

bool ImageCache::contains(const std::string& key) const {
    return std::filesystem::exists(image_path(key)) && std::filesystem::exists(metadata_path(key));
}

std::vector<std::uint8_t> ImageCache::load(const std::string& key) const {
    return read_file_bytes(image_path(key).string());
}

std::chrono::system_clock::time_point ImageCache::fetched_at(const std::string& key) const {
    std::ifstream in(metadata_path(key));
    const auto meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("fetched_at_ms")) return {};
    return std::chrono::system_clock::time_point(std::chrono::milliseconds(meta["fetched_at_ms"].get<std::int64_t>()));
}

void ImageCache::store(const std::string& key, std::span<const std::uint8_t> bytes, const ViewRequest& request,
                       const std::string& canonical_url, std::chrono::system_clock::time_point fetched_at) const {
    std::filesystem::create_directories(image_path(key).parent_path());
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(fetched_at.time_since_epoch()).count();
    nlohmann::json meta = {
        {"key", key},
        {"url", canonical_url},
        {"pole_id", request.pole_id},
        {"heading", request.heading},
        {"pitch", request.pitch},
        {"fov", request.fov},
        {"size", {request.width, request.height}},
        {"fetched_at_ms", ms},
    };
    const std::string meta_text = meta.dump(2) + "\n";

    auto commit = [](const std::filesystem::path& target, std::span<const std::uint8_t> data) {
        auto tmp = target;
        tmp += ".tmp";
        write_file_bytes(tmp.string(), data);
        std::filesystem::rename(tmp, target);
    };
    commit(image_path(key), bytes);
    commit(metadata_path(key), std::span(reinterpret_cast<const std::uint8_t*>(meta_text.data()), meta_text.size()));
}

FetchResult fetch_views(std::span<const ViewRequest> requests, ImageFetchClient& client,
                        const FetchSettings& settings, const ImageDecoder& decoder) {
    const ImageCache cache(settings.cache_root);
    std::string api_key;
    if (settings.api_key) {
        api_key = *settings.api_key;
    } else if (const char* env = std::getenv(settings.api_key_env.c_str())) {
        api_key = env;
    }

    std::vector<std::string> keys;
    keys.reserve(requests.size());
    std::map<std::string, std::size_t> first_by_key;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        keys.push_back(cache_key(requests[i], settings.endpoint));
        first_by_key.emplace(keys.back(), i);
    }

    // One worker owns each missing key, so every cache entry has a single writer.
    std::vector<std::pair<std::string, std::size_t>> missing;
    for (const auto& [key, idx] : first_by_key) {
        if (!cache.contains(key)) missing.emplace_back(key, idx);
    }

    auto decode_checked = [&](std::span<const std::uint8_t> bytes, const ViewRequest& req) {
        RgbImage img;
        try {
            img = decoder(bytes);
        } catch (const std::exception& e) {
            throw Error(std::string("undecodable image: ") + e.what());
        }
        if (img.width != req.width || img.height != req.height) {
            throw Error("image size " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " does not match request");
        }
        return img;
    };

    std::map<std::string, std::string> errors;
    std::map<std::string, std::pair<RgbImage, std::chrono::system_clock::time_point>> fresh;
    std::mutex merge_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < missing.size(); i = next++) {
            const auto& [key, idx] = missing[i];
            const ViewRequest& req = requests[idx];
            std::vector<std::uint8_t> bytes;
            try {
                bytes = client.get(view_url(req, settings.endpoint, api_key));
            } catch (const std::exception& e) {
                std::lock_guard lock(merge_mutex);
                errors[key] = std::string("transport failure: ") + e.what();
                continue;
            }
            try {
                RgbImage img = decode_checked(bytes, req);
                const auto now = std::chrono::system_clock::now();
                cache.store(key, bytes, req, view_url(req, settings.endpoint, ""), now);
                std::lock_guard lock(merge_mutex);
                fresh.emplace(key, std::make_pair(std::move(img), now));
            } catch (const std::exception& e) {
                std::lock_guard lock(merge_mutex);
                errors[key] = e.what();
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(settings.jobs, 1, std::max<std::size_t>(1, missing.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    FetchResult result;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const ViewRequest& req = requests[i];
        if (auto it = errors.find(keys[i]); it != errors.end()) {
            result.failures.push_back({req, it->second});
            continue;
        }
        if (auto it = fresh.find(keys[i]); it != fresh.end()) {
            result.assets.push_back({req, it->second.first, it->second.second});
            continue;
        }
        try {
            result.assets.push_back({req, decode_checked(cache.load(keys[i]), req), cache.fetched_at(keys[i])});
        } catch (const std::exception& e) {
            result.failures.push_back({req, e.what()});
        }
    }
    return result;
}

}  // namespace polerisk
