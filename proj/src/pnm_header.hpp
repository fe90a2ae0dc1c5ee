#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace polerisk::detail {

struct PnmHeader {
    std::string magic;
    std::size_t width = 0;
    std::size_t height = 0;
    std::uint32_t maxval = 0;
    std::size_t data_offset = 0;  // first payload byte
};

/// Parses "P5"/"P6" style headers with optional '#' comments. Throws ParseError.
PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes);

/// Reads whitespace-separated header tokens; comments run to end of line.
class HeaderTokenizer {
public:
    explicit HeaderTokenizer(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::string next(const char* what);
    std::size_t unsigned_value(const char* what);
    /// Consumes exactly one whitespace byte that terminates the header.
    void single_whitespace();
    std::size_t offset() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace polerisk::detail
