#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polerisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text or bytes. Carries the 1-based line or 0-based byte
/// offset where parsing stopped, when one is known.
class ParseError : public Error {
public:
    enum class Position { none, line, byte_offset };

    ParseError(const std::string& what, Position kind = Position::none, std::size_t where = 0)
        : Error(what), kind_(kind), where_(where) {}

    static ParseError at_line(const std::string& what, std::size_t line) {
        return ParseError(what + ", line " + std::to_string(line), Position::line, line);
    }
    static ParseError at_offset(const std::string& what, std::size_t offset) {
        return ParseError(what + " at byte offset " + std::to_string(offset), Position::byte_offset,
                          offset);
    }

    Position position_kind() const noexcept { return kind_; }
    std::size_t position() const noexcept { return where_; }

private:
    Position kind_;
    std::size_t where_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace polerisk
