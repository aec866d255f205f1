#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fogpipe {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -- signal chain -----------------------------------------------------------
class OpenCircuitError : public Error { public: using Error::Error; };
class OutOfRangeError : public Error { public: using Error::Error; };
class InvalidSessionError : public Error { public: using Error::Error; };

// -- generic contract violations --------------------------------------------
class DomainError : public Error { public: using Error::Error; };
class DivisionError : public Error { public: using Error::Error; };
class InsufficientDataError : public Error { public: using Error::Error; };

// -- configuration -----------------------------------------------------------
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(message), key_(std::move(key)) {}
    explicit ConfigError(const std::string& message) : Error(message) {}
    // Dotted path of the offending key, empty when not key-specific.
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// -- trace / CSV parsing ------------------------------------------------------
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(message), line_(line) {}
    // 1-based line number in the input file.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error { public: using Error::Error; };

// -- mesh ---------------------------------------------------------------------
class NodeError : public Error { public: using Error::Error; };
class RouteError : public Error { public: using Error::Error; };

// -- gateway ------------------------------------------------------------------
class GapError : public Error { public: using Error::Error; };
class NotFoundError : public Error { public: using Error::Error; };
class EmptySessionError : public Error { public: using Error::Error; };
class DuplicateError : public Error { public: using Error::Error; };

// -- cloud sink ---------------------------------------------------------------
class FrameTooLargeError : public Error { public: using Error::Error; };
class TruncatedError : public Error { public: using Error::Error; };
class PersistError : public Error { public: using Error::Error; };
class StartupError : public Error { public: using Error::Error; };

} // namespace fogpipe
