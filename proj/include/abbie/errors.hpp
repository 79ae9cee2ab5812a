#pragma once

#include <stdexcept>
#include <string>

namespace abbie {

// Error taxonomy. Each kind maps to a distinct CLI exit code (see tools/).
enum class ErrorKind {
    kShape,      // tensor dimension mismatch
    kConfig,     // invalid or inconsistent configuration
    kData,       // bad input data (corpus too small, token out of range, ...)
    kUsage,      // API misuse (non-scalar loss, Std with r != 1, ...)
    kFormat,     // malformed file (checkpoint magic/version, task records)
    kNumerics,   // NaN/Inf surfaced by the post-op scan
    kIo,         // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorKind::kShape, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorKind::kData, m) {}
};
struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorKind::kUsage, m) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorKind::kFormat, m) {}
};
struct NumericsError : Error {
    explicit NumericsError(const std::string& m) : Error(ErrorKind::kNumerics, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

const char* error_kind_name(ErrorKind kind);

}  // namespace abbie
