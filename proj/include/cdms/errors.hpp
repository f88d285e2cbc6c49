#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdms {

// Base class for every error raised by the library. `code()` is a short
// machine-readable tag used by the CLI for its one-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error("range", what) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error("argument", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double penetration, int iterations)
        : Error("solver", what), penetration_(penetration), iterations_(iterations) {}

    double penetration() const noexcept { return penetration_; }
    int iterations() const noexcept { return iterations_; }

private:
    double penetration_;
    int iterations_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("parse", "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error("training", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

enum class CheckpointErrorKind { BadMagic, UnsupportedVersion, Truncated, WrongKind, Corrupt };

class CheckpointError : public Error {
public:
    CheckpointError(CheckpointErrorKind kind, const std::string& what)
        : Error("checkpoint", what), kind_(kind) {}

    CheckpointErrorKind kind() const noexcept { return kind_; }

private:
    CheckpointErrorKind kind_;
};

}  // namespace cdms
