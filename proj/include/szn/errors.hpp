#pragma once

#include <stdexcept>
#include <string>

namespace szn {

/// A zonotope generator is too short to define a half-space normal.
struct DegenerateGenerator : std::runtime_error {
    explicit DegenerateGenerator(const std::string& what) : std::runtime_error(what) {}
};

/// Vector/matrix sizes do not match what an operation requires.
struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// A train-mode forward pass was invoked without ground truth.
struct MissingTruth : std::runtime_error {
    explicit MissingTruth(const std::string& what) : std::runtime_error(what) {}
};

/// A dataset file could not be parsed; carries 1-based line and column.
struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& what, int line_, int column_)
        : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}
};

struct EmptyFile : std::runtime_error {
    explicit EmptyFile(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownDataset : std::runtime_error {
    explicit UnknownDataset(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace szn
