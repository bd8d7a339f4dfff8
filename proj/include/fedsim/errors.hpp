#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

// Dimension or length mismatch between vectors/matrices that must agree.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation received zero samples where at least one is required.
struct EmptyBatchError : std::runtime_error {
    explicit EmptyBatchError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training data holds only one class; no decision boundary can be fit.
struct DegenerateDatasetError : std::runtime_error {
    explicit DegenerateDatasetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric evaluation needs both classes present.
struct DegenerateEvalError : std::runtime_error {
    explicit DegenerateEvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or malformed binary model checkpoint.
struct CheckpointFormatError : std::runtime_error {
    explicit CheckpointFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed dataset file; message carries the offending line number.
struct DatasetFormatError : std::runtime_error {
    explicit DatasetFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// A referenced id (domain, backend, ...) does not exist.
struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structural misuse of the federation protocol (empty update list, too few
// domains, bad weights, ...).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid generation spec or configuration value.
struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fedsim
