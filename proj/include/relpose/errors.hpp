#pragma once

#include <stdexcept>
#include <string>

namespace relpose {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// pose algebra
struct ZeroNormQuaternion : Error {
    ZeroNormQuaternion() : Error("quaternion norm below 1e-12, cannot normalize") {}
};

// diffcore
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};
struct NonFiniteValue : Error {
    explicit NonFiniteValue(const std::string& where) : Error("non-finite value in " + where) {}
};
struct NotScalarLoss : Error {
    NotScalarLoss() : Error("backward requires a scalar loss tensor") {}
};

// losses / network
struct MissingHead : Error {
    explicit MissingHead(const std::string& what) : Error("missing head: " + what) {}
};

// dataset
struct MalformedPoseFile : Error {
    explicit MalformedPoseFile(const std::string& what) : Error("malformed pose file: " + what) {}
};
struct NonOrthogonalRotation : Error {
    explicit NonOrthogonalRotation(const std::string& what)
        : Error("rotation block not orthogonal: " + what) {}
};
struct MalformedLine : Error {
    explicit MalformedLine(const std::string& what) : Error("malformed line: " + what) {}
};
struct SequenceTooShort : Error {
    explicit SequenceTooShort(const std::string& what) : Error("sequence too short: " + what) {}
};
struct InfeasibleAliasing : Error {
    explicit InfeasibleAliasing(const std::string& what)
        : Error("infeasible aliasing constraint: " + what) {}
};

// trainer / evaluation
struct DivergedLoss : Error {
    explicit DivergedLoss(const std::string& what) : Error("training loss diverged: " + what) {}
};
struct EmptyTestSplit : Error {
    EmptyTestSplit() : Error("test split is empty") {}
};

}  // namespace relpose
