#pragma once

#include <stdexcept>
#include <string>

namespace gait {

/// Base class for all recoverable pipeline errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Flat/dead sensor segment: max == min, cannot be scaled.
struct ConstantSignal : Error {
    using Error::Error;
};

/// No candidate minima survived the detector; non-walking or too-short period.
struct NoPeaks : Error {
    using Error::Error;
};

/// Angle requested at the first or last sample (no neighbors).
struct BoundaryPoint : Error {
    using Error::Error;
};

/// Fewer than 2 cuts survived the angle filter.
struct TooFewCuts : Error {
    using Error::Error;
};

struct EmptySignal : Error {
    using Error::Error;
};

/// A resampled cycle is constant; correlation undefined.
struct ZeroVariance : Error {
    using Error::Error;
};

struct TooFewCycles : Error {
    using Error::Error;
};

/// Every grid point errored during tuning.
struct AllCandidatesFailed : Error {
    using Error::Error;
};

/// Cut positions do not fall inside the target signal's grid.
struct GridMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct EmptyCandidates : Error {
    using Error::Error;
};

/// Axis keys differ between test cycle and candidate sets.
struct AxisMismatch : Error {
    using Error::Error;
};

/// user_id not present among the enrolled candidates.
struct UnknownUser : Error {
    using Error::Error;
};

/// Malformed input file; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

struct EmptyFile : Error {
    using Error::Error;
};

/// Requested slice exceeds the signal extent.
struct OutOfRange : Error {
    using Error::Error;
};

struct DatasetMissing : Error {
    using Error::Error;
};

struct EmptyMatrix : Error {
    using Error::Error;
};

}  // namespace gait
