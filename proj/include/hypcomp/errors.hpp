#pragma once

#include <stdexcept>
#include <string>

namespace hypcomp {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// One cylinder prefix extends the other, so a pairwise quantity that needs
/// disjoint cylinders is not defined.
struct NestedCylinders : Error {
  using Error::Error;
};

/// A cylinder is not deep enough for the requested evaluation to be constant
/// on it.
struct DepthTooShallow : Error {
  using Error::Error;
};

/// A series parameter was at or below the critical exponent where the
/// defining series stops converging.
struct ParameterAtOrBelowDelta : Error {
  using Error::Error;
};

/// A parameter left the admissible range of the operation.
struct ParameterOutOfRange : Error {
  using Error::Error;
};

/// A requested matrix dimension exceeded the configured cap.
struct DimensionCap : Error {
  using Error::Error;
};

/// An enumeration exceeded the configured element cap.
struct SizeCap : Error {
  using Error::Error;
};

/// The group is elementary (rank < 2); the theory needs a non-elementary group.
struct ElementaryGroup : Error {
  using Error::Error;
};

/// A kernel matrix expected to be symmetric is not.
struct AsymmetricKernel : Error {
  using Error::Error;
};

/// A kernel matrix expected to have zero diagonal does not.
struct NonzeroDiagonal : Error {
  using Error::Error;
};

/// An iterative solver failed to meet its residual target.
struct NoConvergence : Error {
  using Error::Error;
};

/// Malformed configuration or data text.
struct ParseError : Error {
  using Error::Error;
};

/// Well-formed configuration with values outside documented caps.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace hypcomp
