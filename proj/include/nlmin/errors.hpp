#pragma once

#include <stdexcept>
#include <string>

namespace nlmin {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag; the CLI copies it into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define NLMIN_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}       \
  }

NLMIN_DEFINE_ERROR(InvalidArgument, "invalid-argument");
NLMIN_DEFINE_ERROR(RegularityError, "regularity");
NLMIN_DEFINE_ERROR(HypothesisError, "hypothesis");
NLMIN_DEFINE_ERROR(InfeasibleMass, "infeasible-mass");
NLMIN_DEFINE_ERROR(DimensionMismatch, "dimension-mismatch");
NLMIN_DEFINE_ERROR(SingularPoint, "singular-point");
NLMIN_DEFINE_ERROR(EmptySet, "empty-set");
NLMIN_DEFINE_ERROR(ClusterCountMismatch, "cluster-count-mismatch");
NLMIN_DEFINE_ERROR(SearchHorizonError, "search-horizon");
NLMIN_DEFINE_ERROR(ZeroMass, "zero-mass");
NLMIN_DEFINE_ERROR(ConfigError, "config");
NLMIN_DEFINE_ERROR(IoError, "io");

#undef NLMIN_DEFINE_ERROR

}  // namespace nlmin
