#ifndef STRECO_ERRORS_HPP
#define STRECO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace streco {

struct InvalidExtent : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedDerivative : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedOrder : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct OmegaOutsideDomain : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateOmega : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonPositiveTime : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct MemberMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularBm : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LayoutMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedSpace : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct AlphaOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonPositiveEps : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularAr : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MaxIterationsExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergedEigen : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace streco

#endif
