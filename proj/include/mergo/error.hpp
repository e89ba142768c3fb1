#pragma once

#include <stdexcept>
#include <string>

namespace mergo {

// Input violates a mathematical precondition (CLI exit 3).
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Work estimate exceeds the configured budget (CLI exit 4).
struct cost_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested size does not fit the machine representation (CLI exit 4).
struct size_error : cost_error {
  using cost_error::cost_error;
};

// Exact integer arithmetic left the 64-bit range (CLI exit 3).
struct overflow_error : domain_error {
  using domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw domain_error(what);
}

}  // namespace detail
}  // namespace mergo
