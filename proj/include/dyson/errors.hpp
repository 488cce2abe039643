#pragma once

#include <stdexcept>
#include <string>

namespace dyson {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad arguments, violated preconditions, unsupported input classes
struct invalid_parameter : error {
    using error::error;
};
struct precondition_violation : error {
    using error::error;
};
struct unsupported : error {
    using error::error;
};

// runtime numerical breakdowns
struct numeric_failure : error {
    using error::error;
};
struct truncation_failure : numeric_failure {
    using numeric_failure::numeric_failure;
};
struct contour_placement_failure : numeric_failure {
    using numeric_failure::numeric_failure;
};
struct step_failure : numeric_failure {
    using numeric_failure::numeric_failure;
};

} // namespace dyson
