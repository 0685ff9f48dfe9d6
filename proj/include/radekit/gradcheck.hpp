#pragma once

#include "radekit/config.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace radekit {

// Central finite differences against the analytic loss gradients.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-7).
struct GradcheckSuite {
    std::string name;
    std::size_t instances = 0;
    std::size_t checks = 0;
    std::size_t skipped = 0;  // coordinates whose perturbation changed the matching
    double max_rel_error = 0.0;
    bool passed = false;
};

std::vector<GradcheckSuite> run_gradcheck(const RunConfig& config);

double relative_error(double analytic, double numeric);

}  // namespace radekit
