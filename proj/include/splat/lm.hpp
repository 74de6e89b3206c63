#pragma once

#include <Eigen/Dense>
#include <functional>

namespace splat {

struct LMOptions {
    int max_iterations = 100;
    double relative_tolerance = 1e-8;
    double initial_lambda = 1e-4;
};

/// Dense Levenberg-Marquardt over a residual function, with a numeric
/// central-difference Jacobian. Uphill steps are rejected, so the final
/// cost never exceeds the initial cost.
Eigen::VectorXd levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd params, const LMOptions& opts = {});

}  // namespace splat
