#include "splat/lm.hpp"

#include <cmath>

namespace splat {

Eigen::VectorXd levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd params, const LMOptions& opts) {
    const int n = static_cast<int>(params.size());
    Eigen::VectorXd r = residuals(params);
    double cost = r.squaredNorm();
    double lambda = opts.initial_lambda;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // numeric Jacobian, central differences
        Eigen::MatrixXd jac(r.size(), n);
        for (int j = 0; j < n; ++j) {
            double h = 1e-6 * (1.0 + std::abs(params[j]));
            Eigen::VectorXd p_hi = params, p_lo = params;
            p_hi[j] += h;
            p_lo[j] -= h;
            jac.col(j) = (residuals(p_hi) - residuals(p_lo)) / (2.0 * h);
        }
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;

        bool stepped = false;
        for (int attempt = 0; attempt < 10; ++attempt) {
            Eigen::MatrixXd aug = jtj;
            aug.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            Eigen::VectorXd delta = aug.ldlt().solve(-jtr);
            Eigen::VectorXd trial = params + delta;
            Eigen::VectorXd r_trial = residuals(trial);
            double cost_trial = r_trial.squaredNorm();
            if (cost_trial < cost) {
                double rel = (cost - cost_trial) / (cost + 1e-300);
                params = std::move(trial);
                r = std::move(r_trial);
                cost = cost_trial;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel < opts.relative_tolerance) return params;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;
    }
    return params;
}

}  // namespace splat
