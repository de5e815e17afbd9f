#pragma once

#include <optional>

#include "aml/estimators.hpp"
#include "aml/tail_model.hpp"

namespace aml {

struct ConfidenceInterval {
    double lower = 0;
    double upper = 0;
    double level = 0; // 1 - alpha
};

/// gamma_hat +/- z_{1-alpha/2} * gamma_hat / sqrt(n_*^u).
ConfidenceInterval confidence_interval(const AmlEstimate& est, double alpha);

/// Extrapolated extreme quantile u * (alpha_u_hat / tau)^{gamma_hat};
/// requires tau < alpha_u_hat (throws TauTooLargeError otherwise).
double quantile_bound(double u, double alpha_u_hat, double gamma_hat, double tau);
double quantile_bound(const AmlEstimate& est, double tau);

struct NormalRangeSide {
    double threshold = 0;  // u on the (possibly shifted/negated) fitting scale
    double alpha_u_hat = 0;
    double gamma_hat = 0;
    std::uint64_t total_exceedances = 0;
};

/// Two-sided (or one-sided) normal range at tail level tau, reported on the
/// original data scale. The upper fit is computed on {X_i + shift}, the lower
/// fit on {-X_i + shift}; bounds are shifted back before reporting.
struct NormalRange {
    std::optional<double> upper_bound;
    std::optional<double> lower_bound;
    double tau = 0;
    double shift = 0;
    std::optional<NormalRangeSide> upper_fit;
    std::optional<NormalRangeSide> lower_fit;
};

NormalRange normal_range(const AmlEstimate& upper_fit,
                         const std::optional<AmlEstimate>& lower_fit, double tau,
                         double shift);

/// Oracle tail probability P(X > bound) of the generating model; used for
/// the relative-accuracy metric in simulations.
double true_tail_prob(const TailModel& model, double bound);

} // namespace aml
