#include "aml/inference.hpp"

#include <cmath>
#include <string>

#include "aml/errors.hpp"
#include "aml/special_functions.hpp"

namespace aml {

ConfidenceInterval confidence_interval(const AmlEstimate& est, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw ConfigError("confidence_interval: alpha must be in (0,1]");
    if (est.total_exceedances < 1)
        throw DegeneracyError("confidence_interval: no exceedances");
    if (!(est.gamma_hat > 0.0))
        throw DegeneracyError("confidence_interval: gamma_hat must be positive (got " +
                              std::to_string(est.gamma_hat) + ")");
    double z = inverse_normal_cdf(1.0 - 0.5 * alpha);
    double half = z * est.gamma_hat / std::sqrt(static_cast<double>(est.total_exceedances));
    return {est.gamma_hat - half, est.gamma_hat + half, 1.0 - alpha};
}

double quantile_bound(double u, double alpha_u_hat, double gamma_hat, double tau) {
    if (!(tau > 0.0)) throw ConfigError("quantile_bound: tau must be positive");
    if (!(u > 0.0)) throw ConfigError("quantile_bound: threshold u must be positive");
    if (!(tau < alpha_u_hat))
        throw TauTooLargeError("tau=" + std::to_string(tau) +
                               " must be below alpha_u_hat=" + std::to_string(alpha_u_hat) +
                               "; lower tau or the threshold level");
    return u * std::pow(alpha_u_hat / tau, gamma_hat);
}

double quantile_bound(const AmlEstimate& est, double tau) {
    return quantile_bound(est.threshold, est.alpha_u_hat, est.gamma_hat, tau);
}

namespace {

NormalRangeSide side_info(const AmlEstimate& est) {
    return {est.threshold, est.alpha_u_hat, est.gamma_hat, est.total_exceedances};
}

} // namespace

NormalRange normal_range(const AmlEstimate& upper_fit,
                         const std::optional<AmlEstimate>& lower_fit, double tau,
                         double shift) {
    NormalRange range;
    range.tau = tau;
    range.shift = shift;
    range.upper_bound = quantile_bound(upper_fit, tau) - shift;
    range.upper_fit = side_info(upper_fit);
    if (lower_fit) {
        // lower fit was computed on {-X + shift}; map its upper bound back
        range.lower_bound = shift - quantile_bound(*lower_fit, tau);
        range.lower_fit = side_info(*lower_fit);
    }
    return range;
}

double true_tail_prob(const TailModel& model, double bound) {
    return model.tail_prob(bound);
}

} // namespace aml
