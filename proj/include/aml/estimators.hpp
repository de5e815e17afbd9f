#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aml/subsample.hpp"

namespace aml {

/// Per-subsample estimator of the extreme value index over threshold
/// exceedances. CLI names: "aml", "amo", "apwm".
enum class Method { Aml, Amo, Apwm };

Method parse_method(std::string_view name);
const char* method_name(Method m);

struct SubsampleEstimate {
    double gamma_hat = 0;
    std::uint64_t exceedance_count = 0; // n_k^u
    double threshold = 0;               // u used for this subsample
    Method method = Method::Aml;
};

/// Averaged estimate over K subsamples: gamma_hat is the arithmetic mean of
/// the per-subsample estimates, alpha_u_hat = n_*^u / (nK).
struct AmlEstimate {
    double gamma_hat = 0;
    std::vector<SubsampleEstimate> per_subsample;
    std::uint64_t total_exceedances = 0; // n_*^u
    double alpha_u_hat = 0;
    std::uint64_t n = 0;
    std::uint64_t K = 0;
    double threshold = 0; // u; the average of per-subsample thresholds when those differ
    Method method = Method::Aml;
};

/// Quantile level 1 - n^{-1/(1+h*gamma)} that induces the threshold u;
/// h defaults to 0.8*delta.
double threshold_level(std::uint64_t n, double gamma, double delta,
                       std::optional<double> h = std::nullopt);

/// K = floor(n^{C_K * delta / (1/gamma + delta)}), floored at 1.
std::uint64_t subsample_count(std::uint64_t n, double c_k, double gamma, double delta);

/// Order-statistic quantile: ceil(level*m)-th smallest, no interpolation.
double empirical_quantile(std::span<const double> values, double level);

/// gamma_hat = mean of log(X_i/u) over the strict exceedances {X_i > u}.
SubsampleEstimate mle_subsample(std::span<const double> values, double u);

/// Moment (Dekkers-Einmahl-de Haan) shape from the first two log-excess
/// moments: M1 + 1 - (1/2) / (1 - M1^2/M2).
double moment_gamma(double m1, double m2);
SubsampleEstimate moment_subsample(std::span<const double> values, double u);

/// Probability-weighted-moment (Hosking-Wallis) shape: 2 - b0/(b0 - 2*b1).
double pwm_gamma(double b0, double b1);
SubsampleEstimate pwm_subsample(std::span<const double> values, double u);

SubsampleEstimate estimate_subsample(std::span<const double> values, double u, Method method);

/// Averages per-subsample estimates at a single global threshold u.
AmlEstimate averaged_estimate(const SubsampleSet& subsamples, double u, Method method);

/// Per-subsample thresholds: each u_k is that subsample's empirical quantile
/// at `level`; the reported threshold is the average of the u_k.
AmlEstimate averaged_estimate_per_subsample(const SubsampleSet& subsamples, double level,
                                            Method method);

} // namespace aml
