#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aml/estimators.hpp"
#include "aml/inference.hpp"
#include "aml/tail_model.hpp"

namespace aml {

struct OutlierConfig {
    double c_o = 0.0;        // outlier factor; P(replace X_i) = C_o/(K n loglog N)
    double multiplier = 10.0;
    std::optional<double> tau_out; // replacement value = multiplier * q_{1-tau_out}; default 1/N
};

struct ThresholdRule {
    enum class Kind { Design, FixedLevel, FixedExponent, Sweep };
    Kind kind = Kind::Design;
    double level = 0.0;    // FixedLevel
    double exponent = 0.6; // FixedExponent: level = 1 - n^{-exponent}
    std::vector<double> sweep_levels; // Sweep; empty means 0.5 + i/100, i = 0..49
};

struct ExperimentConfig {
    TailModel model{Pareto{2.0, 1.0}};
    std::uint64_t N = 100'000;
    double c_k = 0.5;
    std::uint64_t R = 200;
    double tau = 1e-3;   // level for the extrapolated quantile / RA metric
    double alpha = 0.05; // CI level complement
    std::uint64_t master_seed = 1;
    std::vector<Method> methods{Method::Aml};
    ThresholdRule threshold;
    std::optional<std::uint64_t> n_override; // default n = floor(sqrt(N))
    std::optional<std::uint64_t> k_override; // default K from the design formula
    OutlierConfig outliers;
    unsigned jobs = 1;
};

struct DesignParams {
    std::uint64_t n = 0;
    std::uint64_t K = 0;
    double c_k = 0.0;          // coefficient behind K (when K is not overridden)
    double h_coefficient = 0.0; // h in the level formula; 0.8*delta under the design rule
    double level = 0.0;     // quantile level inducing the threshold
    double threshold = 0.0; // u: the model's true quantile at `level`
};

/// n = floor(sqrt(N)) (unless overridden), K from the design formula with the
/// model's true (gamma, delta), threshold level per the config rule, and
/// u = the model's true quantile at that level (simulations always use the
/// theoretical quantile; real-data runs use empirical ones via the CLI).
DesignParams derive_design(const ExperimentConfig& config);

struct MethodRecord {
    double gamma_hat = 0;
    std::uint64_t n_star_u = 0;
    double alpha_u_hat = 0;
    double ci_lower = 0;
    double ci_upper = 0;
    bool covered = false;
    double q_hat = 0;   // extrapolated quantile at 1 - tau
    double tau_hat = 0; // true tail probability of q_hat
};

struct ReplicationRecord {
    std::uint64_t rep = 0;
    bool aborted = false;
    std::string abort_reason;
    std::uint64_t injected_outliers = 0;
    std::uint64_t sampled_outliers = 0;    // injected indices drawn into any subsample
    double zero_contamination_prob = 1.0;  // exact (1 - d/N)^{nK} for the realized d
    std::vector<MethodRecord> by_method;   // aligned with config.methods
};

/// Simulates N values, optionally injects outliers, draws K subsamples of
/// size n and estimates by every configured method at the design threshold.
/// Deterministic in (config, rep). Degeneracies (e.g. a subsample without
/// exceedances) mark the record aborted instead of throwing.
ReplicationRecord run_replication(const ExperimentConfig& config, const DesignParams& design,
                                  std::uint64_t rep);

struct MetricsReport {
    Method method = Method::Aml;
    std::uint64_t replications_used = 0;
    double mean_total_exceedances = 0;
    double bias = 0;
    double sd = 0;   // divisor R-1
    double rmse = 0; // divisor R
    double ecp = 0;
    double ra = 0;
    std::optional<double> detection_rate_mean;
};

/// Aggregates per-replication records for one method (exposed separately so
/// the metric definitions can be fixture-tested).
MetricsReport aggregate_metrics(std::span<const ReplicationRecord> records,
                                std::size_t method_index, Method method, double gamma_true,
                                double tau);

struct ExperimentResult {
    DesignParams design;
    std::vector<ReplicationRecord> replications;
    std::vector<MetricsReport> metrics; // aligned with config.methods
    std::uint64_t aborted = 0;
};

/// Full replication loop; throws DegeneracyError when more than 5% of the
/// replications aborted.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct InjectionResult {
    std::vector<std::uint64_t> indices; // sorted; the true outlier set D
    double replacement_value = 0;
};

/// Flags each index independently with probability C_o/(K n loglog N) and
/// replaces flagged values by multiplier * q_{1 - tau_out}.
InjectionResult inject_outliers(std::span<double> values, std::uint64_t n, std::uint64_t K,
                                const TailModel& model, const OutlierConfig& outliers,
                                std::uint64_t seed);

struct CompareCell {
    std::uint64_t N = 0;
    Method method = Method::Aml;
    double rmse = 0;
    std::uint64_t aborted = 0;
};

/// RMSE per method over an N grid at the configured fixed threshold level
/// (the estimator-comparison study; requires a model with gamma < 1/2).
std::vector<CompareCell> compare_estimators(const ExperimentConfig& base,
                                            std::span<const std::uint64_t> n_grid);

struct SweepCell {
    double level = 0;
    Method method = Method::Aml;
    double rmse = 0;
    std::uint64_t replications_used = 0;
    std::uint64_t aborted = 0;
};

struct SweepResult {
    std::vector<double> levels;
    std::vector<SweepCell> cells; // levels x methods, level-major
    struct Best {
        Method method;
        double level;
        double rmse;
    };
    std::vector<Best> best_per_method;
};

/// RMSE curve over a grid of threshold levels; all levels and methods within
/// a replication reuse the same simulated data and subsample indices.
SweepResult threshold_sweep(const ExperimentConfig& config);

struct DetectionPoint {
    std::uint64_t N = 0;
    double mean_pi = 0;
    double mean_injected = 0;
    double mean_flagged = 0;
    std::uint64_t aborted = 0;
};

/// Per N: inject outliers, estimate, bound at tau = 1/N, screen the full
/// dataset and average the Jaccard detection rate over replications.
std::vector<DetectionPoint> detection_study(const ExperimentConfig& base,
                                            std::span<const std::uint64_t> n_grid);

struct ContaminationPoint {
    double c_o = 0;
    std::vector<double> gamma_hats; // non-aborted replications, in rep order
    double median = 0;
    double iqr = 0;
    double zero_contamination_freq = 0;  // empirical P(no outlier in any subsample)
    double zero_contamination_exact = 0; // mean of (1 - d/N)^{nK}
    std::uint64_t aborted = 0;
};

/// Distribution of the averaged estimate across an outlier-factor grid, plus
/// the empirical and exact zero-contamination frequencies.
std::vector<ContaminationPoint> contamination_robustness(const ExperimentConfig& base,
                                                         std::span<const double> co_grid);

/// Interpolated quartile helpers used in the contamination summaries.
double sample_quantile_interpolated(std::vector<double> values, double p);

} // namespace aml
