#include "aml/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "aml/detect.hpp"
#include "aml/errors.hpp"
#include "aml/rng.hpp"

namespace aml {

namespace {

// Seed-derivation tags; replication streams never overlap across purposes.
constexpr std::uint64_t kTagData = 0x11;
constexpr std::uint64_t kTagOutliers = 0x22;
constexpr std::uint64_t kTagSubsample = 0x33;

// Neumaier compensated accumulator; order-insensitive metrics stay
// reproducible when replications are aggregated in rep order.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

void parallel_for(std::uint64_t count, unsigned jobs,
                  const std::function<void(std::uint64_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) body(i);
        return;
    }
    unsigned workers = std::min<std::uint64_t>(jobs, count);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::uint64_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lk(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double resolved_level(const ExperimentConfig& config, std::uint64_t n) {
    switch (config.threshold.kind) {
        case ThresholdRule::Kind::Design: {
            ModelConstants mc = config.model.constants();
            return threshold_level(n, mc.gamma, mc.delta);
        }
        case ThresholdRule::Kind::FixedLevel:
            if (!(config.threshold.level > 0.0) || !(config.threshold.level < 1.0))
                throw ConfigError("threshold level must be in (0,1)");
            return config.threshold.level;
        case ThresholdRule::Kind::FixedExponent: {
            if (!(config.threshold.exponent > 0.0))
                throw ConfigError("threshold exponent must be positive");
            return 1.0 - std::pow(static_cast<double>(n), -config.threshold.exponent);
        }
        case ThresholdRule::Kind::Sweep:
            throw ConfigError("sweep configs are run through threshold_sweep");
    }
    throw ConfigError("bad threshold rule");
}

std::vector<double> simulate_values(const ExperimentConfig& config, std::uint64_t data_seed) {
    std::vector<double> values(config.N);
    for (std::uint64_t i = 0; i < config.N; ++i)
        values[i] = config.model.sample_at(data_seed, 0, i);
    return values;
}

// P(X > x) extended below the support: a bound under the model's lower end
// (possible when a moment/PWM estimate goes negative) is exceeded surely.
double tail_prob_extended(const TailModel& model, double x) {
    if (model.is_pareto() || model.is_frechet()) {
        double lo = model.support_lower();
        if (x < lo || (model.is_frechet() && x <= 0.0)) return 1.0;
    }
    return model.tail_prob(x);
}

std::uint64_t count_sampled_outliers(const SubsampleSet& set,
                                     const std::vector<std::uint64_t>& outliers) {
    if (outliers.empty()) return 0;
    std::uint64_t hits = 0;
    for (const auto& indices : set.source_indices)
        for (std::uint64_t idx : indices)
            if (std::binary_search(outliers.begin(), outliers.end(), idx)) ++hits;
    return hits;
}

} // namespace

DesignParams derive_design(const ExperimentConfig& config) {
    if (config.N < 4) throw ConfigError("derive_design: N too small");
    DesignParams d;
    d.c_k = config.c_k;
    d.n = config.n_override
              ? *config.n_override
              : static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(config.N))));
    if (d.n < 2) throw ConfigError("derive_design: subsample size n must be >= 2");
    if (config.k_override) {
        d.K = *config.k_override;
        if (d.K < 1) throw ConfigError("derive_design: K must be >= 1");
    } else {
        ModelConstants mc = config.model.constants();
        d.K = subsample_count(d.n, config.c_k, mc.gamma, mc.delta);
    }
    if (config.threshold.kind == ThresholdRule::Kind::Design)
        d.h_coefficient = 0.8 * config.model.constants().delta;
    if (config.threshold.kind != ThresholdRule::Kind::Sweep) {
        d.level = resolved_level(config, d.n);
        d.threshold = config.model.quantile(d.level);
    }
    return d;
}

InjectionResult inject_outliers(std::span<double> values, std::uint64_t n, std::uint64_t K,
                                const TailModel& model, const OutlierConfig& outliers,
                                std::uint64_t seed) {
    if (outliers.c_o < 0.0 || outliers.c_o > 1.0)
        throw ConfigError("outlier factor C_o must be in [0,1]");
    InjectionResult result;
    if (outliers.c_o == 0.0) return result;
    const std::uint64_t N = values.size();
    if (N < 16) throw ConfigError("outlier injection needs N >= 16 (log log N > 0)");
    double tau_out = outliers.tau_out ? *outliers.tau_out : 1.0 / static_cast<double>(N);
    result.replacement_value = outliers.multiplier * model.quantile(1.0 - tau_out);
    double p = outliers.c_o /
               (static_cast<double>(K) * static_cast<double>(n) *
                std::log(std::log(static_cast<double>(N))));
    for (std::uint64_t i = 0; i < N; ++i) {
        if (rng_unit(seed, 0, i) < p) {
            values[i] = result.replacement_value;
            result.indices.push_back(i);
        }
    }
    return result;
}

ReplicationRecord run_replication(const ExperimentConfig& config, const DesignParams& design,
                                  std::uint64_t rep) {
    ReplicationRecord record;
    record.rep = rep;

    std::uint64_t rep_seed = derive_seed(config.master_seed, rep);
    std::vector<double> values = simulate_values(config, derive_seed(rep_seed, kTagData));

    InjectionResult injected = inject_outliers(values, design.n, design.K, config.model,
                                               config.outliers, derive_seed(rep_seed, kTagOutliers));
    record.injected_outliers = injected.indices.size();
    double nk = static_cast<double>(design.n) * static_cast<double>(design.K);
    record.zero_contamination_prob =
        std::pow(1.0 - static_cast<double>(record.injected_outliers) /
                           static_cast<double>(config.N),
                 nk);

    InMemorySource source{std::span<const double>(values)};
    SubsampleSet set =
        draw_subsamples(source, {design.n, design.K, derive_seed(rep_seed, kTagSubsample)});
    record.sampled_outliers = count_sampled_outliers(set, injected.indices);

    double gamma_true = config.model.constants().gamma;
    record.by_method.reserve(config.methods.size());
    for (Method m : config.methods) {
        MethodRecord mr;
        try {
            AmlEstimate est = averaged_estimate(set, design.threshold, m);
            mr.gamma_hat = est.gamma_hat;
            mr.n_star_u = est.total_exceedances;
            mr.alpha_u_hat = est.alpha_u_hat;
            if (est.gamma_hat > 0.0) {
                ConfidenceInterval ci = confidence_interval(est, config.alpha);
                mr.ci_lower = ci.lower;
                mr.ci_upper = ci.upper;
                mr.covered = ci.lower <= gamma_true && gamma_true <= ci.upper;
            } else {
                // moment/PWM estimates can go nonpositive; the normal-approximation
                // CI is undefined there
                mr.ci_lower = mr.ci_upper = std::numeric_limits<double>::quiet_NaN();
                mr.covered = false;
            }
            mr.q_hat = quantile_bound(est, config.tau);
            mr.tau_hat = tail_prob_extended(config.model, mr.q_hat);
        } catch (const DegeneracyError& e) {
            record.aborted = true;
            record.abort_reason = std::string(method_name(m)) + ": " + e.what();
            break;
        }
        record.by_method.push_back(mr);
    }
    return record;
}

MetricsReport aggregate_metrics(std::span<const ReplicationRecord> records,
                                std::size_t method_index, Method method, double gamma_true,
                                double tau) {
    MetricsReport report;
    report.method = method;
    KahanSum sum_gamma, sum_sq_err, sum_nstar, sum_cov, sum_ra;
    std::uint64_t used = 0;
    for (const auto& r : records) {
        if (r.aborted) continue;
        const MethodRecord& mr = r.by_method.at(method_index);
        ++used;
        sum_gamma.add(mr.gamma_hat);
        double err = mr.gamma_hat - gamma_true;
        sum_sq_err.add(err * err);
        sum_nstar.add(static_cast<double>(mr.n_star_u));
        sum_cov.add(mr.covered ? 1.0 : 0.0);
        double rel = mr.tau_hat / tau - 1.0;
        sum_ra.add(rel * rel);
    }
    report.replications_used = used;
    if (used == 0) return report;
    double R = static_cast<double>(used);
    double mean_gamma = sum_gamma.value() / R;
    report.bias = mean_gamma - gamma_true;
    report.rmse = std::sqrt(sum_sq_err.value() / R);
    report.mean_total_exceedances = sum_nstar.value() / R;
    report.ecp = sum_cov.value() / R;
    report.ra = std::sqrt(sum_ra.value() / R);
    if (used > 1) {
        KahanSum sum_dev;
        for (const auto& r : records) {
            if (r.aborted) continue;
            double d = r.by_method.at(method_index).gamma_hat - mean_gamma;
            sum_dev.add(d * d);
        }
        report.sd = std::sqrt(sum_dev.value() / (R - 1.0));
    }
    return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (config.R < 1) throw ConfigError("run_experiment: R must be >= 1");
    if (config.methods.empty()) throw ConfigError("run_experiment: no methods configured");
    ExperimentResult result;
    result.design = derive_design(config);
    result.replications.resize(config.R);
    parallel_for(config.R, config.jobs, [&](std::uint64_t r) {
        result.replications[r] = run_replication(config, result.design, r);
    });
    for (const auto& r : result.replications)
        if (r.aborted) ++result.aborted;
    if (20 * result.aborted > config.R)
        throw DegeneracyError("run_experiment: " + std::to_string(result.aborted) + " of " +
                              std::to_string(config.R) +
                              " replications aborted (limit 5%); first reason: " +
                              [&] {
                                  for (const auto& r : result.replications)
                                      if (r.aborted) return r.abort_reason;
                                  return std::string();
                              }());
    double gamma_true = config.model.constants().gamma;
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi)
        result.metrics.push_back(aggregate_metrics(result.replications, mi, config.methods[mi],
                                                   gamma_true, config.tau));
    return result;
}

std::vector<CompareCell> compare_estimators(const ExperimentConfig& base,
                                            std::span<const std::uint64_t> n_grid) {
    double gamma_true = base.model.constants().gamma;
    if (!(gamma_true < 0.5))
        throw ConfigError("estimator comparison requires gamma < 1/2 (PWM normality range)");
    std::vector<CompareCell> cells;
    for (std::uint64_t N : n_grid) {
        ExperimentConfig cfg = base;
        cfg.N = N;
        ExperimentResult res = run_experiment(cfg);
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
            cells.push_back({N, cfg.methods[mi], res.metrics[mi].rmse, res.aborted});
    }
    return cells;
}

SweepResult threshold_sweep(const ExperimentConfig& config) {
    SweepResult result;
    result.levels = config.threshold.sweep_levels;
    if (result.levels.empty()) {
        result.levels.resize(50);
        for (int i = 0; i < 50; ++i) result.levels[i] = 0.5 + i / 100.0;
    }
    DesignParams design = derive_design(config);
    const std::size_t L = result.levels.size();
    const std::size_t M = config.methods.size();
    if (M == 0) throw ConfigError("threshold_sweep: no methods configured");

    // levels whose quantile is nonpositive (e.g. the median of a Student-t)
    // cannot carry a log-excess fit; their cells stay empty
    std::vector<double> thresholds(L);
    std::vector<bool> usable(L);
    for (std::size_t l = 0; l < L; ++l) {
        thresholds[l] = config.model.quantile(result.levels[l]);
        usable[l] = thresholds[l] > 0.0;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> gamma_cells(config.R,
                                                 std::vector<double>(L * M, nan));

    parallel_for(config.R, config.jobs, [&](std::uint64_t rep) {
        std::uint64_t rep_seed = derive_seed(config.master_seed, rep);
        std::vector<double> values = simulate_values(config, derive_seed(rep_seed, kTagData));
        InMemorySource source{std::span<const double>(values)};
        SubsampleSet set = draw_subsamples(
            source, {design.n, design.K, derive_seed(rep_seed, kTagSubsample)});
        // sort each subsample once; each level's exceedance set is a suffix
        std::vector<std::vector<double>> sorted(set.K);
        for (std::uint64_t k = 0; k < set.K; ++k) {
            sorted[k] = set.values[k];
            std::sort(sorted[k].begin(), sorted[k].end());
        }
        for (std::size_t l = 0; l < L; ++l) {
            if (!usable[l]) continue;
            double u = thresholds[l];
            for (std::size_t m = 0; m < M; ++m) {
                double gamma_sum = 0.0;
                bool ok = true;
                for (std::uint64_t k = 0; k < set.K && ok; ++k) {
                    auto it = std::upper_bound(sorted[k].begin(), sorted[k].end(), u);
                    std::span<const double> exceed(
                        sorted[k].data() + (it - sorted[k].begin()),
                        static_cast<std::size_t>(sorted[k].end() - it));
                    try {
                        gamma_sum +=
                            estimate_subsample(exceed, u, config.methods[m]).gamma_hat;
                    } catch (const DegeneracyError&) {
                        ok = false;
                    }
                }
                if (ok)
                    gamma_cells[rep][l * M + m] = gamma_sum / static_cast<double>(set.K);
            }
        }
    });

    double gamma_true = config.model.constants().gamma;
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t m = 0; m < M; ++m) {
            KahanSum sq;
            std::uint64_t used = 0;
            for (std::uint64_t rep = 0; rep < config.R; ++rep) {
                double g = gamma_cells[rep][l * M + m];
                if (std::isnan(g)) continue;
                ++used;
                double e = g - gamma_true;
                sq.add(e * e);
            }
            SweepCell cell;
            cell.level = result.levels[l];
            cell.method = config.methods[m];
            cell.replications_used = used;
            cell.aborted = config.R - used;
            cell.rmse = used ? std::sqrt(sq.value() / static_cast<double>(used)) : nan;
            result.cells.push_back(cell);
        }
    }
    for (std::size_t m = 0; m < M; ++m) {
        SweepResult::Best best{config.methods[m], 0.0, std::numeric_limits<double>::infinity()};
        for (std::size_t l = 0; l < L; ++l) {
            const SweepCell& cell = result.cells[l * M + m];
            if (!std::isnan(cell.rmse) && cell.rmse < best.rmse) {
                best.rmse = cell.rmse;
                best.level = cell.level;
            }
        }
        result.best_per_method.push_back(best);
    }
    return result;
}

std::vector<DetectionPoint> detection_study(const ExperimentConfig& base,
                                            std::span<const std::uint64_t> n_grid) {
    std::vector<DetectionPoint> points;
    for (std::uint64_t N : n_grid) {
        ExperimentConfig cfg = base;
        cfg.N = N;
        DesignParams design = derive_design(cfg);
        double tau_detect = 1.0 / static_cast<double>(N);

        struct Rep {
            double pi = 0;
            double injected = 0;
            double flagged = 0;
            bool aborted = false;
        };
        std::vector<Rep> reps(cfg.R);
        parallel_for(cfg.R, cfg.jobs, [&](std::uint64_t rep) {
            std::uint64_t rep_seed = derive_seed(cfg.master_seed, rep);
            std::vector<double> values = simulate_values(cfg, derive_seed(rep_seed, kTagData));
            InjectionResult injected =
                inject_outliers(values, design.n, design.K, cfg.model, cfg.outliers,
                                derive_seed(rep_seed, kTagOutliers));
            InMemorySource source{std::span<const double>(values)};
            SubsampleSet set = draw_subsamples(
                source, {design.n, design.K, derive_seed(rep_seed, kTagSubsample)});
            try {
                AmlEstimate est = averaged_estimate(set, design.threshold, Method::Aml);
                double q_hat = quantile_bound(est, tau_detect);
                SuspectedSet suspected = screen_values(values, std::nullopt, q_hat);
                reps[rep].pi = detection_rate(suspected.indices, injected.indices);
                reps[rep].flagged = static_cast<double>(suspected.flagged_total);
                reps[rep].injected = static_cast<double>(injected.indices.size());
            } catch (const DegeneracyError&) {
                reps[rep].aborted = true;
            }
        });

        DetectionPoint point;
        point.N = N;
        KahanSum pi_sum, inj_sum, flag_sum;
        std::uint64_t used = 0;
        for (const auto& r : reps) {
            if (r.aborted) {
                ++point.aborted;
                continue;
            }
            ++used;
            pi_sum.add(r.pi);
            inj_sum.add(r.injected);
            flag_sum.add(r.flagged);
        }
        if (20 * point.aborted > cfg.R)
            throw DegeneracyError("detection_study: more than 5% of replications aborted");
        if (used) {
            point.mean_pi = pi_sum.value() / static_cast<double>(used);
            point.mean_injected = inj_sum.value() / static_cast<double>(used);
            point.mean_flagged = flag_sum.value() / static_cast<double>(used);
        }
        points.push_back(point);
    }
    return points;
}

double sample_quantile_interpolated(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("sample_quantile_interpolated: empty input");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double h = p * (static_cast<double>(values.size()) - 1.0);
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= values.size() - 1) return values.back();
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<ContaminationPoint> contamination_robustness(const ExperimentConfig& base,
                                                         std::span<const double> co_grid) {
    std::vector<ContaminationPoint> points;
    for (double c_o : co_grid) {
        ExperimentConfig cfg = base;
        cfg.outliers.c_o = c_o;
        if (cfg.methods.empty()) cfg.methods = {Method::Aml};
        ExperimentResult res = run_experiment(cfg);

        ContaminationPoint point;
        point.c_o = c_o;
        point.aborted = res.aborted;
        std::uint64_t zero_hits = 0, used = 0;
        KahanSum exact;
        for (const auto& r : res.replications) {
            if (r.aborted) continue;
            ++used;
            point.gamma_hats.push_back(r.by_method[0].gamma_hat);
            if (r.sampled_outliers == 0) ++zero_hits;
            exact.add(r.zero_contamination_prob);
        }
        if (used) {
            point.zero_contamination_freq =
                static_cast<double>(zero_hits) / static_cast<double>(used);
            point.zero_contamination_exact = exact.value() / static_cast<double>(used);
            point.median = sample_quantile_interpolated(point.gamma_hats, 0.5);
            point.iqr = sample_quantile_interpolated(point.gamma_hats, 0.75) -
                        sample_quantile_interpolated(point.gamma_hats, 0.25);
        }
        points.push_back(point);
    }
    return points;
}

} // namespace aml
