#include "aml/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aml/errors.hpp"

namespace aml {

Method parse_method(std::string_view name) {
    if (name == "aml") return Method::Aml;
    if (name == "amo") return Method::Amo;
    if (name == "apwm") return Method::Apwm;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected aml, amo or apwm)");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Aml: return "aml";
        case Method::Amo: return "amo";
        case Method::Apwm: return "apwm";
    }
    return "?";
}

double threshold_level(std::uint64_t n, double gamma, double delta, std::optional<double> h) {
    if (n < 2) throw ConfigError("threshold_level: n must be >= 2");
    if (!(gamma > 0.0) || !(delta > 0.0))
        throw ConfigError("threshold_level: gamma and delta must be positive");
    double hh = h ? *h : 0.8 * delta;
    if (!(hh > 0.0)) throw ConfigError("threshold_level: h must be positive");
    return 1.0 - std::pow(static_cast<double>(n), -1.0 / (1.0 + hh * gamma));
}

std::uint64_t subsample_count(std::uint64_t n, double c_k, double gamma, double delta) {
    if (n < 2) throw ConfigError("subsample_count: n must be >= 2");
    if (!(c_k > 0.0) || !(c_k < 1.0)) throw ConfigError("subsample_count: C_K must be in (0,1)");
    if (!(gamma > 0.0) || !(delta > 0.0))
        throw ConfigError("subsample_count: gamma and delta must be positive");
    double exponent = c_k * delta / (1.0 / gamma + delta);
    double k = std::floor(std::pow(static_cast<double>(n), exponent));
    return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
}

double empirical_quantile(std::span<const double> values, double level) {
    if (values.empty()) throw DataError("empirical_quantile: empty input");
    if (!(level > 0.0) || !(level < 1.0))
        throw ConfigError("empirical_quantile: level must be in (0,1)");
    std::size_t m = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(m)));
    if (rank < 1) rank = 1;
    if (rank > m) rank = m;
    std::vector<double> work(values.begin(), values.end());
    std::nth_element(work.begin(), work.begin() + (rank - 1), work.end());
    return work[rank - 1];
}

SubsampleEstimate mle_subsample(std::span<const double> values, double u) {
    if (!(u > 0.0)) throw ConfigError("mle_subsample: threshold u must be positive");
    double sum = 0.0;
    std::uint64_t count = 0;
    for (double x : values) {
        if (x > u) {
            sum += std::log(x / u);
            ++count;
        }
    }
    if (count == 0)
        throw NoExceedancesError("no observation strictly exceeds u=" + std::to_string(u));
    return {sum / static_cast<double>(count), count, u, Method::Aml};
}

double moment_gamma(double m1, double m2) {
    if (!(m2 > 0.0) || m1 < 0.0 || !(m1 * m1 < m2))
        throw DegenerateStatisticError("moment estimator needs M1 >= 0 and M1^2 < M2");
    return m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2);
}

SubsampleEstimate moment_subsample(std::span<const double> values, double u) {
    if (!(u > 0.0)) throw ConfigError("moment_subsample: threshold u must be positive");
    double s1 = 0.0, s2 = 0.0;
    std::uint64_t count = 0;
    for (double x : values) {
        if (x > u) {
            double le = std::log(x / u);
            s1 += le;
            s2 += le * le;
            ++count;
        }
    }
    if (count == 0)
        throw NoExceedancesError("no observation strictly exceeds u=" + std::to_string(u));
    if (count < 2) throw DegenerateStatisticError("moment estimator needs >= 2 exceedances");
    double m1 = s1 / static_cast<double>(count);
    double m2 = s2 / static_cast<double>(count);
    return {moment_gamma(m1, m2), count, u, Method::Amo};
}

double pwm_gamma(double b0, double b1) {
    if (!(b1 > 0.0) || !(b0 > 2.0 * b1))
        throw DegenerateStatisticError("pwm estimator needs b0 > 2*b1 > 0");
    return 2.0 - b0 / (b0 - 2.0 * b1);
}

SubsampleEstimate pwm_subsample(std::span<const double> values, double u) {
    if (!(u > 0.0)) throw ConfigError("pwm_subsample: threshold u must be positive");
    std::vector<double> excess;
    for (double x : values)
        if (x > u) excess.push_back(x - u);
    if (excess.empty())
        throw NoExceedancesError("no observation strictly exceeds u=" + std::to_string(u));
    std::uint64_t m = excess.size();
    if (m < 2) throw DegenerateStatisticError("pwm estimator needs >= 2 exceedances");
    std::sort(excess.begin(), excess.end());
    double b0 = 0.0, b1 = 0.0;
    for (std::uint64_t i = 1; i <= m; ++i) {
        b0 += excess[i - 1];
        b1 += excess[i - 1] * static_cast<double>(m - i) / static_cast<double>(m - 1);
    }
    b0 /= static_cast<double>(m);
    b1 /= static_cast<double>(m);
    return {pwm_gamma(b0, b1), m, u, Method::Apwm};
}

SubsampleEstimate estimate_subsample(std::span<const double> values, double u, Method method) {
    switch (method) {
        case Method::Aml: return mle_subsample(values, u);
        case Method::Amo: return moment_subsample(values, u);
        case Method::Apwm: return pwm_subsample(values, u);
    }
    throw ConfigError("estimate_subsample: bad method");
}

namespace {

AmlEstimate combine(const SubsampleSet& subsamples, std::vector<SubsampleEstimate> per,
                    Method method) {
    AmlEstimate est;
    est.per_subsample = std::move(per);
    est.n = subsamples.n;
    est.K = subsamples.K;
    est.method = method;
    double gamma_sum = 0.0;
    double threshold_sum = 0.0;
    for (const auto& s : est.per_subsample) {
        gamma_sum += s.gamma_hat;
        threshold_sum += s.threshold;
        est.total_exceedances += s.exceedance_count;
    }
    double k = static_cast<double>(est.per_subsample.size());
    est.gamma_hat = gamma_sum / k;
    est.threshold = threshold_sum / k;
    est.alpha_u_hat = static_cast<double>(est.total_exceedances) /
                      (static_cast<double>(est.n) * static_cast<double>(est.K));
    return est;
}

} // namespace

AmlEstimate averaged_estimate(const SubsampleSet& subsamples, double u, Method method) {
    if (subsamples.K == 0 || subsamples.values.size() != subsamples.K)
        throw ConfigError("averaged_estimate: malformed subsample set");
    std::vector<SubsampleEstimate> per;
    per.reserve(subsamples.K);
    for (std::uint64_t k = 0; k < subsamples.K; ++k) {
        try {
            per.push_back(estimate_subsample(subsamples.values[k], u, method));
        } catch (const NoExceedancesError& e) {
            throw NoExceedancesError("subsample " + std::to_string(k) + ": " + e.what());
        } catch (const DegenerateStatisticError& e) {
            throw DegenerateStatisticError("subsample " + std::to_string(k) + ": " + e.what());
        }
    }
    AmlEstimate est = combine(subsamples, std::move(per), method);
    est.threshold = u; // single global threshold, bit-exact
    return est;
}

AmlEstimate averaged_estimate_per_subsample(const SubsampleSet& subsamples, double level,
                                            Method method) {
    if (subsamples.K == 0 || subsamples.values.size() != subsamples.K)
        throw ConfigError("averaged_estimate: malformed subsample set");
    std::vector<SubsampleEstimate> per;
    per.reserve(subsamples.K);
    for (std::uint64_t k = 0; k < subsamples.K; ++k) {
        double u_k = empirical_quantile(subsamples.values[k], level);
        if (!(u_k > 0.0))
            throw DegeneracyError("subsample " + std::to_string(k) +
                                  ": empirical threshold is not positive; shift the data");
        try {
            per.push_back(estimate_subsample(subsamples.values[k], u_k, method));
        } catch (const NoExceedancesError& e) {
            throw NoExceedancesError("subsample " + std::to_string(k) + ": " + e.what());
        } catch (const DegenerateStatisticError& e) {
            throw DegenerateStatisticError("subsample " + std::to_string(k) + ": " + e.what());
        }
    }
    return combine(subsamples, std::move(per), method);
}

} // namespace aml
