#include "aml/tail_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>

#include "aml/errors.hpp"
#include "aml/rng.hpp"
#include "aml/special_functions.hpp"

namespace aml {

namespace {

double student_tail_upper(int v, double x) {
    // P(X > x) for x >= 0. Forms are arranged to avoid cancellation at
    // large x (tail probabilities down to ~1e-15 keep full relative accuracy).
    if (x == 0.0) return 0.5;
    if (v == 1) return std::atan(1.0 / x) / std::numbers::pi;
    if (v == 2) {
        double s = std::sqrt(2.0 + x * x);
        return 1.0 / (s * (s + x));
    }
    double xb = v / (v + x * x);
    return 0.5 * regularized_incomplete_beta(0.5 * v, 0.5, xb);
}

double student_tail(int v, double x) {
    if (x >= 0.0) return student_tail_upper(v, x);
    return 1.0 - student_tail_upper(v, -x);
}

// Brent root of f on [a,b] with f(a), f(b) of opposite sign.
template <typename F>
double brent(F f, double a, double b, double fa, double fb) {
    constexpr int max_iter = 200;
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol = 2.0 * 1e-16 * std::fabs(b) + 1e-300;
        double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol || fb == 0.0) return b;
        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol) ? d : (xm > 0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    return b;
}

double student_quantile_upper(const TailModel& model, int v, double p) {
    // p > 0.5; solve tail(x) = 1-p on x > 0 with the first-order tail
    // approximation x0 = (beta * v / (1-p))^{1/v} ... actually (beta/(1-p))^gamma
    // as the bracket seed.
    double t0 = 1.0 - p;
    ModelConstants c = model.constants();
    double x0 = std::pow(c.beta / t0, c.gamma);
    double lo = 0.0, flo = 0.5 - t0; // tail(0) - t0 > 0
    double hi = std::max(x0, 1.0);
    double fhi = student_tail_upper(v, hi) - t0;
    int guard = 0;
    while (fhi > 0.0) {
        hi *= 2.0;
        fhi = student_tail_upper(v, hi) - t0;
        if (++guard > 200) throw ConfigError("student quantile: bracket expansion failed");
    }
    auto f = [&](double x) { return student_tail_upper(v, x) - t0; };
    return brent(f, lo, hi, flo, fhi);
}

} // namespace

TailModel::TailModel(StudentT law) : law_(law) {
    if (law.dof < 1) throw ConfigError("t(v): degrees of freedom must be >= 1");
}

TailModel::TailModel(Pareto law, std::optional<double> delta_override)
    : law_(law), pareto_delta_(delta_override) {
    if (!(law.scale > 0.0)) throw ConfigError("pareto(xm,alpha): xm must be positive");
    if (!(law.shape > 0.0)) throw ConfigError("pareto(xm,alpha): alpha must be positive");
    if (delta_override && !(*delta_override > 0.0))
        throw ConfigError("pareto delta override must be positive");
}

TailModel::TailModel(Frechet law) : law_(law) {
    if (!(law.shape > 0.0)) throw ConfigError("frechet(alpha): alpha must be positive");
}

double TailModel::support_lower() const {
    if (auto* p = std::get_if<Pareto>(&law_)) return p->scale;
    if (std::holds_alternative<Frechet>(law_)) return std::nextafter(0.0, 1.0);
    return -std::numeric_limits<double>::infinity();
}

double TailModel::tail_prob(double x) const {
    if (std::isnan(x)) throw ConfigError("tail_prob: x is NaN");
    if (auto* t = std::get_if<StudentT>(&law_)) return student_tail(t->dof, x);
    if (auto* p = std::get_if<Pareto>(&law_)) {
        if (x < p->scale) throw ConfigError("tail_prob: x below Pareto scale x_m");
        return std::pow(x / p->scale, -p->shape);
    }
    const auto& f = std::get<Frechet>(law_);
    if (!(x > 0.0)) throw ConfigError("tail_prob: Frechet support is x > 0");
    return -std::expm1(-std::pow(x, -f.shape));
}

double TailModel::quantile(double p) const {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("quantile: p must be in (0,1)");
    if (auto* pa = std::get_if<Pareto>(&law_))
        return pa->scale * std::pow(1.0 - p, -1.0 / pa->shape);
    if (auto* fr = std::get_if<Frechet>(&law_))
        return std::pow(-std::log(p), -1.0 / fr->shape);
    const auto& t = std::get<StudentT>(law_);
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -quantile(1.0 - p);
    if (t.dof == 1) return std::tan(std::numbers::pi * (p - 0.5));
    if (t.dof == 2) return (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));
    return student_quantile_upper(*this, t.dof, p);
}

double TailModel::sample_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t i) const {
    if (auto* t = std::get_if<StudentT>(&law_)) {
        int v = t->dof;
        if (v <= 2) return quantile(rng_unit(seed, stream, i));
        // X = Z * sqrt(v / chi2_v); chi2_v = 2*(E_1+...+E_{v/2}) for even v,
        // Z'^2 + 2*(E_1+...+E_{(v-1)/2}) for odd v.
        std::uint64_t stride = (v % 2 == 0) ? 1 + v / 2 : 2 + (v - 1) / 2;
        std::uint64_t base = i * stride;
        double z = rng_normal(seed, stream, base);
        double chi2 = 0.0;
        std::uint64_t pos = base + 1;
        if (v % 2 == 1) {
            double z1 = rng_normal(seed, stream, pos++);
            chi2 += z1 * z1;
        }
        for (int j = 0; j < v / 2; ++j) chi2 += 2.0 * rng_exponential(seed, stream, pos++);
        return z * std::sqrt(v / chi2);
    }
    return quantile(rng_unit(seed, stream, i));
}

std::vector<double> TailModel::sample(std::uint64_t seed, std::uint64_t stream,
                                      std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = sample_at(seed, stream, i);
    return out;
}

ModelConstants TailModel::constants(std::optional<double> delta_override) const {
    if (auto* t = std::get_if<StudentT>(&law_)) {
        double v = t->dof;
        double beta = std::exp(std::lgamma(0.5 * (v + 1.0)) + 0.5 * (v - 1.0) * std::log(v) -
                               0.5 * std::log(v * std::numbers::pi) - std::lgamma(0.5 * v));
        double c = -v * v * (v + 1.0) / (2.0 * (v + 2.0));
        return {1.0 / v, beta, 2.0, c};
    }
    if (auto* p = std::get_if<Pareto>(&law_)) {
        double delta = delta_override ? *delta_override : pareto_delta_.value_or(5.0);
        if (!(delta > 0.0)) throw ConfigError("pareto delta override must be positive");
        return {1.0 / p->shape, std::pow(p->scale, p->shape), delta, 0.0};
    }
    const auto& f = std::get<Frechet>(law_);
    return {1.0 / f.shape, 1.0, f.shape, -0.5};
}

namespace {

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // trim to the shortest form that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, x);
        if (std::strtod(probe, nullptr) == x) return probe;
    }
    return buf;
}

} // namespace

std::string TailModel::spec_string() const {
    if (auto* t = std::get_if<StudentT>(&law_)) return "t(" + std::to_string(t->dof) + ")";
    if (auto* p = std::get_if<Pareto>(&law_)) {
        std::string s = "pareto(" + format_number(p->scale) + "," + format_number(p->shape) + ")";
        if (pareto_delta_) s += " delta=" + format_number(*pareto_delta_);
        return s;
    }
    const auto& f = std::get<Frechet>(law_);
    return "frechet(" + format_number(f.shape) + ")";
}

namespace {

std::string strip_spaces(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

double parse_number(const std::string& s, const std::string& context) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw ConfigError("model spec: bad number '" + s + "' in " + context);
    return v;
}

} // namespace

TailModel TailModel::parse(std::string_view spec) {
    std::string s = strip_spaces(spec);
    std::optional<double> delta;
    if (auto pos = s.find("delta="); pos != std::string::npos) {
        delta = parse_number(s.substr(pos + 6), "delta suffix");
        s = s.substr(0, pos);
    }
    auto open = s.find('(');
    auto close = s.rfind(')');
    if (open == std::string::npos || close != s.size() - 1 || close <= open)
        throw ConfigError("model spec: expected t(v), pareto(xm,alpha) or frechet(alpha), got '" +
                          std::string(spec) + "'");
    std::string name = s.substr(0, open);
    std::string args = s.substr(open + 1, close - open - 1);
    if (name == "t") {
        double v = parse_number(args, "t(v)");
        if (v < 1.0 || v != std::floor(v))
            throw ConfigError("model spec: t(v) needs a positive integer v");
        if (delta) throw ConfigError("model spec: delta= is only valid for pareto");
        return TailModel(StudentT{static_cast<int>(v)});
    }
    if (name == "pareto") {
        auto comma = args.find(',');
        if (comma == std::string::npos)
            throw ConfigError("model spec: pareto needs two arguments (xm,alpha)");
        double xm = parse_number(args.substr(0, comma), "pareto xm");
        double alpha = parse_number(args.substr(comma + 1), "pareto alpha");
        return TailModel(Pareto{xm, alpha}, delta);
    }
    if (name == "frechet") {
        if (delta) throw ConfigError("model spec: delta= is only valid for pareto");
        return TailModel(Frechet{parse_number(args, "frechet alpha")});
    }
    throw ConfigError("model spec: unknown model '" + name + "'");
}

} // namespace aml
