#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aml {

struct StudentT {
    int dof; // v >= 1
};
struct Pareto {
    double scale; // x_m > 0
    double shape; // alpha > 0
};
struct Frechet {
    double shape; // alpha > 0
};

/// Second-order tail constants: P(X > u) = beta * u^{-1/gamma} *
/// (1 + C u^{-delta} + o(u^{-delta})).
struct ModelConstants {
    double gamma;
    double beta;
    double delta;
    double c_second_order;
};

/// A parametric heavy-tailed law (Student-t, Pareto or Frechet) with exact
/// tail probabilities, quantiles and a counter-based sampler. Used both as
/// simulation truth and as the oracle for relative-accuracy and detection
/// metrics. All operations are pure.
class TailModel {
public:
    explicit TailModel(StudentT law);
    explicit TailModel(Pareto law, std::optional<double> delta_override = std::nullopt);
    explicit TailModel(Frechet law);

    /// P(X > x). Throws ConfigError when x is outside the support
    /// (Pareto: x >= x_m, Frechet: x > 0).
    double tail_prob(double x) const;

    /// The x with F(x) = p, 0 < p < 1. Pareto/Frechet and Student-t with
    /// v in {1,2} use closed forms; general Student-t is solved by Brent
    /// bracketing on tail_prob (inverse-consistent to relative 1e-9).
    double quantile(double p) const;

    /// The i-th i.i.d. draw of the (seed, stream) sample stream. Pareto,
    /// Frechet and t(1), t(2) use inversion; t(v >= 3) uses the normal /
    /// chi-square ratio with the chi-square split into exponentials.
    double sample_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t i) const;

    /// count i.i.d. draws; deterministic in (seed, stream).
    std::vector<double> sample(std::uint64_t seed, std::uint64_t stream,
                               std::size_t count) const;

    /// Condition-style constants. delta_override is honored for Pareto only
    /// (its tail is exact, so delta is a free design parameter; default 5).
    ModelConstants constants(std::optional<double> delta_override = std::nullopt) const;

    /// Smallest x accepted by tail_prob.
    double support_lower() const;

    /// Round-trippable CLI/config form: "t(2)", "pareto(2,1)", "frechet(3)",
    /// with an optional " delta=..." suffix for Pareto.
    std::string spec_string() const;
    static TailModel parse(std::string_view spec);

    bool is_student_t() const { return std::holds_alternative<StudentT>(law_); }
    bool is_pareto() const { return std::holds_alternative<Pareto>(law_); }
    bool is_frechet() const { return std::holds_alternative<Frechet>(law_); }

private:
    std::variant<StudentT, Pareto, Frechet> law_;
    std::optional<double> pareto_delta_;
};

} // namespace aml
