#include "aml/detect.hpp"

#include "aml/errors.hpp"

namespace aml {

namespace {

struct Screener {
    std::optional<double> lower, upper;
    std::uint64_t max_stored;
    SuspectedSet out;

    void visit(std::uint64_t index, double value) {
        bool flag = (upper && value > *upper) || (lower && value < *lower);
        if (flag) {
            ++out.flagged_total;
            if (out.indices.size() < max_stored) {
                out.indices.push_back(index);
                out.values.push_back(value);
            } else {
                out.truncated = true;
            }
        }
        ++out.scanned;
    }
};

} // namespace

SuspectedSet screen(const DatasetSource& source, const NormalRange& range,
                    const ScreenOptions& opts) {
    if (!range.lower_bound && !range.upper_bound)
        throw ConfigError("screen: the range needs at least one finite bound");
    Screener s{range.lower_bound, range.upper_bound, opts.max_stored, {}};
    source.stream_scan([&](std::uint64_t i, double v) { s.visit(i, v); });
    s.out.lower_bound = range.lower_bound;
    s.out.upper_bound = range.upper_bound;
    return std::move(s.out);
}

SuspectedSet screen_values(std::span<const double> values, std::optional<double> lower,
                           std::optional<double> upper, const ScreenOptions& opts) {
    if (!lower && !upper)
        throw ConfigError("screen: the range needs at least one finite bound");
    Screener s{lower, upper, opts.max_stored, {}};
    for (std::uint64_t i = 0; i < values.size(); ++i) s.visit(i, values[i]);
    s.out.lower_bound = lower;
    s.out.upper_bound = upper;
    return std::move(s.out);
}

double detection_rate(std::span<const std::uint64_t> detected,
                      std::span<const std::uint64_t> truth) {
    std::size_t i = 0, j = 0, both = 0, either = 0;
    while (i < detected.size() && j < truth.size()) {
        ++either;
        if (detected[i] == truth[j]) {
            ++both;
            ++i;
            ++j;
        } else if (detected[i] < truth[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    either += (detected.size() - i) + (truth.size() - j);
    if (either == 0) return 1.0; // nothing injected, nothing flagged
    return static_cast<double>(both) / static_cast<double>(either);
}

} // namespace aml
