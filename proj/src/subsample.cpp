#include "aml/subsample.hpp"

#include <algorithm>
#include <numeric>

#include "aml/errors.hpp"
#include "aml/rng.hpp"

namespace aml {

SubsampleSet draw_subsamples(const DatasetSource& source, const SubsamplePlan& plan) {
    if (plan.n < 1 || plan.K < 1)
        throw ConfigError("subsample plan: n and K must be >= 1");
    const std::uint64_t N = source.count_records().valid;
    if (N == 0) throw DataError("draw_subsamples: source has no valid records");

    const std::uint64_t total = plan.n * plan.K;
    std::vector<std::uint64_t> flat(total);
    for (std::uint64_t k = 0; k < plan.K; ++k)
        for (std::uint64_t i = 0; i < plan.n; ++i)
            flat[k * plan.n + i] = rng_index(plan.seed, k, i, N);

    // Fetch wants sorted indices; remember each slot to restore draw order.
    std::vector<std::uint64_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::uint64_t a, std::uint64_t b) { return flat[a] < flat[b]; });
    std::vector<std::uint64_t> sorted(total);
    for (std::uint64_t s = 0; s < total; ++s) sorted[s] = flat[order[s]];

    std::vector<double> fetched = source.fetch(sorted);

    SubsampleSet set;
    set.n = plan.n;
    set.K = plan.K;
    set.values.assign(plan.K, std::vector<double>(plan.n));
    set.source_indices.assign(plan.K, std::vector<std::uint64_t>(plan.n));
    for (std::uint64_t s = 0; s < total; ++s) {
        std::uint64_t slot = order[s];
        set.values[slot / plan.n][slot % plan.n] = fetched[s];
    }
    for (std::uint64_t k = 0; k < plan.K; ++k)
        for (std::uint64_t i = 0; i < plan.n; ++i)
            set.source_indices[k][i] = flat[k * plan.n + i];
    return set;
}

} // namespace aml
