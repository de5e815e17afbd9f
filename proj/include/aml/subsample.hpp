#pragma once

#include <cstdint>
#include <vector>

#include "aml/dataset.hpp"

namespace aml {

/// K subsamples of size n, drawn with replacement. Memory of a draw is
/// O(n*K) values regardless of the source size.
struct SubsamplePlan {
    std::uint64_t n = 0;
    std::uint64_t K = 0;
    std::uint64_t seed = 0;
};

struct SubsampleSet {
    std::uint64_t n = 0;
    std::uint64_t K = 0;
    /// K sequences of n values, in draw order.
    std::vector<std::vector<double>> values;
    /// Matching record indices in [0, N).
    std::vector<std::vector<std::uint64_t>> source_indices;
};

/// Simple random subsampling with replacement: index (k, i) is uniform on
/// {0,...,N-1}, generated by the counter-based RNG keyed on
/// (plan.seed, subsample k, position i), so the draw is deterministic in
/// (source contents, plan.seed) and identical across source kinds holding the
/// same values. Values are fetched by direct seek for seekable sources and by
/// a single sequential pass over the sorted index multiset otherwise; output
/// order restores the original draw order.
SubsampleSet draw_subsamples(const DatasetSource& source, const SubsamplePlan& plan);

} // namespace aml
