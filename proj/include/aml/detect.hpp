#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aml/dataset.hpp"
#include "aml/inference.hpp"

namespace aml {

struct ScreenOptions {
    /// Stop storing flagged records beyond this many (the scan still counts
    /// them and sets `truncated`).
    std::uint64_t max_stored = 10'000'000;
};

/// Records violating a normal range (strictly above the upper bound or
/// strictly below the lower one), in index order.
struct SuspectedSet {
    std::vector<std::uint64_t> indices;
    std::vector<double> values;
    std::uint64_t flagged_total = 0; // >= indices.size() when truncated
    std::uint64_t scanned = 0;       // N
    bool truncated = false;
    std::optional<double> upper_bound;
    std::optional<double> lower_bound;
};

/// One sequential pass over the source; memory O(|flagged|).
SuspectedSet screen(const DatasetSource& source, const NormalRange& range,
                    const ScreenOptions& opts = {});

/// Same screening on an in-memory span (used by the simulation engine).
SuspectedSet screen_values(std::span<const double> values, std::optional<double> lower,
                           std::optional<double> upper, const ScreenOptions& opts = {});

/// Jaccard detection rate |detected ∩ truth| / |detected ∪ truth|; both
/// arguments must be sorted strictly increasing. Both empty -> 1.
double detection_rate(std::span<const std::uint64_t> detected,
                      std::span<const std::uint64_t> truth);

} // namespace aml
