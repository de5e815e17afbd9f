#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace aml {

struct RecordCount {
    std::uint64_t valid = 0;   // N: parseable, non-missing records
    std::uint64_t missing = 0; // excluded records (missing token / unparseable)
};

using ValueVisitor = std::function<void(std::uint64_t, double)>;

/// An in-memory or on-disk sequence of real values. Record indices count
/// valid values only, in storage order, starting at 0; two scans of an
/// unmodified source yield identical sequences. A single source handle is
/// driven by one scanner at a time.
class DatasetSource {
public:
    virtual ~DatasetSource() = default;

    /// {N, missing}; computed lazily and cached.
    const RecordCount& count_records() const;

    /// Visits every valid value exactly once, in storage order, with O(1)
    /// memory beyond the visitor's state.
    void stream_scan(const ValueVisitor& visit) const;

    /// Values for the given record indices, which must be sorted
    /// non-decreasing (duplicates allowed). Seekable sources read directly;
    /// text sources satisfy the whole batch in one sequential pass.
    std::vector<double> fetch(std::span<const std::uint64_t> sorted_indices) const;

    virtual bool supports_seek() const = 0;
    virtual std::string kind_name() const = 0;

private:
    virtual RecordCount do_scan(const ValueVisitor* visit) const = 0;
    /// Cheap count when available without a scan (fixed-width binary).
    virtual std::optional<RecordCount> do_fast_count() const { return std::nullopt; }
    virtual double do_read_at(std::uint64_t index) const;

    mutable std::optional<RecordCount> count_cache_;
};

/// Values held in memory; either owned or a non-owning view (the caller
/// keeps the viewed buffer alive).
class InMemorySource final : public DatasetSource {
public:
    explicit InMemorySource(std::vector<double> values);
    explicit InMemorySource(std::span<const double> view);

    bool supports_seek() const override { return true; }
    std::string kind_name() const override { return "in-memory"; }

private:
    RecordCount do_scan(const ValueVisitor* visit) const override;
    std::optional<RecordCount> do_fast_count() const override;
    double do_read_at(std::uint64_t index) const override;

    std::vector<double> owned_;
    std::span<const double> view_;
};

enum class Endian { Little, Big };

/// Headerless binary file of fixed-width records; each record's first
/// 8 bytes hold an IEEE-754 double (little-endian unless stated otherwise).
class FixedWidthBinarySource final : public DatasetSource {
public:
    explicit FixedWidthBinarySource(std::string path, std::uint32_t record_width = 8,
                                    Endian endian = Endian::Little);

    bool supports_seek() const override { return true; }
    std::string kind_name() const override { return "f64le"; }
    const std::string& path() const { return path_; }

private:
    RecordCount do_scan(const ValueVisitor* visit) const override;
    std::optional<RecordCount> do_fast_count() const override;
    double do_read_at(std::uint64_t index) const override;

    std::string path_;
    std::uint32_t width_;
    Endian endian_;
    mutable std::ifstream read_handle_;
};

/// Delimited text (CSV-like): UTF-8, single-character delimiter, optional
/// header row, column selected by 0-based index or by name. Tokens matching
/// the missing set (after trimming blanks) and unparseable numerics count
/// as missing; fully empty lines are skipped.
class DelimitedTextSource final : public DatasetSource {
public:
    using Column = std::variant<std::uint32_t, std::string>;

    DelimitedTextSource(std::string path, Column column, bool has_header,
                        char delimiter = ',',
                        std::vector<std::string> missing_tokens = {"", "NA"});

    bool supports_seek() const override { return false; }
    std::string kind_name() const override { return "csv"; }
    const std::string& path() const { return path_; }

private:
    RecordCount do_scan(const ValueVisitor* visit) const override;
    std::uint32_t resolve_column(const std::string& header_line) const;

    std::string path_;
    Column column_;
    bool has_header_;
    char delimiter_;
    std::vector<std::string> missing_tokens_;
};

struct DescribeOptions {
    /// Sources with more than this many valid records get an approximate
    /// median from a uniform subsample instead of a full sort.
    std::uint64_t exact_median_cap = 1'000'000;
    std::uint64_t median_subsample = 100'000;
    std::uint64_t seed = 0x5EEDD15C;
};

struct Description {
    std::uint64_t count = 0;
    std::uint64_t missing = 0;
    double mean = 0;
    double median = 0;
    bool median_approximate = false;
    double min = 0;
    double max = 0;
    double kurtosis = 0; // non-excess: E[(X-mu)^4]/sigma^4, normal = 3
};

/// One-pass descriptive statistics (mean/min/max/kurtosis exact; median per
/// DescribeOptions). Throws DataError for N < 2 and DegeneracyError when the
/// variance is zero (kurtosis undefined).
Description describe(const DatasetSource& source, const DescribeOptions& opts = {});

} // namespace aml
