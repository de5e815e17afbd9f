#include "aml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "aml/errors.hpp"
#include "aml/rng.hpp"

namespace aml {

const RecordCount& DatasetSource::count_records() const {
    if (!count_cache_) {
        if (auto fast = do_fast_count())
            count_cache_ = *fast;
        else
            count_cache_ = do_scan(nullptr);
    }
    return *count_cache_;
}

void DatasetSource::stream_scan(const ValueVisitor& visit) const {
    RecordCount c = do_scan(&visit);
    if (!count_cache_) count_cache_ = c;
}

double DatasetSource::do_read_at(std::uint64_t) const {
    throw DataError("source kind does not support random access");
}

std::vector<double> DatasetSource::fetch(std::span<const std::uint64_t> sorted_indices) const {
    std::vector<double> out;
    out.reserve(sorted_indices.size());
    if (sorted_indices.empty()) return out;
    if (!std::is_sorted(sorted_indices.begin(), sorted_indices.end()))
        throw ConfigError("fetch: indices must be sorted non-decreasing");
    if (sorted_indices.back() >= count_records().valid)
        throw ConfigError("fetch: index beyond record count");

    if (supports_seek()) {
        double last_value = 0.0;
        std::uint64_t last_index = ~0ull;
        for (std::uint64_t idx : sorted_indices) {
            if (idx != last_index) {
                last_value = do_read_at(idx);
                last_index = idx;
            }
            out.push_back(last_value);
        }
        return out;
    }

    // Non-seekable: satisfy the whole sorted batch in one sequential pass.
    std::size_t pos = 0;
    ValueVisitor match = [&](std::uint64_t idx, double v) {
        while (pos < sorted_indices.size() && sorted_indices[pos] == idx) {
            out.push_back(v);
            ++pos;
        }
    };
    RecordCount c = do_scan(&match);
    if (!count_cache_) count_cache_ = c;
    if (pos != sorted_indices.size())
        throw DataError("fetch: source ended before all requested records were found");
    return out;
}

// ---------------------------------------------------------------------------
// InMemorySource

InMemorySource::InMemorySource(std::vector<double> values)
    : owned_(std::move(values)), view_(owned_) {}

InMemorySource::InMemorySource(std::span<const double> view) : view_(view) {}

RecordCount InMemorySource::do_scan(const ValueVisitor* visit) const {
    if (visit)
        for (std::uint64_t i = 0; i < view_.size(); ++i) (*visit)(i, view_[i]);
    return {view_.size(), 0};
}

std::optional<RecordCount> InMemorySource::do_fast_count() const {
    return RecordCount{view_.size(), 0};
}

double InMemorySource::do_read_at(std::uint64_t index) const { return view_[index]; }

// ---------------------------------------------------------------------------
// FixedWidthBinarySource

namespace {

double decode_f64(const unsigned char* bytes, Endian endian) {
    std::uint64_t u = 0;
    if (endian == Endian::Little)
        for (int i = 7; i >= 0; --i) u = (u << 8) | bytes[i];
    else
        for (int i = 0; i < 8; ++i) u = (u << 8) | bytes[i];
    double d;
    std::memcpy(&d, &u, sizeof(d));
    return d;
}

} // namespace

FixedWidthBinarySource::FixedWidthBinarySource(std::string path, std::uint32_t record_width,
                                               Endian endian)
    : path_(std::move(path)), width_(record_width), endian_(endian) {
    if (width_ < 8) throw ConfigError("fixed-width binary: record width must be >= 8");
}

std::optional<RecordCount> FixedWidthBinarySource::do_fast_count() const {
    std::error_code ec;
    auto size = std::filesystem::file_size(path_, ec);
    if (ec) throw DataError("cannot stat '" + path_ + "': " + ec.message());
    return RecordCount{size / width_, 0};
}

RecordCount FixedWidthBinarySource::do_scan(const ValueVisitor* visit) const {
    RecordCount total = *do_fast_count();
    if (!visit) return total;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path_ + "'");
    std::vector<unsigned char> buf(static_cast<std::size_t>(width_) * 4096);
    std::uint64_t index = 0;
    while (index < total.valid) {
        std::uint64_t want = std::min<std::uint64_t>(4096, total.valid - index);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(want * width_));
        if (static_cast<std::uint64_t>(in.gcount()) != want * width_)
            throw DataError("read error in '" + path_ + "' near record " +
                            std::to_string(index));
        for (std::uint64_t r = 0; r < want; ++r, ++index)
            (*visit)(index, decode_f64(buf.data() + r * width_, endian_));
    }
    return total;
}

double FixedWidthBinarySource::do_read_at(std::uint64_t index) const {
    if (!read_handle_.is_open()) {
        read_handle_.open(path_, std::ios::binary);
        if (!read_handle_) throw DataError("cannot open '" + path_ + "'");
    }
    read_handle_.clear();
    read_handle_.seekg(static_cast<std::streamoff>(index) * width_);
    unsigned char bytes[8];
    read_handle_.read(reinterpret_cast<char*>(bytes), 8);
    if (read_handle_.gcount() != 8)
        throw DataError("read error in '" + path_ + "' at record " + std::to_string(index));
    return decode_f64(bytes, endian_);
}

// ---------------------------------------------------------------------------
// DelimitedTextSource

DelimitedTextSource::DelimitedTextSource(std::string path, Column column, bool has_header,
                                         char delimiter, std::vector<std::string> missing_tokens)
    : path_(std::move(path)),
      column_(std::move(column)),
      has_header_(has_header),
      delimiter_(delimiter),
      missing_tokens_(std::move(missing_tokens)) {
    if (!has_header_ && std::holds_alternative<std::string>(column_))
        throw ConfigError("column selection by name requires a header row");
}

namespace {

std::string_view trim_blanks(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// k-th delimited field of the line, or nullopt when the line is too short.
std::optional<std::string_view> field_at(std::string_view line, char delim, std::uint32_t k) {
    std::size_t start = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) return std::nullopt;
        start = pos + 1;
    }
    auto end = line.find(delim, start);
    if (end == std::string_view::npos) end = line.size();
    return line.substr(start, end - start);
}

} // namespace

std::uint32_t DelimitedTextSource::resolve_column(const std::string& header_line) const {
    if (auto* idx = std::get_if<std::uint32_t>(&column_)) return *idx;
    const std::string& name = std::get<std::string>(column_);
    std::uint32_t k = 0;
    std::string_view rest = header_line;
    while (true) {
        auto pos = rest.find(delimiter_);
        std::string_view field = trim_blanks(rest.substr(0, pos));
        if (field == name) return k;
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
        ++k;
    }
    throw ConfigError("column '" + name + "' not found in header of '" + path_ + "'");
}

RecordCount DelimitedTextSource::do_scan(const ValueVisitor* visit) const {
    std::ifstream in(path_);
    if (!in) throw DataError("cannot open '" + path_ + "'");
    RecordCount count;
    std::string line;
    std::uint64_t line_no = 0;
    std::uint32_t col = std::holds_alternative<std::uint32_t>(column_)
                            ? std::get<std::uint32_t>(column_)
                            : 0;
    bool header_pending = has_header_;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header_pending) {
            header_pending = false;
            col = resolve_column(line);
            continue;
        }
        if (line.empty()) continue; // blank line, not a record
        auto field = field_at(line, delimiter_, col);
        bool ok = false;
        double value = 0.0;
        if (field) {
            std::string_view tok = trim_blanks(*field);
            bool is_missing = false;
            for (const auto& m : missing_tokens_)
                if (tok == m) { is_missing = true; break; }
            if (!is_missing) {
                auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
                // non-finite tokens ("nan", "inf") are excluded like unparseable ones
                ok = res.ec == std::errc{} && res.ptr == tok.data() + tok.size() &&
                     std::isfinite(value);
            }
        }
        if (ok) {
            if (visit) (*visit)(count.valid, value);
            ++count.valid;
        } else {
            ++count.missing;
        }
    }
    if (in.bad())
        throw DataError("read error in '" + path_ + "' near line " + std::to_string(line_no) +
                        " (" + std::to_string(count.valid) + " records scanned)");
    return count;
}

// ---------------------------------------------------------------------------
// describe

Description describe(const DatasetSource& source, const DescribeOptions& opts) {
    const RecordCount& rc = source.count_records();
    if (rc.valid < 2) throw DataError("describe: need at least 2 valid records");

    Description d;
    d.missing = rc.missing;

    // One pass: min/max and central moments up to order 4 (online update).
    double mean = 0, m2 = 0, m3 = 0, m4 = 0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    std::uint64_t n = 0;

    bool exact_median = rc.valid <= opts.exact_median_cap;
    std::vector<double> kept;
    if (exact_median) kept.reserve(rc.valid);

    source.stream_scan([&](std::uint64_t, double x) {
        ++n;
        double delta = x - mean;
        double delta_n = delta / static_cast<double>(n);
        double delta_n2 = delta_n * delta_n;
        double term1 = delta * delta_n * static_cast<double>(n - 1);
        mean += delta_n;
        m4 += term1 * delta_n2 * (static_cast<double>(n) * n - 3.0 * n + 3.0) +
              6.0 * delta_n2 * m2 - 4.0 * delta_n * m3;
        m3 += term1 * delta_n * (static_cast<double>(n) - 2.0) - 3.0 * delta_n * m2;
        m2 += term1;
        if (x < mn) mn = x;
        if (x > mx) mx = x;
        if (exact_median) kept.push_back(x);
    });

    d.count = n;
    d.mean = mean;
    d.min = mn;
    d.max = mx;
    double var = m2 / static_cast<double>(n);
    if (var <= 0.0) throw DegeneracyError("describe: zero variance, kurtosis undefined");
    d.kurtosis = (m4 / static_cast<double>(n)) / (var * var);

    auto median_of = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        std::size_t m = v.size();
        return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    };

    if (exact_median) {
        d.median = median_of(kept);
    } else {
        // Approximate: uniform with-replacement subsample, then exact median of it.
        std::uint64_t m = opts.median_subsample;
        std::vector<std::uint64_t> idx(m);
        for (std::uint64_t i = 0; i < m; ++i) idx[i] = rng_index(opts.seed, 0, i, n);
        std::sort(idx.begin(), idx.end());
        std::vector<double> sub = source.fetch(idx);
        d.median = median_of(sub);
        d.median_approximate = true;
    }
    return d;
}

} // namespace aml
