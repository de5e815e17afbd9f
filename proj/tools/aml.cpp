// aml: extreme value index estimation for massive heavy-tailed datasets by
// averaged subsample maximum likelihood, with normal-range construction and
// full-dataset outlier screening.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "aml/dataset.hpp"
#include "aml/detect.hpp"
#include "aml/errors.hpp"
#include "aml/estimators.hpp"
#include "aml/inference.hpp"
#include "aml/report_io.hpp"
#include "aml/rng.hpp"
#include "aml/simlab.hpp"
#include "aml/subsample.hpp"
#include "aml/tail_model.hpp"

namespace {

using nlohmann::json;

struct SourceOptions {
    std::string input;
    std::string format = "f64le"; // f64le | csv
    std::string column = "0";
    char delimiter = ',';
    bool header = false;
    std::vector<std::string> missing = {"", "NA"};
};

void add_source_options(CLI::App* cmd, SourceOptions& src) {
    cmd->add_option("--input", src.input, "input data file")->required();
    cmd->add_option("--format", src.format, "input format: f64le or csv")
        ->check(CLI::IsMember({"f64le", "csv"}));
    cmd->add_option("--column", src.column, "csv column (0-based index, or name with --header)");
    cmd->add_option("--delimiter", src.delimiter, "csv delimiter (default ,)");
    cmd->add_flag("--header", src.header, "csv file has a header row");
    cmd->add_option("--missing", src.missing, "csv tokens treated as missing (default: empty, NA)");
}

json source_echo(const SourceOptions& src) {
    json j{{"input", src.input}, {"format", src.format}};
    if (src.format == "csv") {
        j["column"] = src.column;
        j["delimiter"] = std::string(1, src.delimiter);
        j["header"] = src.header;
        j["missing"] = src.missing;
    }
    return j;
}

std::unique_ptr<aml::DatasetSource> open_source(const SourceOptions& src) {
    if (src.format == "f64le")
        return std::make_unique<aml::FixedWidthBinarySource>(src.input);
    aml::DelimitedTextSource::Column column;
    bool numeric = !src.column.empty() &&
                   src.column.find_first_not_of("0123456789") == std::string::npos;
    if (numeric)
        column = static_cast<std::uint32_t>(std::stoul(src.column));
    else
        column = src.column;
    return std::make_unique<aml::DelimitedTextSource>(src.input, column, src.header,
                                                      src.delimiter, src.missing);
}

struct ThresholdSpec {
    enum class Mode { Design, PooledLevel, PerSubsample } mode = Mode::PerSubsample;
    double gamma = 0, delta = 0; // Design
    double level = 0;            // PooledLevel / PerSubsample
};

// "design:GAMMA,DELTA" | "level:P" | "per-subsample:P"; default per-subsample
// at 1 - n^{-3/5}.
ThresholdSpec parse_threshold_spec(const std::string& spec, std::uint64_t n) {
    ThresholdSpec out;
    auto level_from = [&](const std::string& s, const char* what) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw aml::ConfigError(std::string("--threshold: bad ") + what + " '" + s + "'");
        }
    };
    if (spec.empty() || spec == "per-subsample") {
        out.mode = ThresholdSpec::Mode::PerSubsample;
        out.level = 1.0 - std::pow(static_cast<double>(n), -0.6);
        return out;
    }
    if (spec.rfind("design:", 0) == 0) {
        std::string args = spec.substr(7);
        auto comma = args.find(',');
        if (comma == std::string::npos)
            throw aml::ConfigError("--threshold design:GAMMA,DELTA needs two values");
        out.mode = ThresholdSpec::Mode::Design;
        out.gamma = level_from(args.substr(0, comma), "gamma");
        out.delta = level_from(args.substr(comma + 1), "delta");
        return out;
    }
    if (spec.rfind("level:", 0) == 0) {
        out.mode = ThresholdSpec::Mode::PooledLevel;
        out.level = level_from(spec.substr(6), "level");
        return out;
    }
    if (spec.rfind("per-subsample:", 0) == 0) {
        out.mode = ThresholdSpec::Mode::PerSubsample;
        out.level = level_from(spec.substr(14), "level");
        return out;
    }
    throw aml::ConfigError("--threshold: expected design:g,d | level:p | per-subsample:p");
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        if (content.empty() || content.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw aml::DataError("cannot write '" + path + "'");
    out << content;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw aml::DataError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw aml::ConfigError("bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

// Estimation shared by `estimate` and `bound`: draws subsamples from the
// source and fits on {sign * X + shift}.
aml::AmlEstimate estimate_side(const aml::DatasetSource& source, std::uint64_t n,
                               std::uint64_t K, std::uint64_t seed, double sign, double shift,
                               const std::string& threshold_spec, aml::Method method,
                               json* echo) {
    aml::SubsampleSet set = aml::draw_subsamples(source, {n, K, seed});
    if (sign != 1.0 || shift != 0.0)
        for (auto& sub : set.values)
            for (double& x : sub) x = sign * x + shift;
    ThresholdSpec ts = parse_threshold_spec(threshold_spec, n);
    aml::AmlEstimate est;
    switch (ts.mode) {
        case ThresholdSpec::Mode::Design: {
            double level = aml::threshold_level(n, ts.gamma, ts.delta);
            std::vector<double> pooled;
            pooled.reserve(n * K);
            for (const auto& sub : set.values) pooled.insert(pooled.end(), sub.begin(), sub.end());
            double u = aml::empirical_quantile(pooled, level);
            if (!(u > 0)) throw aml::DegeneracyError("empirical threshold not positive; use --shift");
            if (echo) (*echo)["threshold"] = {{"mode", "design"}, {"gamma", ts.gamma},
                                              {"delta", ts.delta}, {"level", level}};
            est = aml::averaged_estimate(set, u, method);
            break;
        }
        case ThresholdSpec::Mode::PooledLevel: {
            std::vector<double> pooled;
            pooled.reserve(n * K);
            for (const auto& sub : set.values) pooled.insert(pooled.end(), sub.begin(), sub.end());
            double u = aml::empirical_quantile(pooled, ts.level);
            if (!(u > 0)) throw aml::DegeneracyError("empirical threshold not positive; use --shift");
            if (echo) (*echo)["threshold"] = {{"mode", "level"}, {"level", ts.level}};
            est = aml::averaged_estimate(set, u, method);
            break;
        }
        case ThresholdSpec::Mode::PerSubsample: {
            if (echo) (*echo)["threshold"] = {{"mode", "per-subsample"}, {"level", ts.level}};
            est = aml::averaged_estimate_per_subsample(set, ts.level, method);
            break;
        }
    }
    return est;
}

int run(int argc, char** argv) {
    CLI::App app{"extreme value index estimation by averaged subsample maximum likelihood"};
    app.require_subcommand(1);

    // ---- estimate ----------------------------------------------------------
    auto* est_cmd = app.add_subcommand("estimate", "estimate the extreme value index from a file");
    SourceOptions est_src;
    add_source_options(est_cmd, est_src);
    std::uint64_t est_n = 10000, est_k = 10, est_seed = 1;
    std::string est_method = "aml", est_threshold, est_out;
    double est_shift = 0.0, est_alpha = 0.05;
    est_cmd->add_option("--n", est_n, "subsample size (default 10000)");
    est_cmd->add_option("--K", est_k, "number of subsamples (default 10)");
    est_cmd->add_option("--seed", est_seed, "subsampling seed");
    est_cmd->add_option("--method", est_method, "aml | amo | apwm")
        ->check(CLI::IsMember({"aml", "amo", "apwm"}));
    est_cmd->add_option("--threshold", est_threshold,
                        "design:GAMMA,DELTA | level:P | per-subsample:P "
                        "(default per-subsample at 1-n^-3/5)");
    est_cmd->add_option("--shift", est_shift, "constant added to the data before estimation");
    est_cmd->add_option("--alpha", est_alpha, "CI level complement (default 0.05)");
    est_cmd->add_option("--out", est_out, "output JSON path (default stdout)");

    // ---- bound -------------------------------------------------------------
    auto* bound_cmd = app.add_subcommand("bound", "construct a normal range at tail level tau");
    SourceOptions bound_src;
    add_source_options(bound_cmd, bound_src);
    bound_cmd->get_option("--input")->required(false);
    std::uint64_t bnd_n = 10000, bnd_k = 10, bnd_seed = 1;
    std::string bnd_method = "aml", bnd_threshold, bnd_out, bnd_from_estimate;
    double bnd_tau = 0.5e-3, bnd_shift = 0.0;
    bool bnd_two_sided = false;
    double bnd_u = 0, bnd_alpha_u = 0, bnd_gamma = 0;
    bool bnd_have_params = false;
    bound_cmd->add_option("--n", bnd_n, "subsample size");
    bound_cmd->add_option("--K", bnd_k, "number of subsamples");
    bound_cmd->add_option("--seed", bnd_seed, "subsampling seed");
    bound_cmd->add_option("--method", bnd_method, "aml | amo | apwm")
        ->check(CLI::IsMember({"aml", "amo", "apwm"}));
    bound_cmd->add_option("--threshold", bnd_threshold, "threshold spec (as in estimate)");
    bound_cmd->add_option("--tau", bnd_tau, "tail level (default 0.5e-3)");
    bound_cmd->add_flag("--two-sided", bnd_two_sided, "fit both tails (lower via negated data)");
    bound_cmd->add_option("--shift", bnd_shift, "shift applied before estimation, removed after");
    bound_cmd->add_option("--from-estimate", bnd_from_estimate,
                          "JSON file produced by `estimate` (upper side)");
    auto* pu = bound_cmd->add_option("--u", bnd_u, "explicit threshold u");
    auto* pa = bound_cmd->add_option("--alpha-u", bnd_alpha_u, "explicit exceedance probability");
    auto* pg = bound_cmd->add_option("--gamma-hat", bnd_gamma, "explicit extreme value index");
    bound_cmd->add_option("--out", bnd_out, "output JSON path (default stdout)");

    // ---- detect ------------------------------------------------------------
    auto* det_cmd = app.add_subcommand("detect", "screen a dataset against a normal range");
    SourceOptions det_src;
    add_source_options(det_cmd, det_src);
    std::string det_range, det_out, det_csv;
    double det_upper = 0, det_lower = 0;
    auto* det_upper_opt = det_cmd->add_option("--upper", det_upper, "explicit upper bound");
    auto* det_lower_opt = det_cmd->add_option("--lower", det_lower, "explicit lower bound");
    det_cmd->add_option("--range", det_range, "normal-range JSON from `bound`");
    std::uint64_t det_cap = 10'000'000;
    det_cmd->add_option("--max-flagged", det_cap, "cap on stored suspected records (default 1e7)");
    det_cmd->add_option("--out", det_out, "summary JSON path (default stdout)");
    det_cmd->add_option("--out-csv", det_csv, "suspected records CSV path (index,value)");

    // ---- describe ----------------------------------------------------------
    auto* desc_cmd = app.add_subcommand("describe", "descriptive statistics of a source");
    SourceOptions desc_src;
    add_source_options(desc_cmd, desc_src);
    std::string desc_out;
    desc_cmd->add_option("--out", desc_out, "output JSON path (default stdout)");

    // ---- simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "run a Monte-Carlo experiment config");
    std::string sim_config, sim_outdir = ".";
    bool sim_full = false;
    std::optional<unsigned> sim_jobs;
    std::optional<std::uint64_t> sim_seed;
    sim_cmd->add_option("--config", sim_config, "experiment config JSON")->required();
    sim_cmd->add_option("--out-dir", sim_outdir, "directory for report.json/report.csv");
    sim_cmd->add_flag("--full", sim_full, "escalate to full-scale R/N (long-running)");
    unsigned sim_jobs_val = 0;
    auto* sim_jobs_opt = sim_cmd->add_option("--jobs", sim_jobs_val, "worker threads");
    std::uint64_t sim_seed_val = 0;
    auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed_val, "override master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // flag/usage problems are config errors
    }

    if (est_cmd->parsed()) {
        auto source = open_source(est_src);
        json echo{{"command", "estimate"}, {"n", est_n},         {"K", est_k},
                  {"seed", est_seed},        {"method", est_method}, {"shift", est_shift},
                  {"alpha", est_alpha}};
        echo["source"] = source_echo(est_src);
        aml::AmlEstimate est = estimate_side(*source, est_n, est_k, est_seed, 1.0, est_shift,
                                             est_threshold, aml::parse_method(est_method), &echo);
        json out = aml::estimate_to_json(est);
        out["config"] = echo;
        const auto& rc = source->count_records();
        out["source"] = {{"records", rc.valid}, {"missing", rc.missing}};
        if (est.gamma_hat > 0.0) {
            aml::ConfidenceInterval ci = aml::confidence_interval(est, est_alpha);
            out["ci"] = {{"lower", ci.lower}, {"upper", ci.upper}, {"level", ci.level}};
        } else {
            out["ci"] = nullptr;
        }
        write_output(est_out, out.dump(2));
        return 0;
    }

    if (bound_cmd->parsed()) {
        bnd_have_params = pu->count() || pa->count() || pg->count();
        json echo{{"command", "bound"}, {"tau", bnd_tau}, {"shift", bnd_shift},
                  {"two_sided", bnd_two_sided}};
        aml::NormalRange range;
        if (bnd_have_params) {
            if (!(pu->count() && pa->count() && pg->count()))
                throw aml::ConfigError("--u, --alpha-u and --gamma-hat must be given together");
            if (bnd_two_sided)
                throw aml::ConfigError("--two-sided needs a data source, not explicit params");
            aml::AmlEstimate est;
            est.threshold = bnd_u;
            est.alpha_u_hat = bnd_alpha_u;
            est.gamma_hat = bnd_gamma;
            est.n = est.K = 1;
            est.total_exceedances = 1;
            echo["params"] = {{"u", bnd_u}, {"alpha_u", bnd_alpha_u}, {"gamma_hat", bnd_gamma}};
            range = aml::normal_range(est, std::nullopt, bnd_tau, bnd_shift);
        } else if (!bnd_from_estimate.empty()) {
            if (bnd_two_sided)
                throw aml::ConfigError("--two-sided needs a data source (two fits required)");
            aml::AmlEstimate est = aml::estimate_from_json(read_json_file(bnd_from_estimate));
            echo["from_estimate"] = bnd_from_estimate;
            range = aml::normal_range(est, std::nullopt, bnd_tau, bnd_shift);
        } else {
            if (bound_src.input.empty())
                throw aml::ConfigError(
                    "bound needs --input, --from-estimate, or explicit --u/--alpha-u/--gamma-hat");
            auto source = open_source(bound_src);
            echo["source"] = source_echo(bound_src);
            echo["n"] = bnd_n;
            echo["K"] = bnd_k;
            echo["seed"] = bnd_seed;
            echo["method"] = bnd_method;
            aml::Method method = aml::parse_method(bnd_method);
            aml::AmlEstimate upper = estimate_side(*source, bnd_n, bnd_k, bnd_seed, 1.0,
                                                   bnd_shift, bnd_threshold, method, &echo);
            std::optional<aml::AmlEstimate> lower;
            if (bnd_two_sided)
                lower = estimate_side(*source, bnd_n, bnd_k, aml::derive_seed(bnd_seed, 1), -1.0,
                                      bnd_shift, bnd_threshold, method, nullptr);
            range = aml::normal_range(upper, lower, bnd_tau, bnd_shift);
        }
        json out = aml::range_to_json(range);
        out["config"] = echo;
        write_output(bnd_out, out.dump(2));
        return 0;
    }

    if (det_cmd->parsed()) {
        aml::NormalRange range;
        if (!det_range.empty()) {
            range = aml::range_from_json(read_json_file(det_range));
        } else {
            if (!det_upper_opt->count() && !det_lower_opt->count())
                throw aml::ConfigError("detect needs --range or --upper/--lower");
            if (det_upper_opt->count()) range.upper_bound = det_upper;
            if (det_lower_opt->count()) range.lower_bound = det_lower;
        }
        auto source = open_source(det_src);
        aml::SuspectedSet suspected = aml::screen(*source, range, {det_cap});
        json out = aml::suspected_to_json(suspected);
        out["config"] = {{"command", "detect"},
                         {"source", source_echo(det_src)},
                         {"upper", range.upper_bound ? json(*range.upper_bound) : json(nullptr)},
                         {"lower", range.lower_bound ? json(*range.lower_bound) : json(nullptr)},
                         {"max_flagged", det_cap}};
        if (!det_csv.empty()) write_output(det_csv, aml::suspected_to_csv(suspected));
        write_output(det_out, out.dump(2));
        return 0;
    }

    if (desc_cmd->parsed()) {
        auto source = open_source(desc_src);
        aml::Description d = aml::describe(*source);
        json out = aml::description_to_json(d);
        out["config"] = {{"command", "describe"}, {"source", source_echo(desc_src)}};
        write_output(desc_out, out.dump(2));
        return 0;
    }

    if (sim_cmd->parsed()) {
        if (sim_jobs_opt->count()) sim_jobs = sim_jobs_val;
        if (sim_seed_opt->count()) sim_seed = sim_seed_val;
        aml::SimulationJob job = aml::parse_simulation_job(read_json_file(sim_config), sim_full);
        if (sim_jobs) job.config.jobs = *sim_jobs;
        if (sim_seed) job.config.master_seed = *sim_seed;
        if (sim_full)
            std::cerr << "aml simulate: --full escalates to the full-scale design; this can"
                         " run for a long time\n";
        aml::SimulationOutput out = aml::run_simulation_job(job);
        std::string dir = sim_outdir.empty() ? "." : sim_outdir;
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        write_output(dir + "/report.json", out.report.dump(2));
        write_output(dir + "/report.csv", out.csv);
        std::cout << "wrote " << dir << "/report.json and " << dir << "/report.csv\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const aml::Error& e) {
        const char* kind = e.kind() == aml::ErrorKind::Config     ? "config"
                           : e.kind() == aml::ErrorKind::Data     ? "data"
                                                                  : "degeneracy";
        json err{{"error", {{"kind", kind}, {"message", e.what()}}}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "aml: " << kind << " error: " << e.what() << "\n";
        switch (e.kind()) {
            case aml::ErrorKind::Config: return 2;
            case aml::ErrorKind::Data: return 3;
            case aml::ErrorKind::Degeneracy: return 4;
        }
        return 1;
    } catch (const std::exception& e) {
        json err{{"error", {{"kind", "internal"}, {"message", e.what()}}}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "aml: error: " << e.what() << "\n";
        return 1;
    }
}
