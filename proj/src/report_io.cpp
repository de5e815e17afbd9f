#include "aml/report_io.hpp"

#include <cmath>
#include <cstdio>

#include "aml/errors.hpp"

namespace aml {

using nlohmann::json;

namespace {

json checked(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
    return j.at(key);
}

json number_or_null(double x) {
    if (std::isnan(x) || std::isinf(x)) return nullptr;
    return x;
}

ThresholdRule parse_threshold(const json& j) {
    ThresholdRule rule;
    if (j.is_null()) return rule;
    std::string kind = j.value("rule", "design");
    if (kind == "design") {
        rule.kind = ThresholdRule::Kind::Design;
    } else if (kind == "level") {
        rule.kind = ThresholdRule::Kind::FixedLevel;
        rule.level = checked(j, "level").get<double>();
    } else if (kind == "exponent") {
        rule.kind = ThresholdRule::Kind::FixedExponent;
        rule.exponent = j.value("exponent", 0.6);
    } else if (kind == "sweep") {
        rule.kind = ThresholdRule::Kind::Sweep;
        if (j.contains("levels")) rule.sweep_levels = j.at("levels").get<std::vector<double>>();
    } else {
        throw ConfigError("config: unknown threshold rule '" + kind + "'");
    }
    return rule;
}

json threshold_to_json(const ThresholdRule& rule) {
    switch (rule.kind) {
        case ThresholdRule::Kind::Design:
            return {{"rule", "design"}};
        case ThresholdRule::Kind::FixedLevel:
            return {{"rule", "level"}, {"level", rule.level}};
        case ThresholdRule::Kind::FixedExponent:
            return {{"rule", "exponent"}, {"exponent", rule.exponent}};
        case ThresholdRule::Kind::Sweep: {
            json out{{"rule", "sweep"}};
            out["levels"] = rule.sweep_levels;
            return out;
        }
    }
    return {};
}

ExperimentConfig parse_experiment(const json& j) {
    ExperimentConfig cfg;
    cfg.model = TailModel::parse(checked(j, "model").get<std::string>());
    cfg.N = checked(j, "N").get<std::uint64_t>();
    cfg.R = checked(j, "R").get<std::uint64_t>();
    cfg.c_k = j.value("C_K", 0.5);
    cfg.tau = j.value("tau", 1e-3);
    cfg.alpha = j.value("alpha", 0.05);
    cfg.master_seed = j.value("seed", std::uint64_t{1});
    cfg.jobs = j.value("jobs", 1u);
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
        if (cfg.methods.empty()) throw ConfigError("config: methods must not be empty");
    }
    cfg.threshold = parse_threshold(j.contains("threshold") ? j.at("threshold") : json{});
    if (j.contains("n") && !j.at("n").is_null()) cfg.n_override = j.at("n").get<std::uint64_t>();
    if (j.contains("K") && !j.at("K").is_null()) cfg.k_override = j.at("K").get<std::uint64_t>();
    if (j.contains("outliers") && !j.at("outliers").is_null()) {
        const json& o = j.at("outliers");
        cfg.outliers.c_o = o.value("C_o", 0.0);
        cfg.outliers.multiplier = o.value("multiplier", 10.0);
        if (o.contains("tau_out") && !o.at("tau_out").is_null())
            cfg.outliers.tau_out = o.at("tau_out").get<double>();
    }
    return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = cfg.model.spec_string();
    j["N"] = cfg.N;
    j["R"] = cfg.R;
    j["C_K"] = cfg.c_k;
    j["tau"] = cfg.tau;
    j["alpha"] = cfg.alpha;
    j["seed"] = cfg.master_seed;
    j["jobs"] = cfg.jobs;
    json methods = json::array();
    for (Method m : cfg.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    j["threshold"] = threshold_to_json(cfg.threshold);
    j["n"] = cfg.n_override ? json(*cfg.n_override) : json(nullptr);
    j["K"] = cfg.k_override ? json(*cfg.k_override) : json(nullptr);
    j["outliers"] = {{"C_o", cfg.outliers.c_o},
                     {"multiplier", cfg.outliers.multiplier},
                     {"tau_out", cfg.outliers.tau_out ? json(*cfg.outliers.tau_out) : json(nullptr)}};
    return j;
}

} // namespace

const char* job_kind_name(SimulationJob::Kind kind) {
    switch (kind) {
        case SimulationJob::Kind::Table: return "table";
        case SimulationJob::Kind::Compare: return "compare";
        case SimulationJob::Kind::Sweep: return "sweep";
        case SimulationJob::Kind::Detection: return "detection";
        case SimulationJob::Kind::Contamination: return "contamination";
    }
    return "?";
}

SimulationJob parse_simulation_job(const nlohmann::json& spec, bool full_scale) {
    json j = spec;
    if (full_scale) {
        if (j.contains("full")) {
            json patch = j.at("full");
            j.erase("full");
            j.merge_patch(patch);
        } else {
            j["R"] = 1000;
        }
    } else {
        j.erase("full");
    }

    SimulationJob job;
    std::string kind = j.value("kind", "table");
    if (kind == "table") job.kind = SimulationJob::Kind::Table;
    else if (kind == "compare") job.kind = SimulationJob::Kind::Compare;
    else if (kind == "sweep") job.kind = SimulationJob::Kind::Sweep;
    else if (kind == "detection") job.kind = SimulationJob::Kind::Detection;
    else if (kind == "contamination") job.kind = SimulationJob::Kind::Contamination;
    else throw ConfigError("config: unknown experiment kind '" + kind + "'");

    job.config = parse_experiment(j);
    job.record_replications = j.value("record_replications", true);

    if (job.kind == SimulationJob::Kind::Compare || job.kind == SimulationJob::Kind::Detection) {
        if (!j.contains("N_grid")) throw ConfigError("config: '" + kind + "' needs N_grid");
        job.n_grid = j.at("N_grid").get<std::vector<std::uint64_t>>();
        if (job.n_grid.empty()) throw ConfigError("config: N_grid must not be empty");
    }
    if (job.kind == SimulationJob::Kind::Contamination) {
        job.co_grid = j.value("Co_grid", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    }
    if (job.kind == SimulationJob::Kind::Detection && job.config.outliers.c_o == 0.0 &&
        !(j.contains("outliers") && j.at("outliers").contains("C_o")))
        job.config.outliers.c_o = 1.0;
    if (job.config.threshold.kind == ThresholdRule::Kind::Sweep &&
        job.config.threshold.sweep_levels.empty()) {
        job.config.threshold.sweep_levels.resize(50);
        for (int i = 0; i < 50; ++i) job.config.threshold.sweep_levels[i] = 0.5 + i / 100.0;
    }
    return job;
}

nlohmann::json job_to_json(const SimulationJob& job) {
    json j = experiment_to_json(job.config);
    j["kind"] = job_kind_name(job.kind);
    j["record_replications"] = job.record_replications;
    if (!job.n_grid.empty()) j["N_grid"] = job.n_grid;
    if (!job.co_grid.empty()) j["Co_grid"] = job.co_grid;
    return j;
}

namespace {

json metrics_to_json(const MetricsReport& m) {
    json j;
    j["method"] = method_name(m.method);
    j["replications_used"] = m.replications_used;
    j["mean_n_star_u"] = m.mean_total_exceedances;
    j["bias"] = m.bias;
    j["sd"] = m.sd;
    j["rmse"] = m.rmse;
    j["ecp"] = m.ecp;
    j["ra"] = m.ra;
    if (m.detection_rate_mean) j["detection_rate_mean"] = *m.detection_rate_mean;
    return j;
}

json replication_to_json(const ReplicationRecord& r, const std::vector<Method>& methods) {
    json j;
    j["rep"] = r.rep;
    j["aborted"] = r.aborted;
    if (r.aborted) j["abort_reason"] = r.abort_reason;
    j["injected_outliers"] = r.injected_outliers;
    j["sampled_outliers"] = r.sampled_outliers;
    j["zero_contamination_prob"] = r.zero_contamination_prob;
    json by = json::object();
    for (std::size_t mi = 0; mi < r.by_method.size(); ++mi) {
        const MethodRecord& mr = r.by_method[mi];
        by[method_name(methods[mi])] = {
            {"gamma_hat", mr.gamma_hat},   {"n_star_u", mr.n_star_u},
            {"alpha_u_hat", mr.alpha_u_hat}, {"ci_lower", number_or_null(mr.ci_lower)},
            {"ci_upper", number_or_null(mr.ci_upper)}, {"covered", mr.covered},
            {"q_hat", mr.q_hat},           {"tau_hat", mr.tau_hat}};
    }
    j["by_method"] = by;
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string row;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) row += ',';
        row += csv_field(c);
        first = false;
    }
    row += '\n';
    return row;
}

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string num(std::uint64_t x) { return std::to_string(x); }

} // namespace

SimulationOutput run_simulation_job(const SimulationJob& job) {
    SimulationOutput out;
    json& report = out.report;
    report["config"] = job_to_json(job);

    const ExperimentConfig& cfg = job.config;
    const std::string model = cfg.model.spec_string();

    switch (job.kind) {
        case SimulationJob::Kind::Table: {
            ExperimentResult res = run_experiment(cfg);
            report["design"] = {{"n", res.design.n},
                                {"K", res.design.K},
                                {"C_K", res.design.c_k},
                                {"h", res.design.h_coefficient},
                                {"level", res.design.level},
                                {"threshold", res.design.threshold}};
            report["aborted"] = res.aborted;
            json metrics = json::array();
            for (const auto& m : res.metrics) metrics.push_back(metrics_to_json(m));
            report["metrics"] = metrics;
            if (job.record_replications) {
                json reps = json::array();
                for (const auto& r : res.replications)
                    reps.push_back(replication_to_json(r, cfg.methods));
                report["replications"] = reps;
            }
            out.csv = "model,N,C_K,n,K,level,method,replications_used,mean_n_star_u,bias,sd,"
                      "rmse,ecp,ra\n";
            for (const auto& m : res.metrics)
                out.csv += csv_row({model, num(cfg.N), num(cfg.c_k), num(res.design.n),
                                    num(res.design.K), num(res.design.level),
                                    method_name(m.method), num(m.replications_used),
                                    num(m.mean_total_exceedances), num(m.bias), num(m.sd),
                                    num(m.rmse), num(m.ecp), num(m.ra)});
            break;
        }
        case SimulationJob::Kind::Compare: {
            std::vector<CompareCell> cells = compare_estimators(cfg, job.n_grid);
            json jcells = json::array();
            out.csv = "model,N,method,rmse\n";
            for (const auto& c : cells) {
                jcells.push_back({{"N", c.N},
                                  {"method", method_name(c.method)},
                                  {"rmse", c.rmse},
                                  {"aborted", c.aborted}});
                out.csv += csv_row({model, num(c.N), method_name(c.method), num(c.rmse)});
            }
            report["cells"] = jcells;
            break;
        }
        case SimulationJob::Kind::Sweep: {
            SweepResult res = threshold_sweep(cfg);
            json jcells = json::array();
            out.csv = "model,level,method,rmse,replications_used\n";
            for (const auto& c : res.cells) {
                jcells.push_back({{"level", c.level},
                                  {"method", method_name(c.method)},
                                  {"rmse", number_or_null(c.rmse)},
                                  {"replications_used", c.replications_used},
                                  {"aborted", c.aborted}});
                out.csv += csv_row({model, num(c.level), method_name(c.method), num(c.rmse),
                                    num(c.replications_used)});
            }
            report["cells"] = jcells;
            json best = json::array();
            for (const auto& b : res.best_per_method)
                best.push_back({{"method", method_name(b.method)},
                                {"level", b.level},
                                {"rmse", b.rmse}});
            report["best_per_method"] = best;
            break;
        }
        case SimulationJob::Kind::Detection: {
            std::vector<DetectionPoint> points = detection_study(cfg, job.n_grid);
            json jpoints = json::array();
            out.csv = "model,N,mean_pi,mean_injected,mean_flagged\n";
            for (const auto& p : points) {
                jpoints.push_back({{"N", p.N},
                                   {"mean_pi", p.mean_pi},
                                   {"mean_injected", p.mean_injected},
                                   {"mean_flagged", p.mean_flagged},
                                   {"aborted", p.aborted}});
                out.csv += csv_row({model, num(p.N), num(p.mean_pi), num(p.mean_injected),
                                    num(p.mean_flagged)});
            }
            report["points"] = jpoints;
            break;
        }
        case SimulationJob::Kind::Contamination: {
            std::vector<ContaminationPoint> points = contamination_robustness(cfg, job.co_grid);
            json jpoints = json::array();
            out.csv = "model,C_o,median_gamma_hat,iqr,zero_contamination_freq,"
                      "zero_contamination_exact\n";
            for (const auto& p : points) {
                json jp = {{"C_o", p.c_o},
                           {"median", p.median},
                           {"iqr", p.iqr},
                           {"zero_contamination_freq", p.zero_contamination_freq},
                           {"zero_contamination_exact", p.zero_contamination_exact},
                           {"aborted", p.aborted}};
                if (job.record_replications) jp["gamma_hats"] = p.gamma_hats;
                jpoints.push_back(jp);
                out.csv += csv_row({model, num(p.c_o), num(p.median), num(p.iqr),
                                    num(p.zero_contamination_freq),
                                    num(p.zero_contamination_exact)});
            }
            report["points"] = jpoints;
            break;
        }
    }
    return out;
}

nlohmann::json estimate_to_json(const AmlEstimate& est) {
    json j;
    j["gamma_hat"] = est.gamma_hat;
    j["n"] = est.n;
    j["K"] = est.K;
    j["u"] = est.threshold;
    j["n_star_u"] = est.total_exceedances;
    j["alpha_u_hat"] = est.alpha_u_hat;
    j["method"] = method_name(est.method);
    json per = json::array();
    for (const auto& s : est.per_subsample)
        per.push_back({{"gamma_hat", s.gamma_hat},
                       {"exceedances", s.exceedance_count},
                       {"threshold", s.threshold}});
    j["per_subsample"] = per;
    return j;
}

AmlEstimate estimate_from_json(const nlohmann::json& j) {
    AmlEstimate est;
    est.gamma_hat = checked(j, "gamma_hat").get<double>();
    est.n = checked(j, "n").get<std::uint64_t>();
    est.K = checked(j, "K").get<std::uint64_t>();
    est.threshold = checked(j, "u").get<double>();
    est.total_exceedances = checked(j, "n_star_u").get<std::uint64_t>();
    est.alpha_u_hat = checked(j, "alpha_u_hat").get<double>();
    est.method = parse_method(j.value("method", "aml"));
    if (j.contains("per_subsample")) {
        for (const auto& s : j.at("per_subsample")) {
            SubsampleEstimate se;
            se.gamma_hat = checked(s, "gamma_hat").get<double>();
            se.exceedance_count = checked(s, "exceedances").get<std::uint64_t>();
            se.threshold = checked(s, "threshold").get<double>();
            se.method = est.method;
            est.per_subsample.push_back(se);
        }
    }
    return est;
}

namespace {

json side_to_json(const std::optional<NormalRangeSide>& side) {
    if (!side) return nullptr;
    return {{"u", side->threshold},
            {"alpha_u_hat", side->alpha_u_hat},
            {"gamma_hat", side->gamma_hat},
            {"n_star_u", side->total_exceedances}};
}

std::optional<NormalRangeSide> side_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    NormalRangeSide side;
    side.threshold = checked(j, "u").get<double>();
    side.alpha_u_hat = checked(j, "alpha_u_hat").get<double>();
    side.gamma_hat = checked(j, "gamma_hat").get<double>();
    side.total_exceedances = j.value("n_star_u", std::uint64_t{0});
    return side;
}

} // namespace

nlohmann::json range_to_json(const NormalRange& range) {
    json j;
    j["tau"] = range.tau;
    j["shift"] = range.shift;
    j["upper_bound"] = range.upper_bound ? json(*range.upper_bound) : json(nullptr);
    j["lower_bound"] = range.lower_bound ? json(*range.lower_bound) : json(nullptr);
    j["upper_fit"] = side_to_json(range.upper_fit);
    j["lower_fit"] = side_to_json(range.lower_fit);
    return j;
}

NormalRange range_from_json(const nlohmann::json& j) {
    NormalRange range;
    range.tau = j.value("tau", 0.0);
    range.shift = j.value("shift", 0.0);
    if (j.contains("upper_bound") && !j.at("upper_bound").is_null())
        range.upper_bound = j.at("upper_bound").get<double>();
    if (j.contains("lower_bound") && !j.at("lower_bound").is_null())
        range.lower_bound = j.at("lower_bound").get<double>();
    if (j.contains("upper_fit")) range.upper_fit = side_from_json(j.at("upper_fit"));
    if (j.contains("lower_fit")) range.lower_fit = side_from_json(j.at("lower_fit"));
    if (!range.upper_bound && !range.lower_bound)
        throw ConfigError("range: needs at least one of upper_bound/lower_bound");
    return range;
}

nlohmann::json suspected_to_json(const SuspectedSet& set) {
    json j;
    j["count"] = set.flagged_total;
    j["scanned"] = set.scanned;
    j["fraction"] = set.scanned ? static_cast<double>(set.flagged_total) /
                                      static_cast<double>(set.scanned)
                                : 0.0;
    j["truncated"] = set.truncated;
    j["bounds"] = {{"upper", set.upper_bound ? json(*set.upper_bound) : json(nullptr)},
                   {"lower", set.lower_bound ? json(*set.lower_bound) : json(nullptr)}};
    return j;
}

std::string suspected_to_csv(const SuspectedSet& set) {
    std::string csv = "index,value\n";
    for (std::size_t i = 0; i < set.indices.size(); ++i)
        csv += std::to_string(set.indices[i]) + "," + num(set.values[i]) + "\n";
    return csv;
}

nlohmann::json description_to_json(const Description& d) {
    json j;
    j["count"] = d.count;
    j["missing"] = d.missing;
    j["mean"] = d.mean;
    j["median"] = d.median;
    j["median_approximate"] = d.median_approximate;
    j["min"] = d.min;
    j["max"] = d.max;
    j["kurtosis"] = d.kurtosis;
    return j;
}

} // namespace aml
