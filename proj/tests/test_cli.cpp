// End-to-end tests driving the built `aml` binary.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "aml/dataset.hpp"
#include "aml/estimators.hpp"
#include "aml/subsample.hpp"
#include "aml/tail_model.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / ("aml_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    fs::path out_file = temp_dir() / "stdout.txt";
    std::string cmd = std::string(AML_CLI_PATH) + " " + args + " > " + out_file.string() +
                      " 2> /dev/null";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

json run_cli_json(const std::string& args, int expect_code = 0) {
    RunResult r = run_cli(args);
    REQUIRE(r.exit_code == expect_code);
    return json::parse(r.out);
}

fs::path write_f64le(const std::string& name, const std::vector<double>& values) {
    fs::path p = temp_dir() / name;
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    return p;
}

fs::path pareto_file() {
    static fs::path p = [] {
        aml::TailModel m(aml::Pareto{2, 1});
        return write_f64le("pareto21_1e6.f64", m.sample(20240801, 0, 1'000'000));
    }();
    return p;
}

} // namespace

TEST_CASE("estimate recovers gamma on a 1e6-record Pareto(2,1) file") {
    json out = run_cli_json("estimate --input " + pareto_file().string() +
                            " --n 1000 --K 10 --seed 77 --method aml");
    CHECK(std::fabs(out["gamma_hat"].get<double>() - 1.0) < 0.15);
    CHECK(out["n_star_u"].get<std::uint64_t>() > 50);
    CHECK(out["source"]["records"] == 1'000'000);
    CHECK(out["ci"]["lower"].get<double>() < out["gamma_hat"].get<double>());
    CHECK(out["per_subsample"].size() == 10);
}

TEST_CASE("estimate output is byte-identical across reruns with the same seed") {
    std::string args = "estimate --input " + pareto_file().string() +
                       " --n 500 --K 5 --seed 31 --threshold per-subsample:0.98";
    RunResult a = run_cli(args);
    RunResult b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    RunResult c = run_cli(args + "1"); // different level
    CHECK(c.out != a.out);
}

TEST_CASE("estimate with K=1 equals the brute-force oracle on the drawn subsample") {
    std::vector<double> values{3.1, 0.4, 9.9, 2.2, 5.5, 1.1, 8.8, 0.9, 6.6, 4.4,
                               7.7, 2.9, 3.3, 12.0, 0.2, 1.7, 5.1, 2.4, 6.1, 3.8};
    fs::path p = write_f64le("tiny.f64", values);
    json out = run_cli_json("estimate --input " + p.string() +
                            " --n 20 --K 1 --seed 5 --threshold level:0.5");

    // replicate the draw and the pooled empirical threshold, then a naive MLE
    aml::FixedWidthBinarySource src(p.string());
    aml::SubsampleSet set = aml::draw_subsamples(src, {20, 1, 5});
    double u = aml::empirical_quantile(set.values[0], 0.5);
    double sum = 0;
    std::uint64_t cnt = 0;
    for (double x : set.values[0])
        if (x > u) {
            sum += std::log(x / u);
            ++cnt;
        }
    CHECK(out["gamma_hat"].get<double>() == doctest::Approx(sum / cnt).epsilon(1e-12));
    CHECK(out["n_star_u"].get<std::uint64_t>() == cnt);
    CHECK(out["u"].get<double>() == doctest::Approx(u).epsilon(1e-15));
}

TEST_CASE("bound with exact Pareto parameters gives x_m / tau") {
    json out = run_cli_json("bound --u 20 --alpha-u 0.1 --gamma-hat 1 --tau 0.001");
    CHECK(out["upper_bound"].get<double>() == doctest::Approx(2000.0).epsilon(1e-12));
    CHECK(out["lower_bound"].is_null());
}

TEST_CASE("bound --two-sided on symmetric data is roughly symmetric") {
    aml::TailModel m(aml::StudentT{2});
    fs::path p = write_f64le("t2.f64", m.sample(11, 0, 200'000));
    json out = run_cli_json("bound --input " + p.string() +
                            " --n 2000 --K 10 --seed 3 --tau 0.001 --two-sided");
    double upper = out["upper_bound"].get<double>();
    double lower = out["lower_bound"].get<double>();
    CHECK(upper > 0);
    CHECK(lower < 0);
    double ratio = upper / -lower;
    CHECK(ratio > 0.6);
    CHECK(ratio < 1.7);
}

TEST_CASE("bound consumes an estimate file") {
    fs::path est_path = temp_dir() / "est.json";
    RunResult wr = run_cli("estimate --input " + pareto_file().string() +
                           " --n 1000 --K 10 --seed 77 --out " + est_path.string());
    REQUIRE(wr.exit_code == 0);
    std::ifstream est_in(est_path);
    json est = json::parse(est_in);
    json out = run_cli_json("bound --from-estimate " + est_path.string() + " --tau 0.001");
    double u = est["u"].get<double>();
    double expect = u * std::pow(est["alpha_u_hat"].get<double>() / 0.001,
                                 est["gamma_hat"].get<double>());
    CHECK(out["upper_bound"].get<double>() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("detect writes a summary and a CSV of suspected records") {
    fs::path p = temp_dir() / "detect_input.csv";
    {
        std::ofstream out(p);
        out << "v\n1\n2\n50\n3\nNA\n60\n";
    }
    fs::path csv = temp_dir() / "suspected.csv";
    json out = run_cli_json("detect --input " + p.string() +
                            " --format csv --header --column v --upper 10 --out-csv " +
                            csv.string());
    CHECK(out["count"] == 2);
    CHECK(out["scanned"] == 5);
    CHECK(out["fraction"].get<double>() == doctest::Approx(0.4));
    std::ifstream in(csv);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "index,value\n2,50\n4,60\n");

    // empty suspected set: header-only CSV, zero count, still exit 0
    json none = run_cli_json("detect --input " + p.string() +
                             " --format csv --header --column v --upper 1000 --out-csv " +
                             csv.string());
    CHECK(none["count"] == 0);
    std::ifstream in2(csv);
    std::stringstream ss2;
    ss2 << in2.rdbuf();
    CHECK(ss2.str() == "index,value\n");
}

TEST_CASE("describe reports moments, missing counts and the t(5) kurtosis") {
    aml::TailModel m(aml::StudentT{5});
    fs::path p = write_f64le("t5.f64", m.sample(2025, 0, 100'000));
    json out = run_cli_json("describe --input " + p.string());
    CHECK(std::fabs(out["kurtosis"].get<double>() - 9.0) < 3.0); // population value 9
    CHECK(out["count"] == 100'000);
    CHECK(out["missing"] == 0);

    // the command is a passthrough of the library statistics
    aml::FixedWidthBinarySource src(p.string());
    aml::Description ref = aml::describe(src);
    CHECK(out["mean"].get<double>() == ref.mean);
    CHECK(out["median"].get<double>() == ref.median);
    CHECK(out["min"].get<double>() == ref.min);
    CHECK(out["max"].get<double>() == ref.max);
    CHECK(out["kurtosis"].get<double>() == ref.kurtosis);

    fs::path q = temp_dir() / "missing.csv";
    {
        std::ofstream o(q);
        o << "1\nNA\n2\n\n3\njunk\n4\n";
    }
    json d = run_cli_json("describe --input " + q.string() + " --format csv");
    CHECK(d["count"] == 4);
    CHECK(d["missing"] == 2);
    CHECK(d["mean"].get<double>() == doctest::Approx(2.5));
}

TEST_CASE("simulate regenerates the published design triple from a bundled config") {
    RunResult r = run_cli(std::string("simulate --config ") + AML_CONFIG_DIR +
                          "/table2_pareto21_ck03.json --out-dir " +
                          (temp_dir() / "sim1").string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(temp_dir() / "sim1" / "report.json");
    json out = json::parse(in);
    CHECK(out["design"]["n"] == 316);
    CHECK(out["design"]["K"] == 4);
    CHECK(std::round(out["design"]["level"].get<double>() * 1000.0) / 10.0 ==
          doctest::Approx(68.4));
    CHECK(out["metrics"][0]["method"] == "aml");
    CHECK(out["metrics"][0]["rmse"].get<double>() < 0.2);
}

TEST_CASE("simulate figure-1 config emits  N-grid x 3 methods CSV") {
    RunResult r = run_cli(std::string("simulate --config ") + AML_CONFIG_DIR +
                          "/figure1_t3.json --out-dir " + (temp_dir() / "sim2").string());
    CHECK(r.exit_code == 0);
    std::ifstream in(temp_dir() / "sim2" / "report.csv");
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "model,N,method,rmse");
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6); // 2 N-points x 3 methods
}

TEST_CASE("exit codes: config=2, data=3, degeneracy=4") {
    CHECK(run_cli("estimate --input does_not_exist.f64 --n 10 --K 1").exit_code == 3);
    CHECK(run_cli("estimate --no-such-flag").exit_code == 2);
    CHECK(run_cli("bound --u 20 --tau 0.001").exit_code == 2); // partial params
    CHECK(run_cli("bound --u 20 --alpha-u 0.001 --gamma-hat 1 --tau 0.01").exit_code == 4);
    json err = run_cli_json("bound --u 20 --alpha-u 0.001 --gamma-hat 1 --tau 0.01", 4);
    CHECK(err["error"]["kind"] == "degeneracy");
}

TEST_CASE("airline-style CSV workflow: bound then detect") {
    // heavy-tailed synthetic variable with missing tokens, upper bound at
    // tau = 0.5e-3, then a full screening pass
    aml::TailModel m(aml::Pareto{2, 1.5});
    std::vector<double> values = m.sample(606060, 0, 200'000);
    fs::path p = temp_dir() / "airline.csv";
    {
        std::ofstream out(p);
        out << "rowid,delay\n";
        char buf[64];
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i % 1000 == 999) {
                out << i << ",NA\n";
                continue;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out << i << "," << buf << "\n";
        }
    }
    fs::path range_path = temp_dir() / "range.json";
    RunResult br = run_cli("bound --input " + p.string() +
                           " --format csv --header --column delay --n 5000 --K 10 --seed 9"
                           " --tau 0.0005 --out " +
                           range_path.string());
    REQUIRE(br.exit_code == 0);
    std::ifstream bin(range_path);
    json bound = json::parse(bin);
    double upper = bound["upper_bound"].get<double>();
    // true 1 - 0.5e-3 quantile of Pareto(2, 1.5)
    double q_true = 2.0 * std::pow(0.0005, -1.0 / 1.5);
    CHECK(upper / q_true > 0.5);
    CHECK(upper / q_true < 2.0);

    json det = run_cli_json("detect --input " + p.string() +
                            " --format csv --header --column delay --range " +
                            range_path.string());
    // naive count oracle
    std::size_t expect = 0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i % 1000 == 999) continue;
        ++valid;
        if (values[i] > upper) ++expect;
    }
    CHECK(det["count"].get<std::size_t>() == expect);
    CHECK(det["scanned"].get<std::size_t>() == valid);
    double fraction = det["fraction"].get<double>();
    CHECK(fraction > 0.00005);
    CHECK(fraction < 0.005);
}
