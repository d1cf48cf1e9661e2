#include "cost/cli.hpp"
#include "cost/errors.hpp"
#include "cost/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace cost;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("cost_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// 80 rows of y = 1 + 2 x1 - x2 + noise, columns x1, y, x2.
void write_linear_csv(const std::string& path) {
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> z(0.0, 1.0);
    std::ofstream out(path);
    out << "x1,y,x2\n";
    out.precision(17);
    for (int i = 0; i < 80; ++i) {
        const double x1 = z(rng), x2 = z(rng);
        out << x1 << ',' << 2 * x1 - x2 + 0.5 * z(rng) << ',' << x2 << '\n';
    }
}

}  // namespace

TEST(CsvTest, LoadsResponseAndPredictors) {
    TempDir dir;
    const auto path = dir.file("d.csv");
    write_file(path, "a,y,b\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n");
    const auto loaded = io::load_csv(path, std::string("y"));
    EXPECT_EQ(loaded.data.n(), 4);
    EXPECT_EQ(loaded.data.q(), 2);
    EXPECT_EQ(loaded.predictor_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(loaded.data.responses()(3), 11);
    EXPECT_EQ(loaded.data.predictors()(2, 1), 9);

    const auto by_index = io::load_csv(path, std::size_t{1});
    EXPECT_EQ(by_index.data.responses(), loaded.data.responses());
    EXPECT_EQ(by_index.data.predictors(), loaded.data.predictors());
}

TEST(CsvTest, ColumnSelectorPrefersNames) {
    const std::vector<std::string> header{"0", "y", "z"};
    EXPECT_EQ(std::get<std::string>(io::parse_column_selector("0", header)), "0");
    EXPECT_EQ(std::get<std::size_t>(io::parse_column_selector("2", header)), 2u);
    EXPECT_EQ(std::get<std::string>(io::parse_column_selector("w", header)), "w");
}

TEST(CsvTest, BlankCellIsDataErrorWithLocation) {
    TempDir dir;
    const auto path = dir.file("d.csv");
    write_file(path, "a,y\n1,2\n3,\n");
    try {
        io::load_csv(path, std::string("y"));
        FAIL() << "expected a data error";
    } catch (const DataError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("line 3"), std::string::npos) << what;
        EXPECT_NE(what.find("'y'"), std::string::npos) << what;
    }
    write_file(path, "a,y\n1,x\n");
    EXPECT_THROW(io::load_csv(path, std::string("y")), DataError);
    EXPECT_THROW(io::load_csv(dir.file("missing.csv"), std::string("y")), IoError);
}

TEST(VectorFileTest, Separators) {
    TempDir dir;
    const auto path = dir.file("b.txt");
    write_file(path, "0.5, 0.5\n-0.5 0.5;1e-1\n");
    const Vector v = io::read_vector_file(path);
    ASSERT_EQ(v.size(), 5);
    EXPECT_DOUBLE_EQ(v(4), 0.1);
}

TEST(FormatTest, ShortestRoundTrip) {
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(0.0), "0");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(io::format_double(x)), x);
}

TEST(SimulationConfigTest, ExpandsAmplitudes) {
    const auto plan = io::parse_simulation_config(R"({
        "grid": [{"study": "H11", "n": 100, "q": 2, "a": [0, 0.25], "reps": 10},
                 {"study": "H41", "n": 50, "q": 50, "p": 6, "a": 0.1, "sigma_kind": "ar_half"}],
        "threads": 2})");
    ASSERT_EQ(plan.configs.size(), 3u);
    EXPECT_EQ(plan.threads, 2u);
    EXPECT_EQ(plan.configs[1].a, 0.25);
    EXPECT_EQ(plan.configs[2].study, Study::H41);
    EXPECT_EQ(plan.configs[2].p, 6);
    EXPECT_EQ(plan.configs[2].sigma_kind, CovarianceKind::ar_half);
    EXPECT_THROW(io::parse_simulation_config(R"({"study": "H11", "n": 10, "q": 2, "colour": 1})"), ConfigError);
    EXPECT_THROW(io::parse_simulation_config("{"), ConfigError);
}

TEST(CliTest, MissingResponseIsUsageError) {
    TempDir dir;
    write_linear_csv(dir.file("d.csv"));
    const auto r = invoke({"test", "--data", dir.file("d.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--response"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(CliTest, ExitCodes) {
    TempDir dir;
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"test", "--data", dir.file("none.csv"), "--response", "y"}).code, 2);
    write_linear_csv(dir.file("d.csv"));
    EXPECT_EQ(invoke({"test", "--data", dir.file("d.csv"), "--response", "y", "--model", "spline"}).code, 1);
}

TEST(CliTest, UnknownStudyNamesField) {
    TempDir dir;
    write_file(dir.file("s.json"), R"({"study": "H77", "n": 100, "q": 2, "a": [0]})");
    const auto r = invoke({"simulate", dir.file("s.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("study"), std::string::npos);
}

TEST(CliTest, SimulateIsByteIdentical) {
    TempDir dir;
    write_file(dir.file("s.json"), R"({"grid": [
        {"study": "H11", "n": 60, "q": 3, "a": [0, 0.5], "reps": 30, "seed": 5},
        {"study": "H31", "n": 60, "q": 4, "a": [0.2], "reps": 20, "seed": 6}]})");
    ASSERT_EQ(invoke({"simulate", dir.file("s.json"), "--out", dir.file("a.csv"), "--threads", "1"}).code, 0);
    ASSERT_EQ(invoke({"simulate", dir.file("s.json"), "--out", dir.file("b.csv"), "--threads", "1"}).code, 0);
    ASSERT_EQ(invoke({"simulate", dir.file("s.json"), "--out", dir.file("c.csv"), "--threads", "3"}).code, 0);
    const auto a = read_file(dir.file("a.csv"));
    EXPECT_EQ(a, read_file(dir.file("b.csv")));
    EXPECT_EQ(a, read_file(dir.file("c.csv")));
    EXPECT_EQ(a.substr(0, a.find('\n')), io::kResultsHeader);
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);

    const auto piped = invoke({"simulate", dir.file("s.json"), "--threads", "1"});
    EXPECT_EQ(piped.out, a);
}

TEST(CliTest, ReportAndResiduals) {
    TempDir dir;
    write_linear_csv(dir.file("d.csv"));
    const auto report = dir.file("r.json");
    const auto r = invoke({"test", "--data", dir.file("d.csv"), "--response", "y", "--seed", "11", "--out", report});
    ASSERT_EQ(r.code, 0) << r.err;

    const json j = json::parse(read_file(report));
    ASSERT_EQ(j.at("runs").size(), 1u);
    const json& run = j.at("runs")[0];
    EXPECT_EQ(run.at("data").at("n"), 80);
    EXPECT_EQ(run.at("data").at("q"), 2);
    EXPECT_EQ(run.at("config").at("seed"), 11);
    const double stat = run.at("result").at("statistic");
    const double p = run.at("result").at("p_value");
    EXPECT_DOUBLE_EQ(p, p_value(stat, Sided::two));

    const auto residuals = read_file(dir.file("r_residuals.csv"));
    EXPECT_EQ(residuals.substr(0, residuals.find('\n')), "fitted,residual");
    EXPECT_EQ(std::count(residuals.begin(), residuals.end(), '\n'), 81);

    // Pinned-seed regression anchor.
    EXPECT_NEAR(stat, -0.5907239053235791, 1e-9);
}

TEST(CliTest, ReplayReproducesStatistic) {
    TempDir dir;
    write_linear_csv(dir.file("d.csv"));
    const auto first = dir.file("first.json");
    ASSERT_EQ(invoke({"test", "--data", dir.file("d.csv"), "--response", "1", "--weight", "gaussian", "--seed", "3",
                      "--out", first})
                  .code,
              0);
    const auto second = dir.file("second.json");
    ASSERT_EQ(invoke({"test", "--replay", first, "--out", second}).code, 0);
    const double a = json::parse(read_file(first)).at("runs")[0].at("result").at("statistic");
    const double b = json::parse(read_file(second)).at("runs")[0].at("result").at("statistic");
    EXPECT_NEAR(a, b, 1e-12);
}

TEST(CliTest, AppendCollectsBothModels) {
    TempDir dir;
    write_linear_csv(dir.file("d.csv"));
    write_file(dir.file("beta.txt"), "0.6 0.8\n");
    const auto report = dir.file("r.json");
    ASSERT_EQ(invoke({"test", "--data", dir.file("d.csv"), "--response", "y", "--out", report}).code, 0);
    const auto r = invoke({"test", "--data", dir.file("d.csv"), "--response", "y", "--model",
                           "fixed_direction_polynomial", "--beta-file", dir.file("beta.txt"), "--out", report,
                           "--append"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(read_file(report));
    ASSERT_EQ(j.at("runs").size(), 2u);
    EXPECT_EQ(j.at("runs")[1].at("result").at("theta_hat_full").size(), 3u);
    EXPECT_EQ(j.at("runs")[1].at("config").at("beta").size(), 2u);
    EXPECT_NE(j.at("runs")[0].at("result").at("statistic"), j.at("runs")[1].at("result").at("statistic"));
}
