#pragma once

#include "cost/engine.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cost::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kNumericFailure = 3,
};

// Everything needed to reproduce one `test` run; echoed into the report.
struct TestRunConfig {
    std::string data_path;
    std::string response;
    std::string model = "linear";
    std::optional<std::vector<double>> beta;
    std::optional<long long> p;
    std::string weight = "hybrid";
    double c = 1.0;
    bool normalize_by_q = true;
    double split_frac = 0.25;
    std::string split_mode = "seeded_shuffle";
    std::uint64_t seed = 0;
    std::string sided = "two";
    int max_iterations = 200;
    int restarts = 0;
};

struct TestRunOutput {
    TestResult result;
    std::string model_label;
    Eigen::Index n = 0;
    Eigen::Index q = 0;
    Vector fitted;
    Vector residuals;
};

// Loads the data named in cfg and runs the test.
TestRunOutput execute_test(const TestRunConfig& cfg);

// Entry point shared by the `cost` executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cost::cli
