#include "cost/cli.hpp"

#include "cost/errors.hpp"
#include "cost/io.hpp"
#include "cost/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cost::cli {

namespace {

using nlohmann::json;

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json config_to_json(const TestRunConfig& c) {
    json j;
    j["data"] = c.data_path;
    j["response"] = c.response;
    j["model"] = c.model;
    j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
    j["p"] = c.p ? json(*c.p) : json(nullptr);
    j["weight"] = c.weight;
    j["c"] = c.c;
    j["normalize_by_q"] = c.normalize_by_q;
    j["split_frac"] = c.split_frac;
    j["split_mode"] = c.split_mode;
    j["seed"] = c.seed;
    j["sided"] = c.sided;
    j["max_iterations"] = c.max_iterations;
    j["restarts"] = c.restarts;
    return j;
}

TestRunConfig config_from_json(const json& j) {
    TestRunConfig c;
    try {
        c.data_path = j.at("data").get<std::string>();
        c.response = j.at("response").get<std::string>();
        c.model = j.at("model").get<std::string>();
        if (!j.at("beta").is_null()) c.beta = j.at("beta").get<std::vector<double>>();
        if (!j.at("p").is_null()) c.p = j.at("p").get<long long>();
        c.weight = j.at("weight").get<std::string>();
        c.c = j.at("c").get<double>();
        c.normalize_by_q = j.at("normalize_by_q").get<bool>();
        c.split_frac = j.at("split_frac").get<double>();
        c.split_mode = j.at("split_mode").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.sided = j.at("sided").get<std::string>();
        c.max_iterations = j.at("max_iterations").get<int>();
        c.restarts = j.at("restarts").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("replayed config is malformed: ") + e.what());
    }
    return c;
}

json result_to_json(const TestRunConfig& cfg, const TestRunOutput& run, const std::string& residuals_path) {
    const TestResult& r = run.result;
    json res;
    res["statistic"] = r.statistic;
    res["numerator"] = r.numerator;
    res["conditional_sd"] = r.conditional_sd;
    res["p_value_two_sided"] = r.p_value_two_sided;
    res["p_value_one_sided"] = r.p_value_one_sided;
    res["p_value"] = cfg.sided == "one" ? r.p_value_one_sided : r.p_value_two_sided;
    res["sided"] = cfg.sided;
    res["n1"] = r.split.n1;
    res["n2"] = r.split.n2;
    res["bandwidth"] = r.bandwidth_used;
    res["sigma_ridge"] = r.sigma_ridge;
    res["theta_hat_1"] = to_std(r.theta_hat_1);
    res["theta_hat_2"] = to_std(r.theta_hat_2);
    res["theta_hat_full"] = to_std(r.theta_hat_full);
    res["converged"] = {{"first", r.converged_1}, {"second", r.converged_2}, {"full", r.converged_full}};

    json j;
    j["model"] = run.model_label;
    j["data"] = {{"path", cfg.data_path}, {"n", run.n}, {"q", run.q}, {"response", cfg.response}};
    j["config"] = config_to_json(cfg);
    j["result"] = res;
    j["residuals_csv"] = residuals_path;
    return j;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path + ": not valid JSON: " + e.what());
    }
}

void write_residuals(const std::string& path, const TestRunOutput& run) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "fitted,residual\n";
    for (Eigen::Index i = 0; i < run.fitted.size(); ++i) {
        out << io::format_double(run.fitted(i)) << ',' << io::format_double(run.residuals(i)) << '\n';
    }
}

std::string default_residuals_path(const std::string& report) {
    std::filesystem::path p(report);
    const auto stem = p.stem().string();
    return (p.parent_path() / (stem + "_residuals.csv")).string();
}

int report_error(std::ostream& err, int code, const std::string& what) {
    err << "error: " << what << '\n';
    return code;
}

}  // namespace

TestRunOutput execute_test(const TestRunConfig& cfg) {
    // Load the data first so a bad path surfaces as a data error.
    const auto header = io::read_csv(cfg.data_path).header;
    const io::LoadedData loaded =
        io::load_csv(cfg.data_path, io::parse_column_selector(cfg.response, header));

    ModelSpec spec;
    spec.family = parse_model_family(cfg.model);
    spec.q = loaded.data.q();
    if (cfg.p) spec.p = static_cast<Eigen::Index>(*cfg.p);
    if (cfg.beta) {
        spec.direction = Eigen::Map<const Vector>(cfg.beta->data(), static_cast<Eigen::Index>(cfg.beta->size()));
    }
    const ParametricModel model = make_model(spec);

    WeightSpec weight;
    weight.kind = parse_weight_kind(cfg.weight);
    weight.c = cfg.c;
    weight.normalize_by_q = cfg.normalize_by_q;

    SplitOptions split;
    split.fraction_n2 = cfg.split_frac;
    split.mode = parse_split_mode(cfg.split_mode);
    split.seed = cfg.seed;

    FitOptions fit_opts;
    fit_opts.max_iterations = cfg.max_iterations;
    fit_opts.restarts = cfg.restarts;
    fit_opts.restart_seed = cfg.seed;
    parse_sided(cfg.sided);

    TestRunOutput out;
    out.result = cost_statistic(model, loaded.data, weight, split, fit_opts);
    out.model_label = model.label();
    out.n = loaded.data.n();
    out.q = loaded.data.q();
    out.fitted = model.predict(out.result.theta_hat_full, loaded.data.predictors());
    out.residuals = loaded.data.responses() - out.fitted;
    return out;
}

namespace {

int cmd_test(const TestRunConfig& cfg, const std::string& report_path, std::string residuals_path,
             bool append, std::ostream& out) {
    if (residuals_path.empty()) residuals_path = default_residuals_path(report_path);
    const TestRunOutput run = execute_test(cfg);
    write_residuals(residuals_path, run);

    json report = {{"runs", json::array()}};
    if (append && std::filesystem::exists(report_path)) {
        report = read_json_file(report_path);
        if (!report.contains("runs") || !report.at("runs").is_array()) {
            throw DataError(report_path + ": existing report has no runs array");
        }
    }
    report["runs"].push_back(result_to_json(cfg, run, residuals_path));
    std::ofstream file(report_path);
    if (!file) throw IoError("cannot write '" + report_path + "'");
    file << report.dump(2) << '\n';

    const TestResult& r = run.result;
    out << run.model_label << ": statistic " << r.statistic << ", p-value (" << cfg.sided << "-sided) "
        << (cfg.sided == "one" ? r.p_value_one_sided : r.p_value_two_sided) << ", n1=" << r.split.n1
        << ", n2=" << r.split.n2 << (r.all_converged() ? "" : " [fit did not converge]") << '\n';
    return kOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::optional<unsigned> threads,
                 std::ostream& out) {
    const io::SimulationPlan plan = io::load_simulation_config(config_path);
    const unsigned nthreads = threads.value_or(plan.threads);

    std::ofstream file;
    std::ostream* sink = &out;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw IoError("cannot write '" + out_path + "'");
        sink = &file;
    }
    io::write_results_header(*sink);
    run_grid(plan.configs, nthreads, [sink](std::size_t, const StudyConfig& cfg, const SimResult& res) {
        io::write_results_row(*sink, cfg, res);
        sink->flush();
    });
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conditionally studentised specification test for parametric regressions", "cost"};
    app.require_subcommand(1);

    TestRunConfig cfg;
    std::string report_path = "cost_report.json";
    std::string residuals_path;
    std::string beta_file;
    std::string replay;
    bool append = false;
    bool no_normalize = false;
    long long p_value_opt = 0;

    auto* test = app.add_subcommand("test", "Test a parametric model on a CSV dataset");
    test->add_option("--data", cfg.data_path, "CSV file with a header row");
    test->add_option("--response", cfg.response, "Response column (name or 0-based index)");
    test->add_option("--model", cfg.model, "Model family")->capture_default_str();
    test->add_option("--beta-file", beta_file, "Fixed direction for fixed_direction_polynomial");
    auto* p_opt = test->add_option("--p", p_value_opt, "Parameter count for block families");
    test->add_option("--weight", cfg.weight, "inverse_sqrt | gaussian | kernel_sum | hybrid")->capture_default_str();
    test->add_option("--c", cfg.c, "Bandwidth constant in h = c n^-0.2")->capture_default_str();
    test->add_flag("--no-normalize", no_normalize, "Do not divide the kernel sum by q");
    test->add_option("--split-frac", cfg.split_frac, "Fraction of rows in the second part")->capture_default_str();
    test->add_option("--split-mode", cfg.split_mode, "seeded_shuffle | as_ordered")->capture_default_str();
    test->add_option("--seed", cfg.seed, "Seed for the split and fit restarts")->capture_default_str();
    test->add_option("--sided", cfg.sided, "one | two")->capture_default_str();
    test->add_option("--max-iterations", cfg.max_iterations, "Fit iteration budget")->capture_default_str();
    test->add_option("--restarts", cfg.restarts, "Extra random starts for the fit")->capture_default_str();
    test->add_option("--out", report_path, "Report file (JSON)")->capture_default_str();
    test->add_option("--residuals", residuals_path, "Residuals CSV (default: <report>_residuals.csv)");
    test->add_flag("--append", append, "Append this run to an existing report");
    test->add_option("--replay", replay, "Re-run the last configuration echoed in a report");

    std::string sim_config;
    std::string sim_out;
    unsigned sim_threads = 0;
    auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo size/power studies");
    simulate->add_option("config", sim_config, "JSON configuration file")->required();
    simulate->add_option("--out", sim_out, "Results CSV (default: stdout)");
    auto* threads_opt = simulate->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return kUsage;
    }

    try {
        if (*test) {
            if (!replay.empty()) {
                const json report = read_json_file(replay);
                if (!report.contains("runs") || report.at("runs").empty()) {
                    throw DataError(replay + ": report has no runs");
                }
                cfg = config_from_json(report.at("runs").back().at("config"));
            } else {
                if (cfg.data_path.empty() || cfg.response.empty()) {
                    err << "--data and --response are required\n" << test->help();
                    return kUsage;
                }
                cfg.normalize_by_q = !no_normalize;
                if (p_opt->count() > 0) cfg.p = p_value_opt;
                if (!beta_file.empty()) cfg.beta = to_std(io::read_vector_file(beta_file));
            }
            return cmd_test(cfg, report_path, residuals_path, append, out);
        }
        std::optional<unsigned> threads;
        if (threads_opt->count() > 0) threads = sim_threads;
        return cmd_simulate(sim_config, sim_out, threads, out);
    } catch (const ConfigError& e) {
        return report_error(err, kUsage, e.what());
    } catch (const ArgumentError& e) {
        return report_error(err, kUsage, e.what());
    } catch (const DataError& e) {
        return report_error(err, kDataError, e.what());
    } catch (const IoError& e) {
        return report_error(err, kDataError, e.what());
    } catch (const NumericError& e) {
        return report_error(err, kNumericFailure, e.what());
    } catch (const HarnessError& e) {
        return report_error(err, kNumericFailure, e.what());
    }
}

}  // namespace cost::cli
