#include "cost/io.hpp"

#include "cost/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace cost::io {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_number(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end && std::isfinite(value);
}

}  // namespace

ColumnSelector parse_column_selector(const std::string& text, const std::vector<std::string>& header) {
    for (const auto& name : header) {
        if (name == text) return text;
    }
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), index);
    if (ec == std::errc() && ptr == text.data() + text.size() && !text.empty()) {
        return index;
    }
    return text;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": file is empty (header row required)");
    table.header = split_fields(line);
    std::set<std::string> seen;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c].empty()) {
            throw DataError(path + ": header column " + std::to_string(c + 1) + " is blank");
        }
        if (!seen.insert(table.header[c]).second) {
            throw DataError(path + ": duplicate header '" + table.header[c] + "'");
        }
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != table.header.size()) {
            throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (!parse_number(fields[c], row[c])) {
                throw DataError(path + ": line " + std::to_string(line_no) + ", column '" +
                                table.header[c] + "': " +
                                (fields[c].empty() ? std::string("missing value")
                                                   : "non-numeric value '" + fields[c] + "'"));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

LoadedData load_csv(const std::string& path, const ColumnSelector& response) {
    CsvTable table = read_csv(path);
    const std::size_t cols = table.header.size();
    std::size_t target = cols;
    if (const auto* name = std::get_if<std::string>(&response)) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (table.header[c] == *name) target = c;
        }
        if (target == cols) throw DataError(path + ": no column named '" + *name + "'");
    } else {
        target = std::get<std::size_t>(response);
        if (target >= cols) {
            throw DataError(path + ": response index " + std::to_string(target) + " out of range");
        }
    }
    if (cols < 2) throw DataError(path + ": need a response and at least one predictor column");
    if (table.rows.empty()) throw DataError(path + ": no data rows");

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto q = static_cast<Eigen::Index>(cols - 1);
    Matrix x(n, q);
    Vector y(n);
    LoadedData out;
    out.response_name = table.header[target];
    for (std::size_t c = 0; c < cols; ++c) {
        if (c != target) out.predictor_names.push_back(table.header[c]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        Eigen::Index k = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (c == target) {
                y(i) = row[c];
            } else {
                x(i, k++) = row[c];
            }
        }
    }
    out.data = Dataset(std::move(x), std::move(y));
    return out;
}

Vector read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> values;
    std::string token;
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    for (char& ch : text) {
        if (ch == ',' || ch == ';') ch = ' ';
    }
    std::istringstream tokens(text);
    while (tokens >> token) {
        double v = 0.0;
        if (!parse_number(token, v)) throw DataError(path + ": non-numeric entry '" + token + "'");
        values.push_back(v);
    }
    if (values.empty()) throw DataError(path + ": no numbers found");
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// -------------------------------------------------------------------------
// Simulation configuration
// -------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) schema_error(where.empty() ? key : where + "." + key, "unknown field");
    }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        schema_error(path, "has the wrong type");
    }
}

const json& sub_object(const json& obj, const char* key) {
    static const json empty = json::object();
    if (!obj.contains(key)) return empty;
    if (!obj.at(key).is_object()) schema_error(key, "must be an object");
    return obj.at(key);
}

std::vector<StudyConfig> parse_entry(const json& j) {
    if (!j.is_object()) schema_error("config", "each entry must be an object");
    reject_unknown(j, "", {"study", "n", "q", "p", "a", "sigma_kind", "reps", "alpha", "seed", "split",
                           "weight", "fit", "sided"});
    for (const char* required : {"study", "n", "q"}) {
        if (!j.contains(required)) schema_error(required, "is required");
    }
    StudyConfig base;
    base.study = parse_study(get_field<std::string>(j, "study", "study", ""));
    base.n = get_field<Eigen::Index>(j, "n", "n", 0);
    base.q = get_field<Eigen::Index>(j, "q", "q", 0);
    if (j.contains("p") && !j.at("p").is_null()) base.p = get_field<Eigen::Index>(j, "p", "p", 0);
    base.sigma_kind = parse_covariance_kind(get_field<std::string>(j, "sigma_kind", "sigma_kind", "identity"));
    base.reps = get_field<int>(j, "reps", "reps", 1000);
    base.alpha = get_field<double>(j, "alpha", "alpha", 0.05);
    base.seed = get_field<std::uint64_t>(j, "seed", "seed", 1);
    base.sided = parse_sided(get_field<std::string>(j, "sided", "sided", "two"));

    const json& split = sub_object(j, "split");
    reject_unknown(split, "split", {"fraction_n2", "mode"});
    base.split.fraction_n2 = get_field<double>(split, "fraction_n2", "split.fraction_n2", 0.25);
    base.split.mode = parse_split_mode(get_field<std::string>(split, "mode", "split.mode", "seeded_shuffle"));

    const json& weight = sub_object(j, "weight");
    reject_unknown(weight, "weight", {"kind", "c", "normalize_by_q"});
    base.weight.kind = parse_weight_kind(get_field<std::string>(weight, "kind", "weight.kind", "hybrid"));
    base.weight.c = get_field<double>(weight, "c", "weight.c", 1.0);
    base.weight.normalize_by_q = get_field<bool>(weight, "normalize_by_q", "weight.normalize_by_q", true);

    const json& fit = sub_object(j, "fit");
    reject_unknown(fit, "fit", {"max_iterations", "loss_tolerance", "step_tolerance", "restarts"});
    base.fit.max_iterations = get_field<int>(fit, "max_iterations", "fit.max_iterations", 200);
    base.fit.loss_tolerance = get_field<double>(fit, "loss_tolerance", "fit.loss_tolerance", 1e-10);
    base.fit.step_tolerance = get_field<double>(fit, "step_tolerance", "fit.step_tolerance", 1e-10);
    if (fit.contains("restarts")) base.restarts = get_field<int>(fit, "restarts", "fit.restarts", 0);

    std::vector<double> as;
    if (!j.contains("a")) {
        as.push_back(0.0);
    } else if (j.at("a").is_array()) {
        as = get_field<std::vector<double>>(j, "a", "a", {});
        if (as.empty()) schema_error("a", "must not be empty");
    } else {
        as.push_back(get_field<double>(j, "a", "a", 0.0));
    }

    std::vector<StudyConfig> out;
    for (double a : as) {
        StudyConfig cfg = base;
        cfg.a = a;
        cfg.validate();
        out.push_back(cfg);
    }
    return out;
}

}  // namespace

SimulationPlan parse_simulation_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    SimulationPlan plan;
    json entries;
    if (root.is_array()) {
        entries = root;
    } else if (root.is_object() && root.contains("grid")) {
        reject_unknown(root, "", {"grid", "threads"});
        if (!root.at("grid").is_array()) schema_error("grid", "must be an array");
        entries = root.at("grid");
        plan.threads = get_field<unsigned>(root, "threads", "threads", 0);
    } else {
        entries = json::array({root});
    }
    for (const auto& e : entries) {
        auto cfgs = parse_entry(e);
        plan.configs.insert(plan.configs.end(), cfgs.begin(), cfgs.end());
    }
    if (plan.configs.empty()) schema_error("grid", "must not be empty");
    return plan;
}

SimulationPlan load_simulation_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_simulation_config(buffer.str());
}

// -------------------------------------------------------------------------
// Results CSV
// -------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_results_header(std::ostream& out) { out << kResultsHeader << '\n'; }

void write_results_row(std::ostream& out, const StudyConfig& cfg, const SimResult& res) {
    const Eigen::Index p = implied_parameter_count(null_model_spec(cfg));
    out << to_string(cfg.study) << ',' << cfg.n << ',' << cfg.q << ',' << p << ',' << format_double(cfg.a)
        << ',' << to_string(cfg.sigma_kind) << ',' << cfg.reps << ',' << res.reps_completed << ','
        << res.failures << ',' << format_double(res.rejection_rate) << ','
        << format_double(res.mc_standard_error) << ',' << format_double(res.mean_statistic) << ','
        << format_double(res.sd_statistic) << '\n';
}

}  // namespace cost::io
