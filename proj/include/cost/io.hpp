#pragma once

#include "cost/model.hpp"
#include "cost/simulation.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace cost::io {

// A header name, or a 0-based column index.
using ColumnSelector = std::variant<std::string, std::size_t>;

// Name match first; otherwise a non-negative integer is taken as an index.
ColumnSelector parse_column_selector(const std::string& text, const std::vector<std::string>& header);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path);

struct LoadedData {
    Dataset data;
    std::string response_name;
    std::vector<std::string> predictor_names;
};

// Response column pulled out; remaining columns become predictors in file order.
LoadedData load_csv(const std::string& path, const ColumnSelector& response);

// Whitespace- or comma-separated numbers.
Vector read_vector_file(const std::string& path);

// One StudyConfig per (entry, a) pair, in file order.
struct SimulationPlan {
    std::vector<StudyConfig> configs;
    unsigned threads = 0;
};

// Accepts a single config object, an array of them, or {"grid": [...], "threads": k}.
SimulationPlan parse_simulation_config(const std::string& json_text);
SimulationPlan load_simulation_config(const std::string& path);

inline constexpr const char* kResultsHeader =
    "study,n,q,p,a,sigma,reps,completed,failures,rejection_rate,mc_se,mean_stat,sd_stat";

void write_results_header(std::ostream& out);
void write_results_row(std::ostream& out, const StudyConfig& cfg, const SimResult& res);

// Shortest decimal text that reads back to exactly the same double.
std::string format_double(double v);

}  // namespace cost::io
