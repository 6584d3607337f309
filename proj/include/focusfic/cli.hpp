#pragma once

#include "focusfic/search.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace focusfic::cli {

namespace fs = std::filesystem;

/// Reads a header-plus-rows CSV and keeps the response and covariate columns.
/// `source` names the input in error messages.
Dataset parse_csv(std::string_view text, const std::string& response, const std::vector<std::string>& covariates,
                  const std::string& source = "input");
Dataset read_csv(const fs::path& path, const std::string& response, const std::vector<std::string>& covariates);

struct PointSelector {
    enum class Kind { rows, all, values };
    Kind kind = Kind::rows;
    std::vector<std::string> rows;
    std::vector<std::vector<double>> values;  // raw covariate values, one vector per point
};

struct SimulateSettings {
    std::string scheme = "fixed";  // fixed, argmin, exponential
    std::string model;             // indicator string for the fixed scheme
    double lambda = 1.0;
    std::size_t draws = 100000;
    std::vector<double> delta;     // empty means the estimate D_n
    Index point = 0;               // which focus point to simulate
};

struct RunConfig {
    fs::path data;
    std::string response;
    std::vector<std::string> covariates;
    bool interactions = false;
    Family family = Family::poisson_log;
    Framework framework = Framework::local;
    Criterion criterion = Criterion::fic_adj;
    SandwichMethod sandwich = SandwichMethod::empirical;
    bool hierarchy = true;
    std::vector<std::string> protected_slots;  // slot names; the intercept is always protected
    FocusKind focus_kind = FocusKind::mean_response;
    double threshold = 0.0;
    std::map<std::string, double> coefficients;  // coefficient-combination weights by slot name
    PointSelector points;
    std::vector<double> weights;
    std::vector<std::string> models;              // explicit indicator strings
    fs::path output = "focusfic-out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool allow_large = false;
    double average_lambda = 1.0;
    SimulateSettings simulate;
};

/// Loads the YAML configuration. Relative data and output paths resolve
/// against the directory holding the config file.
RunConfig load_config(const fs::path& path);
RunConfig parse_config(std::string_view text, const fs::path& base_dir);

DesignTemplate make_template(const RunConfig& config);
SearchConfig make_search_config(const RunConfig& config, const DesignTemplate& tmpl);
FocusSpec make_focus(const RunConfig& config, const Dataset& data, const DesignTemplate& tmpl);

/// Formats a value with fixed decimals and never prints a negative zero.
std::string fixed(double value, int decimals);

std::string format_table(const RankingResult& result);
std::string format_results(const RankingResult& result, const RunConfig& config, const FocusSpec& focus,
                           const DesignTemplate& tmpl);
std::string format_plot(const RankingResult& result);
std::string format_log(const RankingResult& result, const RunConfig& config, const FocusSpec& focus);

/// Writes every file to a temporary name first and renames once all writes
/// succeed. On failure the temporaries and any already-renamed files go.
void write_bundle(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files);

struct RunOutcome {
    RankingResult result;
    std::vector<std::pair<std::string, std::string>> files;
};

/// Full pipeline without touching the filesystem for outputs.
RunOutcome execute_run(const RunConfig& config);

int run_command(const RunConfig& config, std::ostream& out);
int enumerate_command(const RunConfig& config, std::ostream& out);
int simulate_command(const RunConfig& config, std::ostream& out);

/// 1 for configuration errors, 2 for data errors, 3 for numerical failures.
int exit_code(const std::exception& error);
std::string error_kind(const std::exception& error);

} // namespace focusfic::cli
