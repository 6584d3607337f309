#include "focusfic/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct Overrides {
    std::string output;
    unsigned threads = 0;
    long long seed = -1;
};

void add_overrides(CLI::App* sub, std::string& config, Overrides& o)
{
    sub->add_option("config", config, "YAML run configuration")->required();
    sub->add_option("-o,--output", o.output, "Output directory (overrides the config)");
    sub->add_option("-j,--threads", o.threads, "Worker threads (overrides the config)");
    sub->add_option("--seed", o.seed, "Simulation seed (overrides the config)");
}

focusfic::cli::RunConfig load(const std::string& path, const Overrides& o)
{
    auto c = focusfic::cli::load_config(path);
    if (!o.output.empty()) {
        c.output = o.output;
    }
    if (o.threads > 0) {
        c.threads = o.threads;
    }
    if (o.seed >= 0) {
        c.seed = static_cast<std::uint64_t>(o.seed);
    }
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Focused information criterion model search"};
    app.require_subcommand(1);
    std::string config;
    Overrides overrides;
    auto* run = app.add_subcommand("run", "Fit and rank all candidates; write table, plot, results and log");
    auto* enumerate = app.add_subcommand("enumerate", "List the candidate models");
    auto* simulate = app.add_subcommand("simulate", "Sample the post-selection limit distribution");
    for (auto* sub : {run, enumerate, simulate}) {
        add_overrides(sub, config, overrides);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto cfg = load(config, overrides);
        if (run->parsed()) {
            return focusfic::cli::run_command(cfg, std::cout);
        }
        if (enumerate->parsed()) {
            return focusfic::cli::enumerate_command(cfg, std::cout);
        }
        return focusfic::cli::simulate_command(cfg, std::cout);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n' || ch == '\r') {
                ch = ' ';
            }
        }
        std::cerr << "error: " << focusfic::cli::error_kind(e) << ": " << msg << "\n";
        return focusfic::cli::exit_code(e);
    }
}
