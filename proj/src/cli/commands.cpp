#include "focusfic/cli.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <ostream>

namespace focusfic::cli {

namespace {

bool verbose()
{
    const char* v = std::getenv("FOCUSFIC_VERBOSE");
    return v != nullptr && *v != '\0' && std::string_view(v) != "0";
}

Dataset load_data(const RunConfig& config)
{
    return read_csv(config.data, config.response, config.covariates);
}

} // namespace

RunOutcome execute_run(const RunConfig& config)
{
    const Dataset data = load_data(config);
    const DesignTemplate tmpl = make_template(config);
    const SearchConfig search = make_search_config(config, tmpl);
    const FocusSpec focus = make_focus(config, data, tmpl);
    RunOutcome out;
    out.result = run_search(data, search, focus);
    out.files = {
        {"table.csv", format_table(out.result)},
        {"results.jsonl", format_results(out.result, config, focus, tmpl)},
        {"plot.svg", format_plot(out.result)},
        {"run.log", format_log(out.result, config, focus)},
    };
    return out;
}

int run_command(const RunConfig& config, std::ostream& out)
{
    const RunOutcome run = execute_run(config);
    write_bundle(config.output, run.files);
    const auto& sel = run.result.selected_outcome();
    out << fmt::format("selected model {} {} focus {} sqrt_fic {}\n", sel.model_id, sel.indicator,
                       fixed(sel.record.avg_focus, 3), fixed(sel.record.rmse(), 3));
    if (verbose()) {
        for (const auto& [name, content] : run.files) {
            if (name == "run.log") {
                out << content;
            }
        }
        out << fmt::format("outputs in {}\n", config.output.string());
    }
    return 0;
}

int enumerate_command(const RunConfig& config, std::ostream& out)
{
    const DesignTemplate tmpl = make_template(config);
    const SearchConfig search = make_search_config(config, tmpl);
    const auto candidates = enumerate_candidates(search);
    out << "model_id,indicator,terms\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        std::string terms;
        for (Index s : candidates[i].on_slots()) {
            if (!terms.empty()) {
                terms += ' ';
            }
            terms += tmpl.slot(s).name;
        }
        out << fmt::format("{},\"{}\",\"{}\"\n", i + 1, indicator_string(candidates[i], tmpl), terms);
    }
    if (verbose()) {
        out << fmt::format("{} candidates\n", candidates.size());
    }
    return 0;
}

int simulate_command(const RunConfig& config, std::ostream& out)
{
    const Dataset data = load_data(config);
    const DesignTemplate tmpl = make_template(config);
    const SearchConfig search = make_search_config(config, tmpl);
    const FocusSpec focus = make_focus(config, data, tmpl);
    const auto& sim = config.simulate;
    if (sim.point >= focus.point_count()) {
        throw ConfigError(fmt::format("simulate.point {} exceeds the {} focus point(s)", sim.point + 1,
                                      focus.point_count()));
    }
    const FitResult wide = fit_mle(tmpl.wide_design(data), data.response(), config.family);
    const LocalFrame frame = build_local_frame(wide, focus, sim.point, protected_slots(search));

    const auto candidates = enumerate_candidates(search);
    std::vector<ProjectionG> models;
    for (const auto& c : candidates) {
        models.push_back(projection_matrix(frame, open_subset(frame, c)));
    }
    WeightFunction weights;
    const bool adjusted = is_adjusted(config.criterion);
    if (sim.scheme == "fixed") {
        if (sim.model.empty()) {
            throw ConfigError("the fixed simulation scheme needs simulate.model");
        }
        const CandidateSpec target = parse_indicator(sim.model, tmpl, config.family);
        Index index = -1;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (candidates[i].indicator == target.indicator) {
                index = static_cast<Index>(i);
            }
        }
        if (index < 0) {
            throw ConfigError(fmt::format("simulate.model {} is not among the candidates", sim.model));
        }
        weights = fixed_model_weights(index, static_cast<Index>(models.size()));
    } else if (sim.scheme == "argmin") {
        weights = fic_argmin_weights(frame, models, adjusted);
    } else {
        weights = fic_exponential_weights(frame, models, sim.lambda, adjusted);
    }

    SimulationSpec spec;
    spec.draws = sim.draws;
    spec.seed = config.seed;
    spec.threads = config.threads;
    if (sim.delta.empty()) {
        spec.delta = frame.D_n;
    } else {
        if (static_cast<Index>(sim.delta.size()) != frame.open_count()) {
            throw ConfigError(fmt::format("simulate.delta has {} entries, expected {}", sim.delta.size(),
                                          frame.open_count()));
        }
        spec.delta = Eigen::Map<const VectorXd>(sim.delta.data(), static_cast<Index>(sim.delta.size()));
    }
    const auto draws = simulate_post_selection(frame, models, weights, spec);

    double mean = 0.0;
    for (double d : draws) {
        mean += d;
    }
    mean /= static_cast<double>(draws.size());
    double var = 0.0;
    for (double d : draws) {
        var += (d - mean) * (d - mean);
    }
    var /= static_cast<double>(draws.size() > 1 ? draws.size() - 1 : 1);

    std::string samples = "draw,lambda\n";
    for (std::size_t i = 0; i < draws.size(); ++i) {
        samples += fmt::format("{},{:.17g}\n", i + 1, draws[i]);
    }
    std::string log = fmt::format("scheme {} draws {} seed {} models {}\nmean {:.17g}\nvariance {:.17g}\n",
                                  sim.scheme, draws.size(), config.seed, models.size(), mean, var);
    write_bundle(config.output, {{"samples.csv", samples}, {"simulate.log", log}});
    out << fmt::format("simulated {} draws: mean {:.6f} variance {:.6f}\n", draws.size(), mean, var);
    return 0;
}

int exit_code(const std::exception& error)
{
    if (dynamic_cast<const DataError*>(&error)) {
        return 2;
    }
    if (dynamic_cast<const NumericalError*>(&error)) {
        return 3;
    }
    return 1;
}

std::string error_kind(const std::exception& error)
{
    switch (exit_code(error)) {
    case 2: return "data";
    case 3: return "numerical";
    default: return "config";
    }
}

} // namespace focusfic::cli
