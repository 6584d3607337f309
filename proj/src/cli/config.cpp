#include "focusfic/cli.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace focusfic::cli {

namespace {

void reject_unknown(const YAML::Node& node, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!known.count(key)) {
            throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const T& fallback)
{
    const YAML::Node v = node[key];
    if (!v) {
        return fallback;
    }
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

template <typename T>
T require(const YAML::Node& node, const std::string& key)
{
    if (!node[key]) {
        throw ConfigError(fmt::format("config key '{}' is required", key));
    }
    return get<T>(node, key, T{});
}

PointSelector parse_points(const YAML::Node& node)
{
    PointSelector sel;
    if (!node) {
        sel.rows = {"1"};
        return sel;
    }
    if (node.IsScalar()) {
        const auto s = node.as<std::string>();
        if (s == "all") {
            sel.kind = PointSelector::Kind::all;
        } else {
            sel.rows = {s};
        }
        return sel;
    }
    if (node.IsSequence()) {
        for (const auto& r : node) {
            sel.rows.push_back(r.as<std::string>());
        }
        return sel;
    }
    if (node.IsMap()) {
        reject_unknown(node, {"values"}, "focus.points");
        sel.kind = PointSelector::Kind::values;
        try {
            sel.values = node["values"].as<std::vector<std::vector<double>>>();
        } catch (const YAML::Exception&) {
            throw ConfigError("focus.points.values must be a list of numeric lists");
        }
        return sel;
    }
    throw ConfigError("focus.points must be 'all', a list of row labels, or {values: [...]}");
}

} // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("config is not valid YAML: {}", e.msg));
    }
    if (!root.IsMap()) {
        throw ConfigError("config must be a mapping");
    }
    reject_unknown(root,
                   {"data", "response", "covariates", "interactions", "family", "framework", "criterion", "sandwich",
                    "hierarchy", "protected", "focus", "models", "output", "seed", "threads", "allow_large",
                    "average_lambda", "simulate"},
                   "config");
    RunConfig c;
    const auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base_dir / p; };
    c.data = resolve(require<std::string>(root, "data"));
    c.response = require<std::string>(root, "response");
    c.covariates = require<std::vector<std::string>>(root, "covariates");
    if (c.covariates.empty()) {
        throw ConfigError("at least one covariate is required");
    }
    c.interactions = get<bool>(root, "interactions", false);
    c.family = parse_family(get<std::string>(root, "family", "poisson"));
    c.framework = parse_framework(get<std::string>(root, "framework", "local"));
    c.criterion = parse_criterion(get<std::string>(root, "criterion", "fic_adj"));
    c.sandwich = parse_sandwich_method(get<std::string>(root, "sandwich", "empirical"));
    c.hierarchy = get<bool>(root, "hierarchy", true);
    c.protected_slots = get<std::vector<std::string>>(root, "protected", {});
    c.models = get<std::vector<std::string>>(root, "models", {});
    c.output = resolve(get<std::string>(root, "output", "focusfic-out"));
    c.seed = get<std::uint64_t>(root, "seed", 1);
    c.threads = get<unsigned>(root, "threads", 1);
    c.allow_large = get<bool>(root, "allow_large", false);
    c.average_lambda = get<double>(root, "average_lambda", 1.0);

    const YAML::Node focus = root["focus"];
    if (!focus || !focus.IsMap()) {
        throw ConfigError("config section 'focus' is required");
    }
    reject_unknown(focus, {"kind", "threshold", "coefficients", "points", "weights"}, "focus");
    c.focus_kind = parse_focus_kind(require<std::string>(focus, "kind"));
    c.threshold = get<double>(focus, "threshold", 0.0);
    c.coefficients = get<std::map<std::string, double>>(focus, "coefficients", {});
    c.points = parse_points(focus["points"]);
    c.weights = get<std::vector<double>>(focus, "weights", {});
    if (c.focus_kind == FocusKind::exceedance && !focus["threshold"]) {
        throw ConfigError("exceedance focus needs a threshold");
    }

    if (const YAML::Node sim = root["simulate"]) {
        reject_unknown(sim, {"scheme", "model", "lambda", "draws", "delta", "point"}, "simulate");
        c.simulate.scheme = get<std::string>(sim, "scheme", "fixed");
        if (c.simulate.scheme != "fixed" && c.simulate.scheme != "argmin" && c.simulate.scheme != "exponential") {
            throw ConfigError(fmt::format("unknown simulation scheme '{}'", c.simulate.scheme));
        }
        c.simulate.model = get<std::string>(sim, "model", "");
        c.simulate.lambda = get<double>(sim, "lambda", 1.0);
        c.simulate.draws = get<std::size_t>(sim, "draws", 100000);
        c.simulate.delta = get<std::vector<double>>(sim, "delta", {});
        const auto point = get<long>(sim, "point", 1);
        if (point < 1) {
            throw ConfigError("simulate.point is 1-based");
        }
        c.simulate.point = static_cast<Index>(point - 1);
    }
    if (c.threads == 0) {
        throw ConfigError("threads must be at least 1");
    }
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

DesignTemplate make_template(const RunConfig& config)
{
    return DesignTemplate::pairwise(config.covariates, config.interactions);
}

SearchConfig make_search_config(const RunConfig& config, const DesignTemplate& tmpl)
{
    SearchConfig s;
    s.tmpl = tmpl;
    s.hierarchy = config.hierarchy;
    s.framework = config.framework;
    s.criterion = config.criterion;
    s.family = config.family;
    s.sandwich = config.sandwich;
    s.allow_large = config.allow_large;
    s.threads = config.threads;
    s.protected_mask.assign(static_cast<std::size_t>(tmpl.size()), 0);
    s.protected_mask[0] = 1;
    for (const auto& name : config.protected_slots) {
        bool found = false;
        for (Index i = 0; i < tmpl.size(); ++i) {
            if (tmpl.slot(i).name == name) {
                s.protected_mask[static_cast<std::size_t>(i)] = 1;
                found = true;
            }
        }
        if (!found) {
            throw ConfigError(fmt::format("protected slot '{}' is not in the design", name));
        }
    }
    for (const auto& m : config.models) {
        s.explicit_candidates.push_back(parse_indicator(m, tmpl, config.family));
    }
    return s;
}

FocusSpec make_focus(const RunConfig& config, const Dataset& data, const DesignTemplate& tmpl)
{
    FocusSpec f;
    f.kind = config.focus_kind;
    f.threshold = config.threshold;
    const MatrixXd wide = tmpl.wide_design(data);
    std::vector<VectorXd> rows;
    switch (config.points.kind) {
    case PointSelector::Kind::all:
        for (Index i = 0; i < wide.rows(); ++i) {
            rows.push_back(wide.row(i).transpose());
        }
        break;
    case PointSelector::Kind::rows:
        for (const auto& label : config.points.rows) {
            const auto idx = data.row_index(label);
            if (!idx) {
                throw ConfigError(fmt::format("focus point row '{}' does not exist", label));
            }
            rows.push_back(wide.row(*idx).transpose());
        }
        break;
    case PointSelector::Kind::values:
        for (const auto& v : config.points.values) {
            if (v.size() != config.covariates.size()) {
                throw ConfigError(fmt::format("inline focus point has {} values, expected {}", v.size(),
                                              config.covariates.size()));
            }
            rows.push_back(tmpl.expand(Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()))));
        }
        break;
    }
    if (rows.empty()) {
        throw ConfigError("focus point selector resolves to no rows");
    }
    f.eval_points.resize(static_cast<Index>(rows.size()), tmpl.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        f.eval_points.row(static_cast<Index>(k)) = rows[k].transpose();
    }
    if (config.weights.empty()) {
        f.weights = VectorXd::Ones(f.eval_points.rows());
    } else {
        f.weights = Eigen::Map<const VectorXd>(config.weights.data(), static_cast<Index>(config.weights.size()));
    }
    if (f.kind == FocusKind::coefficient_combination) {
        f.coefficients = VectorXd::Zero(tmpl.size());
        for (const auto& [name, w] : config.coefficients) {
            bool found = false;
            for (Index i = 0; i < tmpl.size(); ++i) {
                if (tmpl.slot(i).name == name) {
                    f.coefficients(i) = w;
                    found = true;
                }
            }
            if (!found) {
                throw ConfigError(fmt::format("focus coefficient '{}' names no design slot", name));
            }
        }
    }
    f.validate(tmpl.size(), config.family);
    return f;
}

} // namespace focusfic::cli
