#include "focusfic/cli.hpp"
#include "focusfic/error.hpp"
#include "focusfic/fic_local.hpp"
#include "focusfic/search.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace focusfic;

namespace {

py::dict outcome_dict(const CandidateOutcome& c)
{
    py::dict d;
    d["model_id"] = c.model_id;
    d["indicator"] = c.indicator;
    d["ok"] = c.ok;
    d["failure"] = c.failure;
    d["focus"] = c.record.avg_focus;
    d["bias"] = c.record.avg_bias;
    d["bias_adj"] = c.record.bias_adj;
    d["se"] = c.record.se();
    d["fic_u"] = c.record.afic_u;
    d["fic_adj"] = c.record.afic_adj;
    d["params"] = c.param_count;
    d["aic"] = c.aic;
    d["bic"] = c.bic;
    d["rank_fic"] = c.rank_fic;
    d["rank_aic"] = c.rank_aic;
    d["rank_bic"] = c.rank_bic;
    return d;
}

py::dict ranking_dict(const RankingResult& r)
{
    py::list rows;
    for (const auto& c : r.candidates) {
        rows.append(outcome_dict(c));
    }
    py::dict d;
    d["candidates"] = rows;
    d["order"] = r.order;
    d["selected"] = r.selected_outcome().indicator;
    d["aic_best"] = r.candidates[static_cast<std::size_t>(r.aic_best)].indicator;
    d["bic_best"] = r.candidates[static_cast<std::size_t>(r.bic_best)].indicator;
    d["wide_focus"] = r.wide_avg_focus;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Focused information criterion model search";

    static py::exception<Error> base(m, "FocusficError");
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<DataError> data_error(m, "DataError", base.ptr());
    static py::exception<NumericalError> numerical_error(m, "NumericalError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        }
    });

    m.def(
        "fit",
        [](const MatrixXd& design, const VectorXd& y, const std::string& family) {
            const FitResult f = fit_mle(design, y, parse_family(family));
            py::dict d;
            d["theta"] = f.theta_hat;
            d["loglik"] = f.loglik;
            d["aic"] = aic(f);
            d["bic"] = bic(f);
            d["fitted"] = f.fitted_mean;
            d["information"] = f.obs_info;
            d["iterations"] = f.iterations;
            return d;
        },
        py::arg("design"), py::arg("y"), py::arg("family") = "poisson",
        "Maximum-likelihood fit; returns theta, loglik, aic, bic, fitted means and J.");

    m.def(
        "enumerate",
        [](const std::vector<std::string>& covariates, bool interactions, bool hierarchy) {
            SearchConfig cfg;
            cfg.tmpl = DesignTemplate::pairwise(covariates, interactions);
            cfg.hierarchy = hierarchy;
            std::vector<std::string> out;
            for (const auto& c : enumerate_candidates(cfg)) {
                out.push_back(indicator_string(c, cfg.tmpl));
            }
            return out;
        },
        py::arg("covariates"), py::arg("interactions") = false, py::arg("hierarchy") = true,
        "Candidate indicator strings in model-id order.");

    m.def(
        "search",
        [](const VectorXd& y, const MatrixXd& x, const std::vector<std::string>& names, const std::string& focus,
           const MatrixXd& points, const std::string& family, bool interactions, const std::string& framework,
           const std::string& criterion, double threshold, std::optional<VectorXd> weights, unsigned threads) {
            const Dataset data(y, x, names);
            SearchConfig cfg;
            cfg.tmpl = DesignTemplate::pairwise(names, interactions);
            cfg.family = parse_family(family);
            cfg.framework = parse_framework(framework);
            cfg.criterion = parse_criterion(criterion);
            cfg.threads = threads;
            FocusSpec f;
            f.kind = parse_focus_kind(focus);
            f.threshold = threshold;
            f.eval_points.resize(points.rows(), cfg.tmpl.size());
            for (Index k = 0; k < points.rows(); ++k) {
                f.eval_points.row(k) = cfg.tmpl.expand(points.row(k).transpose()).transpose();
            }
            f.weights = weights ? *weights : VectorXd::Ones(points.rows());
            py::gil_scoped_release release;
            const RankingResult r = run_search(data, cfg, f);
            py::gil_scoped_acquire acquire;
            return ranking_dict(r);
        },
        py::arg("y"), py::arg("x"), py::arg("names"), py::arg("focus"), py::arg("points"),
        py::arg("family") = "poisson", py::arg("interactions") = false, py::arg("framework") = "local",
        py::arg("criterion") = "fic_adj", py::arg("threshold") = 0.0, py::arg("weights") = py::none(),
        py::arg("threads") = 1,
        "Fit and rank every candidate. `points` holds raw covariate rows.");

    m.def(
        "run_config",
        [](const std::string& path) {
            const cli::RunConfig cfg = cli::load_config(path);
            const cli::RunOutcome run = cli::execute_run(cfg);
            py::dict d = ranking_dict(run.result);
            py::dict files;
            for (const auto& [name, content] : run.files) {
                files[py::str(name)] = content;
            }
            d["files"] = files;
            return d;
        },
        py::arg("path"), "Run a YAML configuration without writing files; returns the ranking and file contents.");

    m.def("poisson_upper_tail", &poisson_upper_tail, py::arg("mean"), py::arg("threshold"), "P(Y > threshold).");

    m.def(
        "model_average",
        [](const std::vector<double>& fic, const std::vector<double>& estimates, double fic_wide, double lambda) {
            const ModelAverage a = model_average_weights(fic, estimates, fic_wide, lambda);
            return py::make_tuple(a.weights, a.estimate);
        },
        py::arg("fic"), py::arg("estimates"), py::arg("fic_wide"), py::arg("lambda") = 1.0,
        "Exponential FIC weights and the averaged estimate.");
}
