#include "focusfic/cli.hpp"

#include "focusfic/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace focusfic::cli {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double value, int decimals)
{
    if (!std::isfinite(value)) {
        return "NA";
    }
    std::string s = fmt::format("{:.{}f}", value, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

namespace {

std::vector<Index> table_order(const RankingResult& result)
{
    std::vector<Index> rows = result.order;
    rows.insert(rows.end(), result.failures.begin(), result.failures.end());
    return rows;
}

double sqrt_or_nan(double v)
{
    return v >= 0.0 ? std::sqrt(v) : std::nan("");
}

ordered_json number(double v)
{
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

} // namespace

std::string format_table(const RankingResult& result)
{
    std::string out = "model_id,indicator,focus,bias,se,sqrt_fic_u,sqrt_fic_adj,aic,bic,rank_fic,rank_aic,rank_bic\n";
    for (Index i : table_order(result)) {
        const auto& c = result.candidates[static_cast<std::size_t>(i)];
        if (!c.ok) {
            out += fmt::format("{},\"{}\",NA,NA,NA,NA,NA,NA,NA,NA,NA,NA\n", c.model_id, c.indicator);
            continue;
        }
        const auto& r = c.record;
        out += fmt::format("{},\"{}\",{},{},{},{},{},{},{},{},{},{}\n", c.model_id, c.indicator, fixed(r.avg_focus, 3),
                           fixed(r.bias_adj, 3), fixed(r.se(), 3), fixed(sqrt_or_nan(r.afic_u), 3),
                           fixed(r.rmse(), 3), fixed(c.aic, 2), fixed(c.bic, 2), c.rank_fic, c.rank_aic, c.rank_bic);
    }
    return out;
}

std::string format_results(const RankingResult& result, const RunConfig& config, const FocusSpec& focus,
                           const DesignTemplate& tmpl)
{
    std::string out;
    ordered_json head;
    head["record"] = "run";
    head["family"] = to_string(config.family);
    head["framework"] = to_string(config.framework);
    head["criterion"] = to_string(config.criterion);
    head["sandwich"] = to_string(config.sandwich);
    head["focus_kind"] = to_string(focus.kind);
    head["focus_points"] = focus.point_count();
    head["n_obs"] = result.wide_fit.n_obs();
    std::vector<std::string> slots;
    for (const auto& s : tmpl.slots()) {
        slots.push_back(s.name);
    }
    head["slots"] = slots;
    head["candidates"] = result.candidates.size();
    head["failures"] = result.failures.size();
    const auto& sel = result.selected_outcome();
    head["selected"] = sel.indicator;
    head["selected_model_id"] = sel.model_id;
    head["selected_focus"] = number(sel.record.avg_focus);
    head["aic_best"] = result.candidates[static_cast<std::size_t>(result.aic_best)].indicator;
    head["bic_best"] = result.candidates[static_cast<std::size_t>(result.bic_best)].indicator;
    head["wide_focus"] = number(result.wide_avg_focus);
    head["wide_loglik"] = number(result.wide_fit.loglik);
    out += head.dump() + "\n";

    for (const auto& c : result.candidates) {
        ordered_json j;
        j["record"] = "candidate";
        j["model_id"] = c.model_id;
        j["indicator"] = c.indicator;
        j["ok"] = c.ok;
        if (!c.ok) {
            j["failure"] = c.failure;
            out += j.dump() + "\n";
            continue;
        }
        const auto& r = c.record;
        j["focus"] = number(r.avg_focus);
        j["bias"] = number(r.avg_bias);
        j["bias_adj"] = number(r.bias_adj);
        j["variance"] = number(r.avg_variance);
        j["se"] = number(r.se());
        j["sqbias_u"] = number(r.avg_sqbias_raw);
        j["fic_u"] = number(r.afic_u);
        j["fic_adj"] = number(r.afic_adj);
        j["sqrt_fic_adj"] = number(r.rmse());
        j["criterion"] = number(c.criterion_value);
        j["params"] = c.param_count;
        j["loglik"] = number(c.loglik);
        j["aic"] = number(c.aic);
        j["bic"] = number(c.bic);
        j["rank_fic"] = c.rank_fic;
        j["rank_aic"] = c.rank_aic;
        j["rank_bic"] = c.rank_bic;
        if (r.points.size() > 1) {
            ordered_json pts = ordered_json::array();
            for (const auto& p : r.points) {
                pts.push_back({{"focus", number(p.mu_hat)},
                               {"bias", number(p.bias_hat)},
                               {"se", number(p.se)},
                               {"kappa_sq_over_n", number(p.kappa_sq_over_n)},
                               {"fic_u", number(p.fic_u)},
                               {"fic_adj", number(p.fic_adj)}});
            }
            j["points"] = std::move(pts);
        } else if (!r.points.empty()) {
            j["kappa_sq_over_n"] = number(r.points.front().kappa_sq_over_n);
            j["kappa_clipped"] = r.points.front().kappa_clipped;
        }
        out += j.dump() + "\n";
    }
    return out;
}

namespace {

struct Axis {
    double lo;
    double hi;
    double step;
};

Axis nice_axis(double lo, double hi)
{
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo) * 0.1);
        lo -= pad;
        hi += pad;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

} // namespace

std::string format_plot(const RankingResult& result)
{
    constexpr double width = 640.0;
    constexpr double height = 480.0;
    constexpr double left = 70.0;
    constexpr double right = 20.0;
    constexpr double top = 30.0;
    constexpr double bottom = 50.0;

    double xmax = 0.0;
    double ymin = INFINITY;
    double ymax = -INFINITY;
    for (Index i : result.order) {
        const auto& r = result.candidates[static_cast<std::size_t>(i)].record;
        xmax = std::max(xmax, r.rmse());
        ymin = std::min(ymin, r.avg_focus);
        ymax = std::max(ymax, r.avg_focus);
    }
    const Axis ax = nice_axis(0.0, xmax);
    const Axis ay = nice_axis(ymin, ymax);
    const double sx = (width - left - right) / (ax.hi - ax.lo);
    const double sy = (height - top - bottom) / (ay.hi - ay.lo);
    const auto px = [&](double v) { return left + (v - ax.lo) * sx; };
    const auto py = [&](double v) { return height - bottom - (v - ay.lo) * sy; };

    std::string s;
    s += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
                     "font-family=\"sans-serif\" font-size=\"12\">\n",
                     width, height);
    s += "<title>FIC plot</title>\n";
    s += fmt::format("<desc id=\"axis-transform\">px = {:.17g} + (sqrt_fic_adj - {:.17g}) * {:.17g}; "
                     "py = {:.17g} - (focus - {:.17g}) * {:.17g}</desc>\n",
                     left, ax.lo, sx, height - bottom, ay.lo, sy);
    s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    s += fmt::format("<g stroke=\"#999\" stroke-width=\"1\">\n<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/>\n"
                     "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\"/>\n</g>\n",
                     left, height - bottom, width - right, top);
    s += "<g fill=\"#333\">\n";
    const int nx = static_cast<int>(std::lround((ax.hi - ax.lo) / ax.step));
    for (int t = 0; t <= nx; ++t) {
        const double v = ax.lo + t * ax.step;
        s += fmt::format("<text x=\"{:.4f}\" y=\"{:.4f}\" text-anchor=\"middle\">{}</text>\n", px(v),
                         height - bottom + 16, fixed(v, 2));
    }
    const int ny = static_cast<int>(std::lround((ay.hi - ay.lo) / ay.step));
    for (int t = 0; t <= ny; ++t) {
        const double v = ay.lo + t * ay.step;
        s += fmt::format("<text x=\"{:.4f}\" y=\"{:.4f}\" text-anchor=\"end\">{}</text>\n", left - 6, py(v) + 4,
                         fixed(v, 3));
    }
    s += fmt::format("<text x=\"{:.4f}\" y=\"{:.4f}\" text-anchor=\"middle\">sqrt(FIC)</text>\n",
                     left + (width - left - right) / 2, height - 12);
    s += fmt::format("<text x=\"16\" y=\"{:.4f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.4f})\">"
                     "estimate</text>\n",
                     top + (height - top - bottom) / 2, top + (height - top - bottom) / 2);
    s += "</g>\n";

    const auto marker_line = [&](double y, const char* colour) {
        s += fmt::format("<line x1=\"{:.4f}\" y1=\"{:.4f}\" x2=\"{:.4f}\" y2=\"{:.4f}\" stroke=\"{}\" "
                         "stroke-dasharray=\"4 3\"/>\n",
                         left, py(y), width - right, py(y), colour);
    };
    if (result.wide >= 0 && result.candidates[static_cast<std::size_t>(result.wide)].ok) {
        marker_line(result.candidates[static_cast<std::size_t>(result.wide)].record.avg_focus, "blue");
    }
    marker_line(result.selected_outcome().record.avg_focus, "red");

    s += "<g id=\"points\">\n";
    for (const auto& c : result.candidates) {
        if (!c.ok) {
            continue;
        }
        const double x = c.record.rmse();
        const double y = c.record.avg_focus;
        const auto idx = static_cast<Index>(c.model_id - 1);
        const char* role = idx == result.selected ? "selected" : (idx == result.wide ? "wide" : "candidate");
        const std::string attrs = fmt::format("data-model=\"{}\" data-role=\"{}\" data-sqrt-fic=\"{:.17g}\" "
                                              "data-focus=\"{:.17g}\"",
                                              c.model_id, role, x, y);
        if (idx == result.wide && idx != result.selected) {
            const double cx = px(x);
            const double cy = py(y);
            s += fmt::format("<path d=\"M {:.4f} {:.4f} L {:.4f} {:.4f} L {:.4f} {:.4f} Z\" fill=\"blue\" {}/>\n", cx,
                             cy - 6, cx - 5.2, cy + 3, cx + 5.2, cy + 3, attrs);
        } else {
            s += fmt::format("<circle cx=\"{:.4f}\" cy=\"{:.4f}\" r=\"{}\" fill=\"{}\" {}/>\n", px(x), py(y),
                             idx == result.selected ? 5 : 3, idx == result.selected ? "red" : "#555", attrs);
        }
    }
    s += "</g>\n</svg>\n";
    return s;
}

std::string format_log(const RankingResult& result, const RunConfig& config, const FocusSpec& focus)
{
    std::string s;
    const auto line = [&](const std::string& t) { s += t + "\n"; };
    const auto describe = [&](const char* label, Index i) {
        const auto& c = result.candidates[static_cast<std::size_t>(i)];
        line(fmt::format("{}: model {} {} focus {} sqrt_fic_adj {} rank_fic {} rank_aic {} rank_bic {}", label,
                         c.model_id, c.indicator, fixed(c.record.avg_focus, 6), fixed(c.record.rmse(), 6), c.rank_fic,
                         c.rank_aic, c.rank_bic));
    };
    line(fmt::format("family {} framework {} criterion {} sandwich {}", to_string(config.family),
                     to_string(config.framework), to_string(config.criterion), to_string(config.sandwich)));
    line(fmt::format("focus {} at {} point(s)", to_string(focus.kind), focus.point_count()));
    line(fmt::format("candidates {} fitted {} failed {}", result.candidates.size(),
                     result.candidates.size() - result.failures.size(), result.failures.size()));
    line(fmt::format("wide focus {}", fixed(result.wide_avg_focus, 6)));
    describe("selected", result.selected);
    describe("aic best", result.aic_best);
    describe("bic best", result.bic_best);
    if (result.wide >= 0 && result.candidates[static_cast<std::size_t>(result.wide)].ok) {
        describe("wide", result.wide);
    }
    for (Index i : result.failures) {
        const auto& c = result.candidates[static_cast<std::size_t>(i)];
        line(fmt::format("failed: model {} {}: {}", c.model_id, c.indicator, c.failure));
    }
    return s;
}

void write_bundle(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
    }
    std::vector<fs::path> temps;
    std::vector<fs::path> finals;
    const auto cleanup = [&] {
        for (const auto& p : temps) {
            fs::remove(p, ec);
        }
        for (const auto& p : finals) {
            fs::remove(p, ec);
        }
    };
    try {
        for (const auto& [name, content] : files) {
            const fs::path tmp = dir / (name + ".partial");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) {
                throw ConfigError(fmt::format("cannot write '{}'", tmp.string()));
            }
        }
        for (std::size_t i = 0; i < files.size(); ++i) {
            const fs::path target = dir / files[i].first;
            fs::rename(temps[i], target);
            finals.push_back(target);
        }
    } catch (const fs::filesystem_error& e) {
        cleanup();
        throw ConfigError(fmt::format("cannot write outputs: {}", e.what()));
    } catch (...) {
        cleanup();
        throw;
    }
}

} // namespace focusfic::cli
