#include "selectrand/report.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#ifndef SELECTRAND_VERSION
#define SELECTRAND_VERSION "0.0.0"
#endif

namespace selectrand {

std::string library_version() { return SELECTRAND_VERSION; }

std::string format_value(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "replication,arm,metric,value\n";
    for (const auto& r : rows) {
        for (const std::string* s : {&r.arm, &r.metric})
            if (s->find_first_of(",\n\r\"") != std::string::npos)
                throw InvalidInput("write_csv: arm and metric names may not contain commas, quotes or newlines");
        out << r.replication << ',' << r.arm << ',' << r.metric << ',' << format_value(r.value) << '\n';
    }
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "replication,arm,metric,value")
        throw InvalidInput("read_csv: missing header");
    std::vector<ResultRow> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 4) throw InvalidInput("read_csv: line " + std::to_string(number) + " has the wrong field count");
        ResultRow r;
        try {
            r.replication = std::stol(fields[0]);
            r.value = std::stod(fields[3]);
        } catch (const std::exception&) {
            // strtod handles nan/inf; anything else is malformed.
            throw InvalidInput("read_csv: line " + std::to_string(number) + " is malformed");
        }
        r.arm = fields[1];
        r.metric = fields[2];
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

// ---------------------------------------------------------------------------
// Row lookups.
// ---------------------------------------------------------------------------

std::vector<std::string> arms_in_order(const std::vector<ResultRow>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (std::find(out.begin(), out.end(), r.arm) == out.end()) out.push_back(r.arm);
    return out;
}

// Value of `key=value` among the ':'-separated fields of a name.
std::string field(const std::string& name, const std::string& key) {
    std::stringstream ss(name);
    std::string part;
    while (std::getline(ss, part, ':'))
        if (part.rfind(key + "=", 0) == 0) return part.substr(key.size() + 1);
    return "";
}

std::string family(const std::string& name) { return name.substr(0, name.find(':')); }

double summary_of(const std::vector<ResultRow>& rows, const std::string& arm, const std::string& metric) {
    for (const auto& r : rows)
        if (r.replication == -1 && r.arm == arm && r.metric == metric) return r.value;
    return std::nan("");
}

// (replication, value) pairs of one metric, ordered by replication.
std::vector<std::pair<long, double>> indexed(const std::vector<ResultRow>& rows, const std::string& arm,
                                             const std::string& metric) {
    std::vector<std::pair<long, double>> out;
    for (const auto& r : rows)
        if (r.replication >= 0 && r.arm == arm && r.metric == metric) out.emplace_back(r.replication, r.value);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> values_of(const std::vector<ResultRow>& rows, const std::string& arm, const std::string& metric) {
    std::vector<double> out;
    for (auto& [i, v] : indexed(rows, arm, metric)) out.push_back(v);
    return out;
}

// ---------------------------------------------------------------------------
// Plot model and renderer.
// ---------------------------------------------------------------------------

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
    bool markers = false;
};

struct Panel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

double nice_step(double span) {
    double raw = span / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

void draw_panel(std::ostringstream& svg, const Panel& panel, double ox, double oy, double w, double h) {
    const double left = 62, right = 12, top = 28, bottom = 44;
    double pw = w - left - right, ph = h - top - bottom;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : panel.series)
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    svg << "<g transform=\"translate(" << num(ox) << "," << num(oy) << ")\">\n";
    svg << "<text x=\"" << num(w / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title)
        << "</text>\n";
    if (!std::isfinite(xmin)) {
        svg << "<text x=\"" << num(w / 2) << "\" y=\"" << num(h / 2) << "\" text-anchor=\"middle\">no data</text>\n</g>\n";
        return;
    }
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
    double xpad = 0.04 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
    xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;
    auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    double xs = nice_step(xmax - xmin), ys = nice_step(ymax - ymin);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax; t += xs)
        svg << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\""
            << num(top + ph + 4) << "\" stroke=\"#444\"/><text x=\"" << num(X(t)) << "\" y=\"" << num(top + ph + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(t) << "</text>\n";
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax; t += ys)
        svg << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(left) << "\" y2=\""
            << num(Y(t)) << "\" stroke=\"#444\"/><text x=\"" << num(left - 6) << "\" y=\"" << num(Y(t) + 3)
            << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(t) << "</text>\n";
    svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 8) << "\" text-anchor=\"middle\" font-size=\"11\">"
        << escape(panel.xlabel) << "</text>\n";
    svg << "<text transform=\"translate(14," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">"
        << escape(panel.ylabel) << "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
        const auto& s = panel.series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
        std::ostringstream path;
        bool pen = false;
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                pen = false;
                continue;
            }
            path << (pen ? " L" : " M") << num(X(x)) << "," << num(Y(y));
            pen = true;
        }
        svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
        if (s.markers)
            for (auto [x, y] : s.points)
                if (std::isfinite(x) && std::isfinite(y))
                    svg << "<circle cx=\"" << num(X(x)) << "\" cy=\"" << num(Y(y)) << "\" r=\"2.5\" fill=\"" << color
                        << "\"/>\n";
        double ly = top + 12 + 13.0 * static_cast<double>(k);
        svg << "<line x1=\"" << num(left + pw - 128) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw - 110)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/><text x=\"" << num(left + pw - 106) << "\" y=\""
            << num(ly) << "\" font-size=\"9\">" << escape(s.name) << "</text>\n";
    }
    svg << "</g>\n";
}

std::string render_panels(const std::string& title, const std::vector<Panel>& panels) {
    const double w = 440, h = 330;
    std::size_t cols = std::min<std::size_t>(3, std::max<std::size_t>(1, panels.size()));
    std::size_t rows = (panels.size() + cols - 1) / cols;
    double width = w * static_cast<double>(cols), height = 30 + h * static_cast<double>(std::max<std::size_t>(rows, 1));
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";
    for (std::size_t k = 0; k < panels.size(); ++k)
        draw_panel(svg, panels[k], w * static_cast<double>(k % cols), 30 + h * static_cast<double>(k / cols), w, h);
    svg << "</svg>\n";
    return svg.str();
}

Series ecdf(const std::string& name, std::vector<double> v) {
    Series s{name, {}, false, false};
    std::sort(v.begin(), v.end());
    std::size_t m = v.size(), stride = std::max<std::size_t>(1, m / 400);
    for (std::size_t i = 0; i < m; i += stride)
        s.points.emplace_back(v[i], static_cast<double>(i + 1) / static_cast<double>(m));
    if (m > 0) s.points.emplace_back(v.back(), 1.0);
    return s;
}

Series diagonal() { return Series{"uniform", {{0.0, 0.0}, {1.0, 1.0}}, true, false}; }

Series paired(const std::string& name, const std::vector<ResultRow>& rows, const std::string& arm,
              const std::string& xmetric, const std::string& ymetric, bool dashed = false) {
    Series s{name, {}, dashed, false};
    auto xs = indexed(rows, arm, xmetric), ys = indexed(rows, arm, ymetric);
    std::map<long, double> ymap(ys.begin(), ys.end());
    for (auto [i, x] : xs)
        if (ymap.count(i)) s.points.emplace_back(x, ymap[i]);
    return s;
}

// ---------------------------------------------------------------------------
// Per-experiment figures.
// ---------------------------------------------------------------------------

std::vector<Panel> consistency_panels(const std::vector<ResultRow>& rows) {
    std::vector<Panel> panels;
    std::map<std::string, std::size_t> by_n;
    for (const auto& arm : arms_in_order(rows)) {
        std::string n = field(arm, "n");
        if (!by_n.count(n)) {
            by_n[n] = panels.size();
            panels.push_back({"selected means, n=" + n, "reported xbar", "density", {}});
        }
        panels[by_n[n]].series.push_back(paired(family(arm), rows, arm, "hist_center", "hist_density"));
    }
    return panels;
}

std::vector<Panel> ci_panels(const std::vector<ResultRow>& rows) {
    std::vector<Panel> panels;
    for (std::string arm : {"gaussian", "logistic"}) {
        Panel p{arm + " noise: selective vs nominal", "observed xbar", "interval for mu", {}};
        p.series.push_back(paired("selective lower", rows, arm, "xbar", "lower"));
        p.series.push_back(paired("selective upper", rows, arm, "xbar", "upper"));
        p.series.push_back(paired("nominal lower", rows, arm, "xbar", "nominal_lower", true));
        p.series.push_back(paired("nominal upper", rows, arm, "xbar", "nominal_upper", true));
        panels.push_back(p);
    }
    return panels;
}

std::vector<Panel> roc_panels(const std::vector<ResultRow>& rows) {
    Panel p{"Type-II error vs screening probability", "screening probability", "Type-II error", {}};
    for (std::string fam : {"additive", "carving", "splitting"}) {
        Series s{fam, {}, false, true};
        for (const auto& arm : arms_in_order(rows))
            if (family(arm) == fam) s.points.emplace_back(summary_of(rows, arm, "screening"), summary_of(rows, arm, "type2"));
        std::sort(s.points.begin(), s.points.end());
        p.series.push_back(s);
    }
    return {p};
}

std::vector<Panel> median_panels(const std::vector<ResultRow>& rows) {
    Panel e{"pivot ECDF", "pivot", "ECDF", {}};
    std::vector<Panel> hists;
    for (const auto& arm : arms_in_order(rows)) {
        auto piv = values_of(rows, arm, "pivot");
        if (!piv.empty()) e.series.push_back(ecdf(arm, piv));
        if (family(arm) == "null") {
            Panel h{"scaled selected median, n=" + field(arm, "n"), "sqrt(n) median", "density", {}};
            h.series.push_back(paired("selected", rows, arm, "selected_center", "selected_density"));
            h.series.push_back(paired("unselected", rows, arm, "unselected_center", "unselected_density"));
            h.series.push_back(paired("selected limit", rows, arm, "selected_center", "theory_selected", true));
            h.series.push_back(paired("unselected limit", rows, arm, "unselected_center", "theory_unselected", true));
            hists.push_back(h);
        }
    }
    e.series.push_back(diagonal());
    std::vector<Panel> out{e};
    out.insert(out.end(), hists.begin(), hists.end());
    return out;
}

std::vector<Panel> clt_panels(const std::vector<ResultRow>& rows) {
    std::vector<Panel> panels;
    std::map<std::string, std::size_t> by_pop;
    std::map<std::string, std::size_t> cell_index;
    for (const auto& arm : arms_in_order(rows)) {
        std::string pop = family(arm);
        std::string cell = arm.substr(0, arm.rfind(":n="));
        if (!by_pop.count(pop)) {
            by_pop[pop] = panels.size();
            panels.push_back({pop, "log10 n", "KS statistic", {}});
        }
        Panel& p = panels[by_pop[pop]];
        if (!cell_index.count(cell)) {
            cell_index[cell] = p.series.size();
            p.series.push_back(Series{cell.substr(pop.size() + 1), {}, false, true});
        }
        double n = std::stod(field(arm, "n"));
        p.series[cell_index[cell]].points.emplace_back(std::log10(n), summary_of(rows, arm, "ks"));
    }
    for (auto& p : panels) {
        Series crit{"95% critical", {}, true, false};
        for (const auto& arm : arms_in_order(rows))
            if (family(arm) == p.title)
                crit.points.emplace_back(std::log10(std::stod(field(arm, "n"))), summary_of(rows, arm, "ks_critical"));
        std::sort(crit.points.begin(), crit.points.end());
        crit.points.erase(std::unique(crit.points.begin(), crit.points.end(),
                                      [](auto& a, auto& b) { return a.first == b.first; }),
                          crit.points.end());
        p.series.push_back(crit);
    }
    return panels;
}

std::vector<Panel> counterexample_panels(const std::vector<ResultRow>& rows) {
    Panel p{"overshoot survival given selection", "t", "P(overshoot > t | selected)", {}};
    std::vector<std::pair<double, double>> e, l3;
    for (const auto& arm : arms_in_order(rows)) {
        Series s{arm, {}, false, true};
        for (const auto& r : rows)
            if (r.arm == arm && r.replication == -1 && r.metric.rfind("survival:", 0) == 0)
                s.points.emplace_back(std::stod(field(r.metric, "t")), r.value);
        std::sort(s.points.begin(), s.points.end());
        p.series.push_back(s);
        if (e.empty())
            for (auto [t, v] : s.points) {
                e.emplace_back(t, std::exp(-t));
                l3.emplace_back(t, std::pow(3.0, -t));
            }
    }
    p.series.push_back(Series{"exp(-t)", e, true, false});
    p.series.push_back(Series{"3^(-t)", l3, true, false});
    return {p};
}

std::vector<Panel> cv_panels(const std::vector<ResultRow>& rows) {
    Panel p{"null p-value ECDF", "p-value", "ECDF", {}};
    for (const auto& arm : arms_in_order(rows)) {
        auto pv = values_of(rows, arm, "pvalue");
        if (!pv.empty()) p.series.push_back(ecdf(arm, pv));
    }
    p.series.push_back(diagonal());
    return {p};
}

} // namespace

std::string render_svg(Experiment experiment, const std::vector<ResultRow>& rows) {
    std::string title = experiment_name(experiment);
    switch (experiment) {
    case Experiment::consistency: return render_panels(title, consistency_panels(rows));
    case Experiment::ci: return render_panels(title, ci_panels(rows));
    case Experiment::roc: return render_panels(title, roc_panels(rows));
    case Experiment::median: return render_panels(title, median_panels(rows));
    case Experiment::clt: return render_panels(title, clt_panels(rows));
    case Experiment::counterexample: return render_panels(title, counterexample_panels(rows));
    case Experiment::cv: return render_panels(title, cv_panels(rows));
    }
    throw InvalidInput("render_svg: unknown experiment");
}

std::string run_meta_json(const ExperimentConfig& config, const ExperimentResult& result) {
    using nlohmann::ordered_json;
    ordered_json meta;
    meta["experiment"] = experiment_name(config.experiment);
    meta["seed"] = config.seed;
    meta["reps"] = config.reps == 0 ? ordered_json("default") : ordered_json(config.reps);
    ordered_json overrides = ordered_json::object();
    for (const auto& [k, v] : config.overrides) overrides[k] = v;
    meta["overrides"] = overrides;
    meta["versions"] = {
        {"selectrand", library_version()},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
        {"cxx_standard", static_cast<long>(__cplusplus)},
    };
    ordered_json rates = ordered_json::object();
    for (const auto& [arm, rate] : result.acceptance_rates)
        rates[arm] = std::isfinite(rate) ? ordered_json(rate) : ordered_json(nullptr);
    meta["acceptance_rates"] = rates;
    meta["rows"] = result.rows.size();
    return meta.dump(2) + "\n";
}

} // namespace selectrand
