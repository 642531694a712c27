#include "fdelab/cli.hpp"

#include "fdelab/asymptotics.hpp"
#include "fdelab/diagnostics.hpp"
#include "fdelab/errors.hpp"
#include "fdelab/evolver.hpp"
#include "fdelab/profile.hpp"
#include "fdelab/quadrature.hpp"
#include "fdelab/regimes.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace fdelab {

namespace {

namespace fs = std::filesystem;

// A JSON object whose keys are checked against an allow-list on construction.
class Section {
public:
    Section(const Json& doc, std::string where, std::initializer_list<std::string_view> allowed)
        : doc_(doc), where_(std::move(where)) {
        if (!doc_.is_object()) {
            throw ConfigError(where_ + " must be a JSON object");
        }
        const std::set<std::string_view> keys(allowed);
        for (const auto& [key, value] : doc_.items()) {
            if (!keys.contains(key)) {
                throw ConfigError("unknown key '" + key + "' in " + where_);
            }
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return doc_.contains(key) && !doc_[key].is_null(); }

    [[nodiscard]] double number(const std::string& key) const {
        if (!has(key)) {
            throw ConfigError("missing key '" + key + "' in " + where_);
        }
        if (!doc_[key].is_number()) {
            throw ConfigError("'" + key + "' in " + where_ + " must be a number");
        }
        return doc_[key].get<double>();
    }
    [[nodiscard]] double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    [[nodiscard]] std::optional<double> maybe_number(const std::string& key) const {
        return has(key) ? std::optional<double>(number(key)) : std::nullopt;
    }
    [[nodiscard]] int integer(const std::string& key) const {
        if (!has(key) || !doc_[key].is_number_integer()) {
            throw ConfigError("'" + key + "' in " + where_ + " must be an integer");
        }
        return doc_[key].get<int>();
    }
    [[nodiscard]] int integer(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    [[nodiscard]] bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        if (!doc_[key].is_boolean()) {
            throw ConfigError("'" + key + "' in " + where_ + " must be true or false");
        }
        return doc_[key].get<bool>();
    }
    [[nodiscard]] std::string text(const std::string& key) const {
        if (!has(key) || !doc_[key].is_string()) {
            throw ConfigError("'" + key + "' in " + where_ + " must be a string");
        }
        return doc_[key].get<std::string>();
    }
    [[nodiscard]] std::vector<double> numbers(const std::string& key) const {
        if (!has(key) || !doc_[key].is_array() || doc_[key].empty()) {
            throw ConfigError("'" + key + "' in " + where_ + " must be a non-empty array of numbers");
        }
        std::vector<double> out;
        for (const auto& v : doc_[key]) {
            if (!v.is_number()) {
                throw ConfigError("'" + key + "' in " + where_ + " must hold numbers only");
            }
            out.push_back(v.get<double>());
        }
        return out;
    }
    [[nodiscard]] const Json& child(const std::string& key) const {
        if (!has(key)) {
            throw ConfigError("missing section '" + key + "' in " + where_);
        }
        return doc_[key];
    }
    [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

private:
    const Json& doc_;
    std::string where_;
};

ParamSet read_params(const Section& top) {
    const Section s(top.child("params"), top.path("params"), {"n", "m", "beta"});
    return derive_params(s.integer("n"), s.number("m"), s.number("beta"));
}

GridSpec read_grid_spec(const Section& top) {
    GridSpec spec;
    if (top.has("grid")) {
        const Section s(top.child("grid"), top.path("grid"),
                        {"r_inner", "r_max", "nodes_per_decade", "r_floor", "r_switch", "rtol", "atol"});
        spec.r_inner = s.number("r_inner", spec.r_inner);
        spec.r_max = s.number("r_max", spec.r_max);
        spec.nodes_per_decade = s.integer("nodes_per_decade", spec.nodes_per_decade);
        spec.r_floor = s.number("r_floor", spec.r_floor);
        spec.r_switch = s.number("r_switch", spec.r_switch);
        spec.rtol = s.number("rtol", spec.rtol);
        spec.atol = s.number("atol", spec.atol);
    }
    spec.validate();
    return spec;
}

InitialKind parse_kind(const std::string& name) {
    if (name == "profile_exact") {
        return InitialKind::profile_exact;
    }
    if (name == "sandwich_blend") {
        return InitialKind::sandwich_blend;
    }
    if (name == "min_profiles") {
        return InitialKind::min_profiles;
    }
    throw ConfigError("unknown initial kind '" + name + "'");
}

InitialSpec read_initial(const Json& doc, const std::string& where) {
    const Section s(doc, where, {"kind", "lambda_0", "lambda_1", "lambda_2", "blend_inner", "blend_outer"});
    InitialSpec spec;
    spec.kind = parse_kind(s.text("kind"));
    spec.lambda_0 = s.number("lambda_0", spec.lambda_0);
    spec.lambda_1 = s.number("lambda_1", spec.lambda_1);
    spec.lambda_2 = s.number("lambda_2", spec.lambda_2);
    spec.blend_inner = s.number("blend_inner", spec.blend_inner);
    spec.blend_outer = s.number("blend_outer", spec.blend_outer);
    return spec;
}

std::vector<double> positive_values(const Section& s, const std::string& key) {
    auto v = s.numbers(key);
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw ConfigError("'" + key + "' must hold positive finite values");
        }
    }
    return v;
}

// Runs fn(0..count-1) on up to `threads` workers and rethrows the first failure by index.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto extra = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads))) - 1;
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < extra; ++k) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string tag(double lambda) {
    return format_number(lambda);
}

bool strictly_decreasing(std::span<const double> v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] < v[k - 1])) {
            return false;
        }
    }
    return true;
}

double max_relative_difference(std::span<const double> a, std::span<const double> b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out = std::max(out, std::abs(a[i] - b[i]) / std::abs(b[i]));
    }
    return out;
}

struct ProfileRun {
    std::shared_ptr<const Profile> prof;
    std::optional<AsymptoticFit> fit;
    Json doc;
};

ProfileRun run_one_profile(const ParamSet& p, const Regime& reg, double lambda, const GridSpec& spec, bool fit,
                           const fs::path& out) {
    ProfileRun run;
    run.prof = std::make_shared<Profile>(solve_profile(p, lambda, spec));
    const Profile& prof = *run.prof;
    write_atomic(out / ("profile_" + tag(lambda) + ".csv"), profile_table(prof).str());

    Json& doc = run.doc;
    doc["lambda"] = lambda;
    doc["center"] = prof.center();
    doc["nodes"] = prof.size();
    const double last = prof.r().back();
    doc["r2f1m_at_r_max"] = last * last * std::pow(prof.f().back(), 1.0 - p.m);

    if (p.at_beta_1()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < prof.size() && prof.r()[i] <= 100.0; ++i) {
            const double exact = barenblatt_profile(p, lambda, prof.r()[i]);
            worst = std::max(worst, std::abs(prof.f()[i] - exact) / exact);
        }
        doc["barenblatt_max_rel_error"] = worst;
    }
    if (!fit) {
        return run;
    }

    const WTrace tr = to_log_trace(prof);
    write_atomic(out / ("trace_" + tag(lambda) + ".csv"), trace_table(tr).str());
    const AsymptoticFit f = fit_second_order(tr, p, reg);
    run.fit = f;
    Json fj = to_json(f);
    fj["lambda"] = lambda;
    fj["b_collapse"] = f.b_lambda * std::pow(lambda, f.gamma_used);
    fj["identity_residual"] = verify_integral_identity(tr, p);
    try {
        fj["limits"] = to_json(compute_limits(tr, p));
    } catch (const DivergentIntegral& e) {
        fj["limits"] = nullptr;
        fj["limits_error"] = e.what();
    }
    write_json(out / ("fit_" + tag(lambda) + ".json"), fj);
    doc["fit"] = fj;
    return run;
}

// Nodes where the two profiles agree to this relative level are not used for ordering.
constexpr double kOrderingResolution = 1e-9;

// Sign structure of f_hi - f_lo on shared nodes: ordered, or one crossing with reversed order beyond.
Json ordering_doc(const Profile& lo, const Profile& hi) {
    const auto r = lo.r();
    const auto a = lo.f();
    const auto b = hi.f();
    std::optional<double> crossing;
    bool reversed_beyond = true;
    bool ordered = true;
    double resolved = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = b[i] - a[i];
        if (i > 0 && std::abs(d) <= kOrderingResolution * a[i]) {
            continue;
        }
        resolved = r[i];
        if (!crossing) {
            if (d <= 0.0) {
                ordered = false;
                crossing = i > 0 ? 0.5 * (r[i - 1] + r[i]) : 0.0;
            }
        } else if (d >= 0.0) {
            reversed_beyond = false;
        }
    }
    Json j;
    j["lambda_lo"] = lo.lambda();
    j["lambda_hi"] = hi.lambda();
    j["ordered"] = ordered;
    j["resolved_up_to"] = resolved;
    j["crossing_radius"] = crossing ? Json(*crossing) : Json(nullptr);
    j["reversed_beyond_crossing"] = crossing ? Json(reversed_beyond) : Json(nullptr);
    return j;
}

Json scaling_doc(const ParamSet& p, const GridSpec& spec, const std::vector<ProfileRun>& runs,
                 const std::vector<double>& lambdas, int threads) {
    // The base is the profile whose lambda is closest to 1.
    std::size_t base = 0;
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        if (std::abs(std::log(lambdas[k])) < std::abs(std::log(lambdas[base]))) {
            base = k;
        }
    }
    Json checks = Json::array();
    std::vector<Json> entries(lambdas.size());
    parallel_for(lambdas.size(), threads, [&](std::size_t k) {
        if (k == base) {
            return;
        }
        const Profile scaled = rescale_profile(*runs[base].prof, lambdas[k]);
        const Profile direct = solve_profile_at(p, lambdas[k], spec, scaled.r());
        entries[k] = Json{{"lambda", lambdas[k]},
                          {"max_rel_deviation", max_relative_difference(scaled.f(), direct.f())}};
    });
    double worst_rescale = 0.0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (k != base) {
            worst_rescale = std::max(worst_rescale, entries[k]["max_rel_deviation"].get<double>());
            checks.push_back(entries[k]);
        }
    }

    Json doc;
    doc["base_lambda"] = lambdas[base];
    doc["rescale_vs_solve"] = checks;
    doc["max_rescale_deviation"] = worst_rescale;

    if (runs[base].fit) {
        const double ref = runs[base].fit->b_lambda * std::pow(lambdas[base], runs[base].fit->gamma_used);
        Json collapse = Json::array();
        double worst = 0.0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const double c = runs[k].fit->b_lambda * std::pow(lambdas[k], runs[k].fit->gamma_used);
            collapse.push_back(Json{{"lambda", lambdas[k]}, {"b_collapse", c}});
            worst = std::max(worst, std::abs(c / ref - 1.0));
        }
        doc["collapse"] = collapse;
        doc["max_collapse_deviation"] = worst;
    }

    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });
    Json ordering = Json::array();
    for (std::size_t k = 1; k < order.size(); ++k) {
        ordering.push_back(ordering_doc(*runs[order[k - 1]].prof, *runs[order[k]].prof));
    }
    doc["ordering"] = ordering;
    return doc;
}

std::shared_ptr<const Profile> reference_on_grid(const ParamSet& p, double lambda, const RadialGrid& g) {
    GridSpec spec;
    spec.r_max = std::max(spec.r_max, g.outer());
    return std::make_shared<Profile>(solve_profile_at(p, lambda, spec, g.r));
}

std::vector<double> values_of(const std::vector<std::optional<double>>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        out.push_back(x.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    return out;
}

Json regime_table(const Section& s, const fs::path& out) {
    const auto dims = s.numbers("dims");
    const int m_points = s.integer("m_points", 50);
    const int beta_points = s.integer("beta_points", 50);
    const double beta_span = s.number("beta_span", 2.0);
    if (m_points < 1 || beta_points < 1 || !(beta_span > 1.0)) {
        throw ConfigError("regime table needs positive point counts and beta_span > 1");
    }
    std::string csv = "n,m,beta,label,sign_a1,a1\n";
    std::size_t rows = 0;
    Json counts = Json::object();
    for (double nd : dims) {
        const int n = static_cast<int>(nd);
        if (n != nd || n < 3) {
            throw ConfigError("dims must be integers >= 3");
        }
        const double m_top = (n - 2.0) / n;
        std::vector<double> ms;
        for (int i = 0; i < m_points; ++i) {
            ms.push_back(m_top * (i + 0.5) / m_points);
        }
        if (n > 4) {
            ms.push_back((n - 4.0) / (n - 2.0));
        }
        for (double m : ms) {
            const ParamSet base = derive_params(n, m, 1.0 + 2.0 * m / (n - 2.0 - n * m));
            const double lo = base.beta_e;
            const double hi = beta_span * std::max(base.beta_1, base.beta_0);
            std::vector<double> betas;
            for (int j = 0; j < beta_points; ++j) {
                betas.push_back(lo + (hi - lo) * (j + 0.5) / beta_points);
            }
            betas.push_back(base.beta_1);
            for (double beta : betas) {
                const ParamSet p = derive_params(n, m, beta);
                const Regime reg = classify(p);
                const std::string label(to_string(reg.label));
                counts[label] = counts.value(label, 0) + 1;
                csv += std::to_string(n) + "," + format_number(m) + "," + format_number(p.beta) + "," + label + "," +
                       (reg.sign_a1 ? std::string(to_string(*reg.sign_a1)) : std::string()) + "," +
                       (p.a1 ? format_number(*p.a1) : std::string()) + "\n";
                ++rows;
            }
        }
    }
    write_atomic(out / "regime_table.csv", csv);
    return Json{{"kind", "regime_table"}, {"rows", rows}, {"labels", counts}};
}

Json stationarity_study(const Section& s, const ParamSet& p, int threads, const fs::path& out) {
    const auto drs = positive_values(s, "dr");
    const double lambda = s.number("lambda", 1.0);
    const int steps = s.integer("steps", 1000);
    const double cfl = s.number("cfl", 0.5);
    InitialSpec init;
    init.kind = InitialKind::profile_exact;
    init.lambda_0 = lambda;
    const double outer = s.number("outer_radius", default_outer_radius(init));
    if (steps < 1) {
        throw ConfigError("steps must be positive");
    }

    std::vector<double> drift(drs.size()), tau(drs.size());
    parallel_for(drs.size(), threads, [&](std::size_t k) {
        const RadialState start = build_initial(init, p, make_grid(p.n, drs[k], outer));
        RadialState st = start;
        const double dt = max_stable_step(st, cfl);
        for (int i = 0; i < steps; ++i) {
            advance(st, dt);
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < st.u.size(); ++i) {
            worst = std::max(worst, std::abs(st.u[i] - start.u[i]) / start.u[i]);
        }
        drift[k] = worst;
        tau[k] = st.tau;
    });

    CsvTable t({"dr", "tau", "max_rel_drift"});
    Json rows = Json::array();
    for (std::size_t k = 0; k < drs.size(); ++k) {
        t.add_row({drs[k], tau[k], drift[k]});
        rows.push_back(Json{{"dr", drs[k]}, {"tau", tau[k]}, {"max_rel_drift", drift[k]}});
    }
    write_atomic(out / "stationarity.csv", t.str());
    return Json{{"kind", "stationarity"}, {"steps", steps}, {"runs", rows}};
}

Json tail_integral_study(const Section& s, const ParamSet& p, const GridSpec& given, int threads,
                         const fs::path& out) {
    const auto lambdas = positive_values(s, "lambdas");
    auto radii = positive_values(s, "radii");
    if (lambdas.size() != 2 || radii.size() < 2) {
        throw ConfigError("tail_integral needs two lambdas and at least two radii");
    }
    std::sort(radii.begin(), radii.end());
    GridSpec spec = given;
    spec.r_max = std::max(spec.r_max, radii.back());
    std::vector<std::shared_ptr<const Profile>> prof(2);
    parallel_for(2, threads, [&](std::size_t k) {
        prof[k] = std::make_shared<Profile>(solve_profile(p, lambdas[k], spec));
    });
    const auto r = prof[0]->r();
    std::vector<double> integral;
    for (double R : radii) {
        std::vector<double> rr, d;
        for (std::size_t i = 0; i < r.size() && r[i] <= R * (1.0 + 1e-12); ++i) {
            rr.push_back(r[i]);
            d.push_back(std::abs(prof[0]->f()[i] - prof[1]->f()[i]));
        }
        integral.push_back(sphere_area(p.n) * radial_moment(rr, d, p.n - 1.0));
    }
    CsvTable t({"R", "integral", "increment"});
    Json slopes = Json::array();
    for (std::size_t k = 0; k < radii.size(); ++k) {
        std::optional<double> inc;
        if (k > 0) {
            inc = integral[k] - integral[k - 1];
        }
        t.add_row({radii[k], integral[k], inc});
        if (k > 1) {
            const double ratio = (integral[k] - integral[k - 1]) / (integral[k - 1] - integral[k - 2]);
            slopes.push_back(std::log(ratio) / std::log(radii[k] / radii[k - 1]));
        }
    }
    write_atomic(out / "tail_integral.csv", t.str());
    return Json{{"kind", "tail_integral"},
                {"tail_exponent", tail_exponent(p)},
                {"integrals", integral},
                {"estimated_exponents", slopes}};
}

} // namespace

Json cmd_params(int n, double m, double beta) {
    const ParamSet p = derive_params(n, m, beta);
    return Json{{"params", to_json(p)}, {"regime", to_json(classify(p))}};
}

Json cmd_profile(const Json& config, const RunContext& ctx) {
    const Section top(config, "config", {"params", "lambdas", "grid", "fit"});
    const ParamSet p = read_params(top);
    const Regime reg = classify(p);
    const GridSpec spec = read_grid_spec(top);
    const auto lambdas = positive_values(top, "lambdas");
    const bool fit = top.flag("fit", reg.supported() && spec.r_max >= 1e3);

    std::vector<ProfileRun> runs(lambdas.size());
    parallel_for(lambdas.size(), ctx.threads, [&](std::size_t k) {
        runs[k] = run_one_profile(p, reg, lambdas[k], spec, fit, ctx.out_dir);
    });

    Json summary;
    summary["params"] = to_json(p);
    summary["regime"] = to_json(reg);
    summary["profiles"] = Json::array();
    for (const auto& run : runs) {
        summary["profiles"].push_back(run.doc);
    }
    if (lambdas.size() >= 2) {
        Json scaling = scaling_doc(p, spec, runs, lambdas, ctx.threads);
        write_json(ctx.out_dir / "scaling_check.json", scaling);
        summary["scaling_check"] = scaling;
    }
    write_json(ctx.out_dir / "profile_summary.json", summary);
    return summary;
}

Json cmd_evolve(const Json& config, const RunContext& ctx) {
    const Section top(config, "config",
                      {"params", "initial", "grid", "tau_end", "sample_every", "cfl", "max_step", "reference_lambda",
                       "diagnostics"});
    const ParamSet p = read_params(top);
    const Regime reg = classify(p);
    const InitialSpec init = read_initial(top.child("initial"), top.path("initial"));

    double dr = 0.0025;
    double outer = default_outer_radius(init);
    if (top.has("grid")) {
        const Section g(top.child("grid"), top.path("grid"), {"dr", "outer_radius"});
        dr = g.number("dr", dr);
        outer = g.number("outer_radius", outer);
    }

    EvolveOptions opts;
    opts.tau_end = top.number("tau_end");
    opts.sample_every = top.number("sample_every");
    opts.cfl = top.number("cfl", opts.cfl);
    opts.max_step = top.maybe_number("max_step");
    const auto ref_lambda = top.maybe_number("reference_lambda");

    const Json empty = Json::object();
    const Section diag(top.has("diagnostics") ? top.child("diagnostics") : empty, top.path("diagnostics"),
                       {"sup_radius", "weighted_l1", "envelope", "contraction", "comparison", "decay_fit",
                        "aronson_benilan"});
    opts.sup_radius = diag.maybe_number("sup_radius");
    if (diag.flag("weighted_l1", false)) {
        if (!ref_lambda) {
            throw ConfigError("weighted_l1 needs a reference profile: set reference_lambda");
        }
        if (!p.p0) {
            throw ConfigError("weighted_l1 needs a C1 parameter set with a weight exponent p0");
        }
        opts.weight_p0 = *p.p0;
    }

    const auto grid = make_grid(p.n, dr, outer);
    const RadialState start = build_initial(init, p, grid);
    if (ref_lambda) {
        opts.reference = reference_on_grid(p, *ref_lambda, *grid);
    }

    std::optional<ProfileFamily> family;
    if (diag.has("envelope")) {
        const Section e(diag.child("envelope"), diag.path("envelope"), {"lam_lo", "lam_hi", "tol"});
        EnvelopeSpec env;
        env.lam_lo = e.number("lam_lo", env.lam_lo);
        env.lam_hi = e.number("lam_hi", env.lam_hi);
        env.tol = e.number("tol", env.tol);
        GridSpec spec;
        spec.r_max = std::max(spec.r_max, 1.01 * env.lam_hi * outer);
        env.base = std::make_shared<Profile>(solve_profile(p, 1.0, spec));
        family.emplace(env.base);
        opts.envelope = env;
    }

    // Independent runs: the main evolution, an optional stationary companion
    // for the decay-fit floor, and the paired monitors.
    struct PairJob {
        std::string name;
        RadialState a;
        RadialState b;
        double lambda_2;
        std::optional<ContractionRecord> rec;
    };
    std::vector<PairJob> pairs;
    ContractionOptions copts{opts.tau_end, opts.sample_every, opts.cfl, opts.max_step};
    if (diag.has("contraction")) {
        const Section c(diag.child("contraction"), diag.path("contraction"), {"partner", "lambda_2"});
        const InitialSpec partner = read_initial(c.child("partner"), c.path("partner"));
        pairs.push_back({"contraction", build_initial(partner, p, grid), start, c.number("lambda_2", init.lambda_2),
                         std::nullopt});
    }
    if (diag.has("comparison")) {
        const Json& list = diag.child("comparison");
        if (!list.is_array()) {
            throw ConfigError("diagnostics.comparison must be an array of initial-data sections");
        }
        for (std::size_t k = 0; k < list.size(); ++k) {
            const InitialSpec partner = read_initial(list[k], diag.path("comparison[" + std::to_string(k) + "]"));
            pairs.push_back({"comparison_" + std::to_string(k), build_initial(partner, p, grid), start,
                             init.lambda_2, std::nullopt});
        }
    }
    std::optional<double> floor_factor, tau_min;
    if (diag.has("decay_fit")) {
        if (!ref_lambda) {
            throw ConfigError("decay_fit needs reference_lambda");
        }
        const Section d(diag.child("decay_fit"), diag.path("decay_fit"), {"floor_factor", "tau_min"});
        floor_factor = d.number("floor_factor", 10.0);
        tau_min = d.number("tau_min", 1.0);
    }

    EvolutionReport rep;
    EvolutionReport companion;
    const std::size_t jobs = 2 + pairs.size();
    parallel_for(jobs, ctx.threads, [&](std::size_t k) {
        if (k == 0) {
            rep = evolve(start, opts);
        } else if (k == 1) {
            if (floor_factor) {
                InitialSpec still;
                still.kind = InitialKind::profile_exact;
                still.lambda_0 = *ref_lambda;
                EvolveOptions o = opts;
                o.envelope.reset();
                o.weight_p0.reset();
                companion = evolve(build_initial(still, p, grid), o);
            }
        } else {
            PairJob& job = pairs[k - 2];
            job.rec = contraction_monitor(job.a, job.b, job.lambda_2, copts);
        }
    });
    write_atomic(ctx.out_dir / "report.csv", report_table(rep).str());

    Json summary;
    summary["params"] = to_json(p);
    summary["regime"] = to_json(reg);
    summary["grid"] = Json{{"dr", dr}, {"outer_radius", grid->outer()}, {"nodes", grid->nodes()}};
    summary["steps"] = rep.steps;
    summary["samples"] = rep.taus.size();
    summary["center_initial"] = rep.center_value.front();
    summary["center_final"] = rep.center_value.back();
    summary["center_strictly_decreasing"] = strictly_decreasing(rep.center_value);
    summary["center_final_over_f_lambda_1"] =
        rep.center_value.back() / std::pow(init.lambda_1, p.height_exponent());
    if (opts.reference) {
        summary["sup_ratio"] = *rep.sup_dist.back() / *rep.sup_dist.front();
    }
    if (family) {
        const auto lam = values_of(rep.lambda_env);
        summary["lambda_env_strictly_decreasing"] = strictly_decreasing(lam);
        summary["lambda_env_final"] = lam.back();
        std::vector<EnvelopeResult> scans;
        for (const auto& st : rep.states) {
            scans.push_back(lambda_envelope(st, *family, opts.envelope->lam_lo, opts.envelope->lam_hi,
                                            opts.envelope->tol));
        }
        write_atomic(ctx.out_dir / "envelope_scan.csv", envelope_scan_table(rep.taus, scans).str());
    }
    if (init.kind == InitialKind::sandwich_blend) {
        const auto lo = profile_on_grid(p, init.lambda_1, *grid);
        const auto hi = profile_on_grid(p, init.lambda_2, *grid);
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& st : rep.states) {
            for (std::size_t i = 0; i < st.u.size(); ++i) {
                margin = std::min({margin, st.u[i] - lo[i], hi[i] - st.u[i]});
            }
        }
        summary["sandwich_margin"] = margin;
    }
    if (floor_factor) {
        const auto fit = fit_decay_rate(rep.taus, values_of(rep.l1_dist), values_of(companion.l1_dist), *tau_min,
                                        *floor_factor);
        summary["decay_fit"] = Json{{"rate", fit.rate},
                                    {"expected", p.decay_rate},
                                    {"relative_error", std::abs(fit.rate / p.decay_rate - 1.0)},
                                    {"tau_window", Json::array({fit.tau_lo, fit.tau_hi})},
                                    {"points", fit.points},
                                    {"floor_final", *companion.l1_dist.back()}};
    }
    for (const auto& job : pairs) {
        const ContractionRecord& rec = *job.rec;
        Json j;
        j["min_order_gap"] = *std::min_element(rec.order_gap.begin(), rec.order_gap.end());
        if (job.name == "contraction") {
            write_atomic(ctx.out_dir / "contraction.csv", contraction_table(rec).str());
            double excess = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < rec.taus.size(); ++k) {
                excess = std::max(excess, (rec.wl1_pair_dist[k] + rec.dissipation[k]) / rec.wl1_pair_dist[0] - 1.0);
            }
            j["strictly_decreasing"] = strictly_decreasing(rec.wl1_pair_dist);
            j["max_budget_excess"] = excess;
            j["final_ratio"] = rec.wl1_pair_dist.back() / rec.wl1_pair_dist.front();
        } else {
            write_atomic(ctx.out_dir / (job.name + ".csv"), contraction_table(rec).str());
        }
        summary[job.name] = j;
    }
    if (diag.has("aronson_benilan")) {
        const Section ab(diag.child("aronson_benilan"), diag.path("aronson_benilan"), {"T"});
        const double T = ab.number("T", 1.0);
        std::vector<Slice> slices;
        for (const auto& st : rep.states) {
            if (st.tau > 0.0) {
                slices.push_back(reconstruct_original(st, T));
            }
        }
        summary["aronson_benilan_max_violation"] = aronson_benilan_check(slices, T, p.m);
    }
    write_json(ctx.out_dir / "evolve_summary.json", summary);
    return summary;
}

Json cmd_sweep(const Json& config, const RunContext& ctx) {
    if (!config.is_object() || !config.contains("kind") || !config["kind"].is_string()) {
        throw ConfigError("sweep config needs a string 'kind'");
    }
    const std::string kind = config["kind"].get<std::string>();
    Json result;
    if (kind == "regime_table") {
        const Section s(config, "config", {"kind", "dims", "m_points", "beta_points", "beta_span"});
        result = regime_table(s, ctx.out_dir);
    } else if (kind == "stationarity") {
        const Section s(config, "config", {"kind", "params", "lambda", "dr", "steps", "cfl", "outer_radius"});
        result = stationarity_study(s, read_params(s), ctx.threads, ctx.out_dir);
    } else if (kind == "tail_integral") {
        const Section s(config, "config", {"kind", "params", "lambdas", "radii", "grid"});
        result = tail_integral_study(s, read_params(s), read_grid_spec(s), ctx.threads, ctx.out_dir);
    } else {
        throw ConfigError("unknown sweep kind '" + kind + "'");
    }
    write_json(ctx.out_dir / "sweep_summary.json", result);
    return result;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Self-similar profiles and rescaled flows of the fast diffusion equation"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    int threads = 1;
    app.add_option("--config", config_path, "JSON run configuration");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for independent solves")->check(CLI::Range(1, 256));

    int n = 3;
    double m = 0.0;
    double beta = 0.0;
    auto* params = app.add_subcommand("params", "print derived constants and the regime as JSON");
    params->add_option("n", n)->required();
    params->add_option("m", m)->required();
    params->add_option("beta", beta)->required();
    auto* profile = app.add_subcommand("profile", "solve profiles and fit their second-order tails");
    auto* evolve_cmd = app.add_subcommand("evolve", "run the rescaled evolution");
    auto* sweep = app.add_subcommand("sweep", "batch studies");
    for (auto* sub : {params, profile, evolve_cmd, sweep}) {
        sub->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunContext ctx;
        ctx.out_dir = out_dir;
        ctx.threads = threads;
        Json result;
        if (params->parsed()) {
            result = cmd_params(n, m, beta);
            if (out_opt->count() > 0) {
                write_json(ctx.out_dir / "params.json", result);
            }
        } else {
            if (config_path.empty()) {
                throw ConfigError("this command needs --config <path>");
            }
            const Json config = read_json(config_path);
            if (profile->parsed()) {
                result = cmd_profile(config, ctx);
            } else if (evolve_cmd->parsed()) {
                result = cmd_evolve(config, ctx);
            } else {
                result = cmd_sweep(config, ctx);
            }
        }
        out << result.dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        err << "error: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace fdelab
