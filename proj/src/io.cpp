#include "fdelab/io.hpp"

#include "fdelab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace fdelab {

namespace {

Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

} // namespace

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

Json to_json(const ParamSet& p) {
    Json j;
    j["n"] = p.n;
    j["m"] = p.m;
    j["beta"] = p.beta;
    j["alpha"] = p.alpha;
    j["c_star"] = p.c_star;
    j["beta_e"] = p.beta_e;
    j["beta_1"] = p.beta_1;
    j["beta_2"] = p.beta_2;
    j["beta_0"] = p.beta_0;
    j["a0"] = p.a0;
    j["gamma_1"] = optional_number(p.gamma_1);
    j["gamma_2"] = optional_number(p.gamma_2);
    j["a1"] = optional_number(p.a1);
    j["a2"] = optional_number(p.a2);
    j["c0_lin"] = optional_number(p.c0_lin);
    j["p0"] = optional_number(p.p0);
    j["a_star"] = optional_number(p.a_star);
    j["decay_rate"] = p.decay_rate;
    return j;
}

Json to_json(const Regime& reg) {
    Json j;
    j["label"] = std::string(to_string(reg.label));
    j["sign_a1"] = reg.sign_a1 ? Json(std::string(to_string(*reg.sign_a1))) : Json(nullptr);
    return j;
}

Json to_json(const AsymptoticFit& fit) {
    Json j;
    j["gamma_used"] = fit.gamma_used;
    j["b_lambda"] = fit.b_lambda;
    j["slope"] = fit.slope;
    j["window"] = Json::array({fit.s_lo, fit.s_hi});
    j["points"] = fit.points;
    j["residual"] = fit.residual;
    j["i1"] = fit.i1;
    j["i2"] = optional_number(fit.i2);
    return j;
}

Json to_json(const LimitPair& lim) {
    return Json{{"lim1", lim.lim1}, {"lim2", lim.lim2}, {"gap", lim.gap}};
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::optional<double>> row) {
    if (row.size() != header_.size()) {
        throw GridMismatch("CSV row width differs from the header");
    }
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t c = 0; c < header_.size(); ++c) {
        out += c ? "," : "";
        out += header_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += c ? "," : "";
            if (row[c]) {
                out += format_number(*row[c]);
            }
        }
        out += '\n';
    }
    return out;
}

CsvTable profile_table(const Profile& prof) {
    CsvTable t({"r", "f", "fprime", "r2f1m"});
    const double e = 1.0 - prof.params().m;
    const auto r = prof.r();
    const auto f = prof.f();
    const auto fp = prof.fprime();
    for (std::size_t i = 0; i < r.size(); ++i) {
        t.add_row({r[i], f[i], fp[i], r[i] * r[i] * std::pow(f[i], e)});
    }
    return t;
}

CsvTable trace_table(const WTrace& tr) {
    CsvTable t({"s", "g", "w", "phi", "h"});
    for (std::size_t k = 0; k < tr.s.size(); ++k) {
        t.add_row({tr.s[k], tr.g[k], tr.w[k], tr.phi[k], tr.h[k]});
    }
    return t;
}

CsvTable report_table(const EvolutionReport& rep) {
    CsvTable t({"tau", "sup_dist", "l1_dist", "wl1_dist", "center_value", "lambda_env"});
    for (std::size_t k = 0; k < rep.taus.size(); ++k) {
        t.add_row({rep.taus[k], rep.sup_dist[k], rep.l1_dist[k], rep.wl1_dist[k], rep.center_value[k],
                   rep.lambda_env[k]});
    }
    return t;
}

CsvTable contraction_table(const ContractionRecord& rec) {
    CsvTable t({"tau", "wl1_pair_dist", "dissipation", "budget", "order_gap"});
    const double d0 = rec.wl1_pair_dist.empty() ? 0.0 : rec.wl1_pair_dist.front();
    for (std::size_t k = 0; k < rec.taus.size(); ++k) {
        std::optional<double> budget;
        if (d0 > 0.0) {
            budget = (rec.wl1_pair_dist[k] + rec.dissipation[k]) / d0;
        }
        t.add_row({rec.taus[k], rec.wl1_pair_dist[k], rec.dissipation[k], budget, rec.order_gap[k]});
    }
    return t;
}

CsvTable envelope_scan_table(std::span<const double> taus, std::span<const EnvelopeResult> scans) {
    if (taus.size() != scans.size()) {
        throw GridMismatch("one envelope scan per sample is required");
    }
    CsvTable t({"tau", "lambda", "feasible"});
    for (std::size_t k = 0; k < taus.size(); ++k) {
        for (std::size_t j = 0; j < scans[k].grid.size(); ++j) {
            t.add_row({taus[k], scans[k].grid[j], scans[k].feasible[j] ? 1.0 : 0.0});
        }
    }
    return t;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw ConfigError("cannot open " + tmp.string() + " for writing");
        }
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os.flush()) {
            throw ConfigError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
    write_atomic(path, doc.dump(2) + "\n");
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read config " + path.string());
    }
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace fdelab
