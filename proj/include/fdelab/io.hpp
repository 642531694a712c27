#pragma once

#include "fdelab/asymptotics.hpp"
#include "fdelab/diagnostics.hpp"
#include "fdelab/evolver.hpp"
#include "fdelab/profile.hpp"
#include "fdelab/regimes.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fdelab {

using Json = nlohmann::ordered_json;

// Number formatting shared by every CSV and JSON writer: %.15g, so at least
// 12 significant digits survive and repeated runs produce identical bytes.
[[nodiscard]] std::string format_number(double x);

[[nodiscard]] Json to_json(const ParamSet& p);
[[nodiscard]] Json to_json(const Regime& reg);
[[nodiscard]] Json to_json(const AsymptoticFit& fit);
[[nodiscard]] Json to_json(const LimitPair& lim);

/// Minimal CSV table: a header and rows of optional numbers (empty cells for nullopt).
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::optional<double>> row);
    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::optional<double>>> rows_;
};

/// Columns r, f, fprime, r2f1m.
[[nodiscard]] CsvTable profile_table(const Profile& prof);
/// Columns s, g, w, phi, h.
[[nodiscard]] CsvTable trace_table(const WTrace& tr);
/// Columns tau, sup_dist, l1_dist, wl1_dist, center_value, lambda_env.
[[nodiscard]] CsvTable report_table(const EvolutionReport& rep);
/// Columns tau, wl1_pair_dist, dissipation, budget, order_gap; budget is (dist + dissipation) / dist(0).
[[nodiscard]] CsvTable contraction_table(const ContractionRecord& rec);
/// Columns tau, lambda, feasible: the full scan behind each lambda(tau).
[[nodiscard]] CsvTable envelope_scan_table(std::span<const double> taus, std::span<const EnvelopeResult> scans);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const Json& doc);

/// Parses a JSON document from a file; ConfigError when unreadable or malformed.
[[nodiscard]] Json read_json(const std::filesystem::path& path);

} // namespace fdelab
