#pragma once

// Result files: plot-ready long-format CSVs, the JSON summary, and the
// resolved-config sidecar. CSV dialect: comma separated, '.' decimals, LF.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "varbandit/harness.hpp"

namespace varbandit {

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never see a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// `points` distinct, increasing, roughly log-spaced steps in [1, n] ending at
/// n (all of 1..n when points >= n).
[[nodiscard]] std::vector<std::uint64_t> log_spaced_steps(std::uint64_t n, std::size_t points);

/// regret_vs_time.csv body: policy,t,mean_regret,stderr.
[[nodiscard]] std::string regret_csv(const RegretResult& result, const std::vector<std::uint64_t>& steps);
/// error_rates.csv body: policy,K,n,error_rate,stderr,replications.
[[nodiscard]] std::string error_rates_csv(const std::vector<ErrorRate>& rows);
/// error_vs_K.csv body: setup,policy,K,error_rate,stderr.
[[nodiscard]] std::string error_vs_k_csv(const std::vector<ErrorRate>& rows);
/// cumprofit_vs_t.csv body: strategy,t,mean_profit,stderr over markets.
[[nodiscard]] std::string cumprofit_csv(const std::vector<CaseStudyReport>& reports);
/// Per-market shortlist table: market,row,stock_id,value with reward rows plus totals.
[[nodiscard]] std::string case_study_table_csv(const std::vector<CaseStudyReport>& reports);

/// Runs `cfg` and writes every output into `out_dir` (created if missing):
/// config.resolved.json, config.hash, summary.json and the kind's CSVs.
/// Returns the file names written, in order.
std::vector<std::string> run_and_write(const ExperimentConfig& cfg, const nlohmann::json& resolved,
                                       const std::filesystem::path& out_dir);

} // namespace varbandit
