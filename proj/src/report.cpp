#include "varbandit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "varbandit/config.hpp"
#include "varbandit/errors.hpp"
#include "varbandit/stats.hpp"

namespace varbandit {

using nlohmann::json;

namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Field with a comma or quote is quoted per RFC 4180.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

} // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
        }
        out << content;
        out.flush();
        if (!out) {
            throw IoError(fmt::format("write to '{}' failed", tmp.string()));
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(fmt::format("cannot move '{}' into place", path.string()));
    }
}

std::vector<std::uint64_t> log_spaced_steps(std::uint64_t n, std::size_t points) {
    std::vector<std::uint64_t> out;
    if (n == 0 || points == 0) {
        return out;
    }
    if (points >= n) {
        for (std::uint64_t t = 1; t <= n; ++t) {
            out.push_back(t);
        }
        return out;
    }
    if (points == 1) {
        return {n};
    }
    const double log_n = std::log(static_cast<double>(n));
    std::uint64_t prev = 0;
    for (std::size_t k = 0; k < points; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(points - 1);
        auto t = static_cast<std::uint64_t>(std::llround(std::exp(log_n * frac)));
        t = std::max(t, prev + 1);
        t = std::min<std::uint64_t>(t, n - (points - 1 - k));
        out.push_back(t);
        prev = t;
    }
    return out;
}

std::string regret_csv(const RegretResult& result, const std::vector<std::uint64_t>& steps) {
    std::string out = "policy,t,mean_regret,stderr\n";
    for (const auto& c : result.curves) {
        for (auto t : steps) {
            out += fmt::format("{},{},{},{}\n", csv_field(c.label), t, c.mean.at(t - 1), c.standard_error.at(t - 1));
        }
    }
    return out;
}

std::string error_rates_csv(const std::vector<ErrorRate>& rows) {
    std::string out = "policy,K,n,error_rate,stderr,replications\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{}\n", csv_field(r.policy), r.arm_count, r.budget, r.error_rate,
                           r.standard_error, r.replications);
    }
    return out;
}

std::string error_vs_k_csv(const std::vector<ErrorRate>& rows) {
    std::string out = "setup,policy,K,error_rate,stderr\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{}\n", r.setup, csv_field(r.policy), r.arm_count, r.error_rate,
                           r.standard_error);
    }
    return out;
}

std::string cumprofit_csv(const std::vector<CaseStudyReport>& reports) {
    std::string out = "strategy,t,mean_profit,stderr\n";
    if (reports.empty()) {
        return out;
    }
    const std::size_t steps = reports.front().pipeline_profit.size();
    const double markets = static_cast<double>(reports.size());
    auto emit = [&](const char* name, auto member) {
        for (std::size_t t = 0; t < steps; ++t) {
            RunningStats s;
            for (const auto& r : reports) {
                s.push((r.*member).at(t));
            }
            const double se = s.count() >= 2 ? std::sqrt(s.unbiased_variance() / markets) : 0.0;
            out += fmt::format("{},{},{},{}\n", name, t + 1, s.mean(), se);
        }
    };
    emit("shvv_ucb_vv", &CaseStudyReport::pipeline_profit);
    emit("ucb1", &CaseStudyReport::baseline_profit);
    return out;
}

std::string case_study_table_csv(const std::vector<CaseStudyReport>& reports) {
    std::string out = "market,row,stock_id,value\n";
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.top_stocks.size(); ++i) {
            out += fmt::format("{},reward,{},{}\n", r.market_id, r.top_stocks[i], r.rewards[i]);
        }
        out += fmt::format("{},total_reward,,{}\n", r.market_id, r.total_reward);
        out += fmt::format("{},total_premium,,{}\n", r.market_id, r.total_premium);
    }
    return out;
}

std::vector<std::string> run_and_write(const ExperimentConfig& cfg, const json& resolved, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create output directory '{}'", out_dir.string()));
    }
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& content) {
        write_file_atomic(out_dir / name, content);
        written.push_back(name);
    };

    const std::string hash = config_hash(resolved);
    json summary{{"kind", to_string(cfg.kind)}, {"config_hash", hash}};

    switch (cfg.kind) {
    case ExperimentKind::regret: {
        const auto result = run_regret_experiment(cfg);
        put("regret_vs_time.csv", regret_csv(result, log_spaced_steps(result.horizon, cfg.output.trace_points)));
        if (cfg.output.full_trace) {
            put("regret_full.csv", regret_csv(result, log_spaced_steps(result.horizon, result.horizon)));
        }
        std::string pulls = "policy,arm,mean_pulls\n";
        json policies = json::array();
        for (const auto& c : result.curves) {
            for (std::size_t i = 0; i < c.mean_pulls.size(); ++i) {
                pulls += fmt::format("{},{},{}\n", csv_field(c.label), i, c.mean_pulls[i]);
            }
            policies.push_back({{"policy", c.label},
                                {"final_mean_regret", c.mean.back()},
                                {"final_stderr", c.standard_error.back()},
                                {"mean_pulls", c.mean_pulls}});
        }
        put("final_pulls.csv", pulls);
        summary["horizon"] = result.horizon;
        summary["replications"] = result.replications;
        summary["policies"] = policies;
        break;
    }
    case ExperimentKind::bai: {
        const auto rows = run_bai_experiment(cfg);
        put("error_rates.csv", error_rates_csv(rows));
        put("error_vs_K.csv", error_vs_k_csv(rows));
        json policies = json::array();
        for (const auto& r : rows) {
            policies.push_back({{"setup", r.setup},
                                {"policy", r.policy},
                                {"K", r.arm_count},
                                {"n", r.budget},
                                {"error_rate", r.error_rate},
                                {"stderr", r.standard_error},
                                {"replications", r.replications}});
        }
        summary["policies"] = policies;
        break;
    }
    case ExperimentKind::case_study: {
        const auto reports = run_case_study(cfg);
        put("cumprofit_vs_t.csv", cumprofit_csv(reports));
        put("case_study_table.csv", case_study_table_csv(reports));
        std::vector<double> pipeline;
        std::vector<double> baseline;
        json markets = json::array();
        for (const auto& r : reports) {
            pipeline.push_back(r.pipeline_profit.empty() ? 0.0 : r.pipeline_profit.back());
            baseline.push_back(r.baseline_profit.empty() ? 0.0 : r.baseline_profit.back());
            markets.push_back({{"market", r.market_id},
                               {"top_stocks", r.top_stocks},
                               {"rewards", r.rewards},
                               {"total_reward", r.total_reward},
                               {"total_premium", r.total_premium},
                               {"baseline_profit", baseline.back()},
                               {"shortlist_pulls", r.shortlist_pulls}});
        }
        summary["policies"] = json::array(
            {{{"policy", "shvv_ucb_vv"}, {"median_final_profit", median(pipeline)}},
             {{"policy", "ucb1"}, {"median_final_profit", median(baseline)}}});
        summary["markets"] = markets;
        break;
    }
    case ExperimentKind::bound_sweep: {
        const auto rows = run_bound_sweep(cfg);
        std::ostringstream csv;
        write_bound_csv(csv, rows);
        put("bounds.csv", csv.str());
        summary["rows"] = rows.size();
        break;
    }
    }
    put("summary.json", summary.dump(2) + "\n");
    put("config.resolved.json", resolved.dump(2) + "\n");
    put("config.hash", hash + "\n");
    return written;
}

} // namespace varbandit
