#include "varbandit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "varbandit/errors.hpp"

namespace varbandit {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& what) {
    throw ConfigError(fmt::format("{}: {}", path, what));
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        violation(path, "must be an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.contains(key)) {
            violation(path, fmt::format("unknown key '{}'", key));
        }
    }
}

const json& required(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) {
        violation(path, fmt::format("missing required key '{}'", key));
    }
    return obj.at(key);
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        violation(path, "must be a number");
    }
    return v.get<double>();
}

std::uint64_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        violation(path, "must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::pair<double, double> range(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) {
        violation(path, "must be a [low, high] pair");
    }
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
}

DistributionSpec parse_arm(const json& a, const std::string& path) {
    if (!a.is_object()) {
        violation(path, "must be an object");
    }
    const auto& dist = required(a, path, "dist");
    if (!dist.is_string()) {
        violation(path + ".dist", "must be a string");
    }
    const auto kind = dist.get<std::string>();
    try {
        if (kind == "uniform") {
            only_keys(a, path, {"dist", "low", "high"});
            return DistributionSpec::uniform(number(required(a, path, "low"), path + ".low"),
                                             number(required(a, path, "high"), path + ".high"));
        }
        if (kind == "uniform_var") {
            only_keys(a, path, {"dist", "centre", "variance"});
            return DistributionSpec::uniform_with_variance(
                a.contains("centre") ? number(a.at("centre"), path + ".centre") : 0.5,
                number(required(a, path, "variance"), path + ".variance"));
        }
        if (kind == "bernoulli") {
            only_keys(a, path, {"dist", "p"});
            return DistributionSpec::bernoulli(number(required(a, path, "p"), path + ".p"));
        }
        if (kind == "gaussian") {
            only_keys(a, path, {"dist", "mu", "sigma"});
            return DistributionSpec::gaussian(number(required(a, path, "mu"), path + ".mu"),
                                              number(required(a, path, "sigma"), path + ".sigma"));
        }
    } catch (const InputError& e) {
        violation(path, e.what());
    }
    violation(path + ".dist", fmt::format("unknown distribution '{}'", kind));
}

PolicyDescriptor parse_policy(const json& p, const std::string& path) {
    only_keys(p, path, {"name", "params", "label"});
    PolicyDescriptor d;
    const auto& name = required(p, path, "name");
    if (!name.is_string()) {
        violation(path + ".name", "must be a string");
    }
    d.name = name.get<std::string>();
    if (p.contains("label")) {
        if (!p.at("label").is_string()) {
            violation(path + ".label", "must be a string");
        }
        d.label = p.at("label").get<std::string>();
    }
    if (p.contains("params")) {
        const auto& params = p.at("params");
        if (!params.is_object()) {
            violation(path + ".params", "must be an object");
        }
        for (const auto& [k, v] : params.items()) {
            d.params[k] = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : number(v, path + ".params." + k);
        }
    }
    try {
        (void)make_policy(d);
    } catch (const ConfigError& e) {
        violation(path, e.what());
    }
    return d;
}

CaseStudyConfig parse_case_study(const json& c, const std::string& path) {
    only_keys(c, path,
              {"stocks", "n1", "n2", "window", "shortlist", "drift_range", "vol_range", "s0_range", "dt",
               "round_only"});
    CaseStudyConfig cs;
    if (c.contains("stocks")) cs.stocks = count(c.at("stocks"), path + ".stocks");
    if (c.contains("n1")) cs.shortlist_budget = count(c.at("n1"), path + ".n1");
    if (c.contains("n2")) cs.trading_steps = count(c.at("n2"), path + ".n2");
    if (c.contains("window")) cs.window = count(c.at("window"), path + ".window");
    if (c.contains("shortlist")) cs.shortlist = count(c.at("shortlist"), path + ".shortlist");
    if (c.contains("drift_range")) cs.ranges.drift = range(c.at("drift_range"), path + ".drift_range");
    if (c.contains("vol_range")) cs.ranges.vol = range(c.at("vol_range"), path + ".vol_range");
    if (c.contains("s0_range")) cs.ranges.s0 = range(c.at("s0_range"), path + ".s0_range");
    if (c.contains("dt")) cs.ranges.dt = number(c.at("dt"), path + ".dt");
    if (c.contains("round_only")) {
        if (!c.at("round_only").is_boolean()) {
            violation(path + ".round_only", "must be a boolean");
        }
        cs.round_only = c.at("round_only").get<bool>();
    }
    return cs;
}

BoundSweepEntry parse_bound(const json& b, const std::string& path) {
    only_keys(b, path, {"name", "grid", "gaps"});
    BoundSweepEntry e;
    const auto& name = required(b, path, "name");
    if (!name.is_string()) {
        violation(path + ".name", "must be a string");
    }
    e.name = name.get<std::string>();
    if (b.contains("grid")) {
        const auto& grid = b.at("grid");
        if (!grid.is_object()) {
            violation(path + ".grid", "must be an object");
        }
        for (const auto& [k, v] : grid.items()) {
            std::vector<double> values;
            if (v.is_array()) {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    values.push_back(number(v[i], fmt::format("{}.grid.{}[{}]", path, k, i)));
                }
            } else {
                values.push_back(number(v, path + ".grid." + k));
            }
            e.grid.emplace_back(k, std::move(values));
        }
    }
    if (b.contains("gaps")) {
        const auto& gaps = b.at("gaps");
        if (!gaps.is_array()) {
            violation(path + ".gaps", "must be an array");
        }
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            e.gaps.push_back(number(gaps[i], fmt::format("{}.gaps[{}]", path, i)));
        }
    }
    return e;
}

ExperimentKind parse_kind(const json& v) {
    if (!v.is_string()) {
        violation("kind", "must be a string");
    }
    const auto s = v.get<std::string>();
    if (s == "regret") return ExperimentKind::regret;
    if (s == "bai") return ExperimentKind::bai;
    if (s == "bound_sweep") return ExperimentKind::bound_sweep;
    if (s == "case_study") return ExperimentKind::case_study;
    violation("kind", fmt::format("unknown kind '{}'", s));
}

} // namespace

json load_config_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot read config '{}'", path.string()));
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError(fmt::format("override '{}' must look like key=value", o));
        }
        const std::string key = o.substr(0, eq);
        const std::string raw = o.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) {
            value = raw;
        }
        json* node = &doc;
        std::stringstream parts(key);
        std::string part;
        std::vector<std::string> path;
        while (std::getline(parts, part, '.')) {
            path.push_back(part);
        }
        for (std::size_t i = 0; i < path.size(); ++i) {
            const auto& p = path[i];
            const bool is_index = !p.empty() && p.find_first_not_of("0123456789") == std::string::npos;
            if (is_index && node->is_array()) {
                const auto idx = std::stoul(p);
                if (idx >= node->size()) {
                    throw ConfigError(fmt::format("override '{}': index {} out of range", o, idx));
                }
                node = &(*node)[idx];
            } else {
                if (!node->is_object() && !node->is_null()) {
                    throw ConfigError(fmt::format("override '{}': '{}' is not an object", o, p));
                }
                node = &(*node)[p];
            }
        }
        *node = std::move(value);
    }
}

ExperimentConfig parse_config(const json& doc) {
    only_keys(doc, "config",
              {"kind", "arms", "setup", "policies", "horizon", "replications", "base_seed", "parallelism", "output",
               "case_study", "bounds", "description"});
    ExperimentConfig cfg;
    cfg.kind = parse_kind(required(doc, "config", "kind"));

    if (doc.contains("arms")) {
        const auto& arms = doc.at("arms");
        if (!arms.is_array()) {
            violation("arms", "must be an array");
        }
        for (std::size_t i = 0; i < arms.size(); ++i) {
            cfg.arms.push_back(parse_arm(arms[i], fmt::format("arms[{}]", i)));
        }
    }
    if (doc.contains("setup")) {
        const auto& s = doc.at("setup");
        only_keys(s, "setup", {"experiment", "K"});
        BaiSetupSpec setup;
        setup.experiment = static_cast<int>(count(required(s, "setup", "experiment"), "setup.experiment"));
        const auto& ks = required(s, "setup", "K");
        setup.arm_counts.clear();
        if (ks.is_array()) {
            for (std::size_t i = 0; i < ks.size(); ++i) {
                setup.arm_counts.push_back(count(ks[i], fmt::format("setup.K[{}]", i)));
            }
        } else {
            setup.arm_counts.push_back(count(ks, "setup.K"));
        }
        cfg.setup = setup;
    }
    if (doc.contains("policies")) {
        const auto& ps = doc.at("policies");
        if (!ps.is_array()) {
            violation("policies", "must be an array");
        }
        for (std::size_t i = 0; i < ps.size(); ++i) {
            cfg.policies.push_back(parse_policy(ps[i], fmt::format("policies[{}]", i)));
        }
    }
    if (doc.contains("horizon")) cfg.horizon = count(doc.at("horizon"), "horizon");
    if (doc.contains("replications")) cfg.replications = count(doc.at("replications"), "replications");
    if (doc.contains("base_seed")) cfg.base_seed = count(doc.at("base_seed"), "base_seed");
    if (doc.contains("parallelism")) {
        cfg.parallelism = count(doc.at("parallelism"), "parallelism");
    } else if (const char* env = std::getenv(kParallelismEnv)) {
        try {
            cfg.parallelism = std::stoul(env);
        } catch (const std::exception&) {
            violation(kParallelismEnv, "must be a positive integer");
        }
    }
    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        only_keys(o, "output", {"trace_points", "full_trace"});
        if (o.contains("trace_points")) cfg.output.trace_points = count(o.at("trace_points"), "output.trace_points");
        if (o.contains("full_trace")) {
            if (!o.at("full_trace").is_boolean()) {
                violation("output.full_trace", "must be a boolean");
            }
            cfg.output.full_trace = o.at("full_trace").get<bool>();
        }
    }
    if (doc.contains("case_study")) {
        cfg.case_study = parse_case_study(doc.at("case_study"), "case_study");
    }
    if (doc.contains("bounds")) {
        const auto& bs = doc.at("bounds");
        if (!bs.is_array()) {
            violation("bounds", "must be an array");
        }
        for (std::size_t i = 0; i < bs.size(); ++i) {
            cfg.bounds.push_back(parse_bound(bs[i], fmt::format("bounds[{}]", i)));
        }
    }
    cfg.validate();
    return cfg;
}

std::string config_hash(const json& doc) {
    const std::string canonical = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

} // namespace varbandit
