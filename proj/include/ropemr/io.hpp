/*
 * Copyright 2026 The ropemr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// CSV dataset ingestion, JSON configuration documents, loss-table CSV and the
// analysis report.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ropemr/frequentist.hpp"
#include "ropemr/loss.hpp"
#include "ropemr/model.hpp"
#include "ropemr/posterior.hpp"
#include "ropemr/rope.hpp"
#include "ropemr/simulation.hpp"

namespace ropemr::io
{

using json = nlohmann::json;

inline std::string format_number(double v, int precision = 10)
{
    if (std::isinf(v))
    {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

// FNV-1a, 64-bit; stable across platforms for provenance digests.
inline std::string digest(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw DataError("cannot open " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------- datasets

struct LoadOptions
{
    std::vector<std::string> covariates;
};

namespace detail
{

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos)
        {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::size_t> instrument_index(std::string_view name)
{
    if (name.size() < 3 || name.substr(0, 2) != "z_")
    {
        return std::nullopt;
    }
    std::size_t k = 0;
    const auto digits = name.substr(2);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || k == 0)
    {
        return std::nullopt;
    }
    return k;
}

}  // namespace detail

// Header row names the columns: optional `id`, z_1..z_J, x, y, plus any
// covariates requested in `opts`. Empty x cells mark a missing exposure.
// Z columns and observed X are standardized.
inline Dataset parse_dataset(std::string_view text, const LoadOptions& opts = {})
{
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size())
        {
            auto nl = text.find('\n', start);
            if (nl == std::string_view::npos)
            {
                nl = text.size();
            }
            auto line = text.substr(start, nl - start);
            if (!line.empty() && line.back() == '\r')
            {
                line.remove_suffix(1);
            }
            lines.push_back(line);
            start = nl + 1;
        }
    }
    std::size_t header_line = 0;
    while (header_line < lines.size() && detail::trim(lines[header_line]).empty())
    {
        ++header_line;
    }
    if (header_line == lines.size())
    {
        throw DataError("dataset: empty file");
    }

    const auto header = detail::split_fields(lines[header_line]);
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t k = 0; k < header.size(); ++k)
    {
        const std::string name(header[k]);
        if (name.empty() || !column.emplace(name, k).second)
        {
            throw DataError("dataset: empty or duplicate column name '" + name + "' in header");
        }
    }
    auto locate = [&](const std::string& name) {
        const auto it = column.find(name);
        if (it == column.end())
        {
            throw DataError("dataset: missing column '" + name + "'");
        }
        return it->second;
    };
    std::size_t J = 0;
    for (const auto& [name, idx] : column)
    {
        if (auto k = detail::instrument_index(name))
        {
            J = std::max(J, *k);
        }
    }
    if (J == 0)
    {
        throw DataError("dataset: no instrument columns z_1..z_J");
    }
    std::vector<std::size_t> z_cols;
    for (std::size_t j = 1; j <= J; ++j)
    {
        z_cols.push_back(locate("z_" + std::to_string(j)));
    }
    const std::size_t x_col = locate("x");
    const std::size_t y_col = locate("y");
    std::vector<std::size_t> c_cols;
    for (const auto& c : opts.covariates)
    {
        const auto it = column.find(c);
        if (it == column.end())
        {
            throw DataError("dataset: covariate '" + c + "' is not a column of the file");
        }
        c_cols.push_back(it->second);
    }

    std::vector<std::vector<double>> z_rows;
    std::vector<std::vector<double>> c_rows;
    std::vector<std::optional<double>> x;
    std::vector<int> y;
    for (std::size_t ln = header_line + 1; ln < lines.size(); ++ln)
    {
        if (detail::trim(lines[ln]).empty())
        {
            continue;
        }
        const auto fields = detail::split_fields(lines[ln]);
        const std::string where = "line " + std::to_string(ln + 1);
        if (fields.size() != header.size())
        {
            throw DataError("dataset: " + where + " has " + std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        auto number = [&](std::size_t col) {
            const auto v = detail::parse_double(fields[col]);
            if (!v)
            {
                throw DataError("dataset: " + where + ", column '" + std::string(header[col]) + "': not a finite number");
            }
            return *v;
        };
        std::vector<double> zr;
        for (auto c : z_cols)
        {
            zr.push_back(number(c));
        }
        z_rows.push_back(std::move(zr));
        std::vector<double> cr;
        for (auto c : c_cols)
        {
            cr.push_back(number(c));
        }
        c_rows.push_back(std::move(cr));
        x.push_back(fields[x_col].empty() ? std::nullopt : std::optional<double>(number(x_col)));
        const double yv = number(y_col);
        if (yv != 0.0 && yv != 1.0)
        {
            throw DataError("dataset: " + where + ", column 'y': value " + std::string(fields[y_col]) + " is not 0 or 1");
        }
        y.push_back(static_cast<int>(yv));
    }
    if (y.empty())
    {
        throw DataError("dataset: no data rows");
    }

    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(J));
    Eigen::MatrixXd C(n, static_cast<Eigen::Index>(c_cols.size()));
    for (Eigen::Index i = 0; i < n; ++i)
    {
        for (Eigen::Index j = 0; j < Z.cols(); ++j)
        {
            Z(i, j) = z_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        for (Eigen::Index p = 0; p < C.cols(); ++p)
        {
            C(i, p) = c_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
        }
    }
    return Dataset(std::move(Z), std::move(x), std::move(y), std::move(C), Standardize::Yes);
}

inline Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& opts = {})
{
    return parse_dataset(read_file(path), opts);
}

// Writes values at full precision; covariates are named c_1..c_P unless names are given.
inline void write_dataset(std::ostream& os, const Dataset& d, std::vector<std::string> covariate_names = {})
{
    if (covariate_names.empty())
    {
        for (std::size_t p = 0; p < d.covariates(); ++p)
        {
            covariate_names.push_back("c_" + std::to_string(p + 1));
        }
    }
    require(covariate_names.size() == d.covariates(), "write_dataset: covariate name count mismatch");
    os << "id";
    for (std::size_t j = 0; j < d.instruments(); ++j)
    {
        os << ",z_" << j + 1;
    }
    os << ",x,y";
    for (const auto& c : covariate_names)
    {
        os << ',' << c;
    }
    os << '\n';
    for (std::size_t i = 0; i < d.size(); ++i)
    {
        const auto ii = static_cast<Eigen::Index>(i);
        os << i + 1;
        for (Eigen::Index j = 0; j < d.z().cols(); ++j)
        {
            os << ',' << format_number(d.z()(ii, j), 17);
        }
        os << ',' << (d.observed(i) ? format_number(*d.x(i), 17) : std::string());
        os << ',' << d.y()[i];
        for (Eigen::Index p = 0; p < d.c().cols(); ++p)
        {
            os << ',' << format_number(d.c()(ii, p), 17);
        }
        os << '\n';
    }
}

// ----------------------------------------------------------- configuration

namespace detail
{

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!j.is_object())
    {
        throw ContractViolation("config: '" + where + "' must be a JSON object");
    }
    for (const auto& [key, value] : j.items())
    {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        {
            throw ContractViolation("config: unknown key '" + key + "' in '" + where + "'");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key))
    {
        try
        {
            out = j.at(key).get<T>();
        }
        catch (const json::exception&)
        {
            throw ContractViolation(std::string("config: key '") + key + "' has the wrong type");
        }
    }
}

}  // namespace detail

inline SamplerConfig sampler_from_json(const json& j)
{
    detail::check_keys(j, {"totalIterations", "keepLast", "chains", "targetAcceptance", "maxLeapfrogSteps"}, "sampler");
    SamplerConfig c;
    detail::read(j, "totalIterations", c.totalIterations);
    detail::read(j, "keepLast", c.keepLast);
    detail::read(j, "chains", c.chains);
    detail::read(j, "targetAcceptance", c.targetAcceptance);
    detail::read(j, "maxLeapfrogSteps", c.maxLeapfrogSteps);
    c.validate();
    return c;
}

inline PriorSpec priors_from_json(const json& j)
{
    detail::check_keys(j,
                       {"alphaMean", "alphaSd", "sigmaXShape", "sigmaXScale", "betaUsedSd", "uVariance", "deltaSd",
                        "interceptSd", "gammaSd"},
                       "priors");
    PriorSpec p;
    detail::read(j, "alphaMean", p.alphaMean);
    detail::read(j, "alphaSd", p.alphaSd);
    detail::read(j, "sigmaXShape", p.sigmaXShape);
    detail::read(j, "sigmaXScale", p.sigmaXScale);
    detail::read(j, "betaUsedSd", p.betaUsedSd);
    detail::read(j, "uVariance", p.uVariance);
    detail::read(j, "deltaSd", p.deltaSd);
    detail::read(j, "interceptSd", p.interceptSd);
    detail::read(j, "gammaSd", p.gammaSd);
    p.validate();
    return p;
}

// The ROPE reweighting always uses the sampler's prior sd for beta.
inline RopeConfig rope_from_json(const json& j, const PriorSpec& priors)
{
    detail::check_keys(j, {"pi0", "upperOdds", "lowerOdds"}, "rope");
    RopeConfig r;
    detail::read(j, "pi0", r.pi0);
    detail::read(j, "upperOdds", r.upperOdds);
    detail::read(j, "lowerOdds", r.lowerOdds);
    r.betaUsedSd = priors.betaUsedSd;
    r.validate();
    return r;
}

inline ScenarioConfig scenario_from_json(const json& j, ScenarioConfig s = {})
{
    detail::check_keys(j,
                       {"name", "missingRate", "alphaAll", "betaTrue", "J", "populationSize", "nTotal", "deltaX",
                        "deltaY", "sigmaXGen", "interceptGen", "uVariance", "replicates", "seed"},
                       "scenario");
    detail::read(j, "name", s.name);
    detail::read(j, "missingRate", s.missingRate);
    detail::read(j, "alphaAll", s.alphaAll);
    detail::read(j, "betaTrue", s.betaTrue);
    detail::read(j, "J", s.J);
    detail::read(j, "populationSize", s.populationSize);
    detail::read(j, "nTotal", s.nTotal);
    detail::read(j, "deltaX", s.deltaX);
    detail::read(j, "deltaY", s.deltaY);
    detail::read(j, "sigmaXGen", s.sigmaXGen);
    detail::read(j, "interceptGen", s.interceptGen);
    detail::read(j, "uVariance", s.uVariance);
    detail::read(j, "replicates", s.replicates);
    detail::read(j, "seed", s.seed);
    s.validate();
    return s;
}

// Experiment document:
// {
//   "seed": 1, "threads": 1, "replicates": 20,
//   "grid": "standard" | "scenarios": [ {...}, ... ], "base": {...},
//   "methods": ["bayesian", "frequentist"],
//   "sampler": {...}, "priors": {...}, "rope": {...},
//   "calibration": {"T": [...], "a": [...]},
//   "random": {"T": [lo, hi], "a": [lo, hi]}
// }
inline ExperimentConfig experiment_from_json(const json& j, LossMode mode)
{
    detail::check_keys(j,
                       {"seed", "threads", "replicates", "grid", "scenarios", "base", "methods", "sampler", "priors",
                        "rope", "calibration", "random"},
                       "experiment");
    ExperimentConfig cfg;
    cfg.mode = mode;
    detail::read(j, "seed", cfg.seed);
    detail::read(j, "threads", cfg.threads);
    if (j.contains("sampler"))
    {
        cfg.sampler = sampler_from_json(j.at("sampler"));
    }
    if (j.contains("priors"))
    {
        cfg.priors = priors_from_json(j.at("priors"));
    }
    cfg.rope = rope_from_json(j.value("rope", json::object()), cfg.priors);

    ScenarioConfig base;
    if (j.contains("replicates"))
    {
        detail::read(j, "replicates", base.replicates);
    }
    if (j.contains("base"))
    {
        base = scenario_from_json(j.at("base"), base);
    }
    if (j.contains("grid") == j.contains("scenarios"))
    {
        throw ContractViolation("config: give exactly one of 'grid' or 'scenarios'");
    }
    if (j.contains("grid"))
    {
        if (j.at("grid") != "standard")
        {
            throw ContractViolation("config: 'grid' must be \"standard\"");
        }
        cfg.scenarios = standard_grid(base);
    }
    else
    {
        for (const auto& s : j.at("scenarios"))
        {
            cfg.scenarios.push_back(scenario_from_json(s, base));
        }
    }

    if (j.contains("methods"))
    {
        cfg.runBayesian = false;
        cfg.runFrequentist = false;
        for (const auto& m : j.at("methods"))
        {
            const auto name = m.get<std::string>();
            if (name == "bayesian")
                cfg.runBayesian = true;
            else if (name == "frequentist")
                cfg.runFrequentist = true;
            else
                throw ContractViolation("config: unknown method '" + name + "'");
        }
    }
    if (j.contains("calibration"))
    {
        const auto& c = j.at("calibration");
        detail::check_keys(c, {"T", "a"}, "calibration");
        detail::read(c, "T", cfg.gridT);
        detail::read(c, "a", cfg.gridA);
    }
    if (j.contains("random"))
    {
        const auto& r = j.at("random");
        detail::check_keys(r, {"T", "a"}, "random");
        std::vector<double> t{cfg.randomTLow, cfg.randomTHigh};
        std::vector<double> a{cfg.randomALow, cfg.randomAHigh};
        detail::read(r, "T", t);
        detail::read(r, "a", a);
        require(t.size() == 2 && a.size() == 2, "config: random ranges must be [lo, hi] pairs");
        cfg.randomTLow = t[0];
        cfg.randomTHigh = t[1];
        cfg.randomALow = a[0];
        cfg.randomAHigh = a[1];
    }
    cfg.validate();
    return cfg;
}

// ------------------------------------------------------------- loss table

inline void write_loss_csv(std::ostream& os, const std::vector<LossReport>& reports)
{
    os << "scenario,method,T,a,expected_loss,n_replicates,n_h0,n_h1,n_uncertain\n";
    for (const auto& r : reports)
    {
        os << r.scenario << ',' << to_string(r.method) << ',' << format_number(r.T) << ',' << format_number(r.a) << ','
           << format_number(r.expectedLoss) << ',' << r.tally.total() << ',' << r.tally.acceptH0 << ','
           << r.tally.acceptH1 << ',' << r.tally.uncertain << '\n';
    }
}

inline json failures_to_json(const std::vector<ReplicateFailure>& failures)
{
    json arr = json::array();
    for (const auto& f : failures)
    {
        arr.push_back({{"scenario", f.scenario}, {"replicate", f.replicate}, {"message", f.message}});
    }
    return arr;
}

// --------------------------------------------------------------- analysis

struct AnalysisConfig
{
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    PriorSpec priors;
    RopeConfig rope;
    std::vector<double> T{0.02, 0.04, 0.06, 0.08};
};

inline AnalysisConfig analysis_from_json(const json& j)
{
    detail::check_keys(j, {"seed", "sampler", "priors", "rope", "T"}, "analysis");
    AnalysisConfig cfg;
    detail::read(j, "seed", cfg.seed);
    if (j.contains("sampler"))
    {
        cfg.sampler = sampler_from_json(j.at("sampler"));
    }
    if (j.contains("priors"))
    {
        cfg.priors = priors_from_json(j.at("priors"));
    }
    cfg.rope = rope_from_json(j.value("rope", json::object()), cfg.priors);
    detail::read(j, "T", cfg.T);
    require(!cfg.T.empty(), "config: T list must be nonempty");
    for (double t : cfg.T)
    {
        require(t > 0.0, "config: every T must be positive");
    }
    cfg.sampler.seed = cfg.seed;
    return cfg;
}

struct WeightedSummary
{
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0;  // 2.5% weighted quantile
    double hi = 0.0;  // 97.5%
};

inline WeightedSummary weighted_summary(std::span<const double> draws, std::span<const double> weights)
{
    require(!draws.empty() && draws.size() == weights.size(), "weighted_summary: draws and weights mismatch");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    WeightedSummary s;
    for (std::size_t k = 0; k < draws.size(); ++k)
    {
        s.mean += weights[k] * draws[k];
    }
    s.mean /= total;
    double var = 0.0;
    for (std::size_t k = 0; k < draws.size(); ++k)
    {
        var += weights[k] * (draws[k] - s.mean) * (draws[k] - s.mean);
    }
    s.sd = std::sqrt(var / total);

    std::vector<std::size_t> order(draws.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return draws[a] < draws[b]; });
    auto quantile = [&](double p) {
        double cum = 0.0;
        for (std::size_t k : order)
        {
            cum += weights[k] / total;
            if (cum >= p)
            {
                return draws[k];
            }
        }
        return draws[order.back()];
    };
    s.lo = quantile(0.025);
    s.hi = quantile(0.975);
    return s;
}

struct RopeResult
{
    double T = 0.0;
    Decision decision;
    WeightedSummary reweighted;
};

struct AnalysisReport
{
    WeightedSummary usedPrior;  // draws as sampled, equal weights
    std::vector<RopeResult> perT;
    double rhat = 1.0;
    double essBulk = 0.0;
    double acceptanceRate = 0.0;
    std::size_t divergences = 0;
    std::size_t chains = 0;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    std::string configDigest;
    std::string inputDigest;
};

inline AnalysisReport analyze(const Dataset& data,
                              const AnalysisConfig& cfg,
                              const std::string& config_digest = {},
                              const std::string& input_digest = {})
{
    SamplerConfig sampler = cfg.sampler;
    sampler.seed = cfg.seed;
    sampler.retainStates = false;
    const PosteriorDraws post = sample(data, cfg.priors, sampler);

    AnalysisReport rep;
    const std::vector<double> ones(post.betaDraws.size(), 1.0);
    rep.usedPrior = weighted_summary(post.betaDraws, ones);
    for (double T : cfg.T)
    {
        RopeConfig rope = cfg.rope;
        rope.T = T;
        const std::vector<double> w = importance_weights(post.betaDraws, rope);
        rep.perT.push_back({T, decide(post.betaDraws, rope), weighted_summary(post.betaDraws, w)});
    }
    rep.rhat = post.rhat;
    rep.essBulk = post.essBulk;
    rep.acceptanceRate = post.acceptanceRate;
    rep.divergences = post.divergences;
    rep.chains = sampler.chains;
    rep.draws = post.betaDraws.size();
    rep.seed = cfg.seed;
    rep.configDigest = config_digest;
    rep.inputDigest = input_digest;
    return rep;
}

namespace detail
{
inline json summary_json(const WeightedSummary& s)
{
    return {{"mean", s.mean}, {"sd", s.sd}, {"ci95", {s.lo, s.hi}}};
}

// JSON has no infinity.
inline json odds_json(double odds)
{
    return std::isinf(odds) ? json("inf") : json(odds);
}
}  // namespace detail

inline json to_json(const AnalysisReport& r)
{
    json decisions = json::array();
    for (const auto& d : r.perT)
    {
        decisions.push_back({{"T", d.T},
                             {"v0", d.decision.v0},
                             {"v1", d.decision.v1},
                             {"odds", detail::odds_json(d.decision.odds)},
                             {"outcome", std::string(to_string(d.decision.outcome))},
                             {"beta_reweighted", detail::summary_json(d.reweighted)}});
    }
    return {{"beta_used_prior", detail::summary_json(r.usedPrior)},
            {"decisions", decisions},
            {"diagnostics",
             {{"rhat", r.rhat},
              {"ess_bulk", r.essBulk},
              {"acceptance_rate", r.acceptanceRate},
              {"divergences", r.divergences},
              {"chains", r.chains},
              {"draws", r.draws}}},
            {"provenance", {{"seed", r.seed}, {"config_digest", r.configDigest}, {"input_digest", r.inputDigest}}}};
}

inline std::string to_text(const AnalysisReport& r)
{
    std::ostringstream os;
    auto f3 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    os << "Causal effect (beta), sampled under the continuous prior:\n"
       << "  posterior mean " << f3(r.usedPrior.mean) << " and 95% credible interval (" << f3(r.usedPrior.lo) << ", "
       << f3(r.usedPrior.hi) << ")\n\n";
    os << "ROPE decisions (mixture-prior reweighting):\n";
    for (const auto& d : r.perT)
    {
        os << "  T = " << format_number(d.T, 4) << ": V0/V1 = " << format_number(d.decision.odds, 4) << " -> "
           << to_string(d.decision.outcome) << "; reweighted mean " << f3(d.reweighted.mean) << ", 95% CI ("
           << f3(d.reweighted.lo) << ", " << f3(d.reweighted.hi) << ")\n";
    }
    os << "\nDiagnostics: R-hat " << format_number(r.rhat, 5) << ", bulk ESS " << format_number(r.essBulk, 5)
       << ", acceptance " << format_number(r.acceptanceRate, 3) << ", divergences " << r.divergences << " ("
       << r.chains << " chain(s), " << r.draws << " draws)\n";
    os << "Provenance: seed " << r.seed << ", config " << r.configDigest << ", input " << r.inputDigest << "\n";
    return os.str();
}

inline json to_json(const FreqEstimate& e, Method method)
{
    return {{"method", std::string(to_string(method))},
            {"beta_hat", e.betaHat},
            {"se", e.se},
            {"ci95", {e.lo, e.hi}},
            {"reject_null", e.rejectNull},
            {"dropped_instruments", e.droppedInstruments}};
}

}  // namespace ropemr::io
