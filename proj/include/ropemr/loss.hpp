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

// Ternary decision loss: 0 for a correct confident decision, 1 for a wrong
// confident decision, `a` for an uncertain outcome under either truth.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ropemr/error.hpp"
#include "ropemr/rope.hpp"

namespace ropemr
{

struct LossSpec
{
    double a = 0.3;

    void validate() const { require(a >= 0.0 && a <= 1.0, "LossSpec: a must lie in [0,1]"); }
};

enum class Method
{
    Bayesian,
    Frequentist2SLS,
    FrequentistIVW
};

inline std::string_view to_string(Method m)
{
    switch (m)
    {
        case Method::Bayesian: return "bayesian";
        case Method::Frequentist2SLS: return "2sls";
        case Method::FrequentistIVW: return "ivw";
    }
    return "unknown";
}

inline double loss(bool truth_is_null, Outcome outcome, const LossSpec& spec)
{
    switch (outcome)
    {
        case Outcome::Uncertain: return spec.a;
        case Outcome::AcceptH0: return truth_is_null ? 0.0 : 1.0;
        case Outcome::AcceptH1: return truth_is_null ? 1.0 : 0.0;
    }
    return 1.0;
}

struct DecisionTally
{
    bool truthIsNull = true;
    std::size_t acceptH0 = 0;
    std::size_t acceptH1 = 0;
    std::size_t uncertain = 0;

    void add(Outcome o)
    {
        switch (o)
        {
            case Outcome::AcceptH0: ++acceptH0; break;
            case Outcome::AcceptH1: ++acceptH1; break;
            case Outcome::Uncertain: ++uncertain; break;
        }
    }

    void merge(const DecisionTally& other)
    {
        require(truthIsNull == other.truthIsNull, "DecisionTally::merge: truth classes differ");
        acceptH0 += other.acceptH0;
        acceptH1 += other.acceptH1;
        uncertain += other.uncertain;
    }

    std::size_t total() const noexcept { return acceptH0 + acceptH1 + uncertain; }
    std::size_t wrong() const noexcept { return truthIsNull ? acceptH1 : acceptH0; }
};

// p(wrong confident) + p(uncertain) * a, estimated by the tallies.
inline double expected_loss(const DecisionTally& tally, const LossSpec& spec)
{
    spec.validate();
    require(tally.total() > 0, "expected_loss: no replicates tallied");
    const double n = static_cast<double>(tally.total());
    return static_cast<double>(tally.wrong()) / n + spec.a * static_cast<double>(tally.uncertain) / n;
}

struct LossReport
{
    std::string scenario;
    Method method = Method::Bayesian;
    double T = 0.0;
    double a = 0.0;
    DecisionTally tally;
    double expectedLoss = 0.0;
    std::size_t failedReplicates = 0;
};

// Per-replicate inputs for grid evaluation. The frequentist outcome does not
// depend on (T, a).
struct ReplicateDecisions
{
    std::vector<double> betaDraws;
    std::optional<Outcome> frequentist;
    Method frequentistMethod = Method::Frequentist2SLS;
};

// One Bayesian and (when available) one frequentist report per (T, a) cell.
// Draws of each replicate are reused across all cells.
inline std::vector<LossReport> calibration_grid(const std::string& scenario,
                                                bool truth_is_null,
                                                std::span<const double> Ts,
                                                std::span<const double> as,
                                                std::span<const ReplicateDecisions> replicates,
                                                const RopeConfig& rope_base,
                                                std::size_t failed_replicates = 0)
{
    require(!Ts.empty() && !as.empty(), "calibration_grid: T and a grids must be nonempty");
    for (double T : Ts)
    {
        require(T > 0.0 && std::isfinite(T), "calibration_grid: every T must be positive");
    }
    for (double a : as)
    {
        LossSpec{a}.validate();
    }
    require(!replicates.empty(), "calibration_grid: no replicates");

    bool has_bayes = false;
    bool has_freq = false;
    DecisionTally freq_tally{truth_is_null};
    Method freq_method = Method::Frequentist2SLS;
    for (const auto& r : replicates)
    {
        has_bayes = has_bayes || !r.betaDraws.empty();
        if (r.frequentist)
        {
            has_freq = true;
            freq_method = r.frequentistMethod;
            freq_tally.add(*r.frequentist);
        }
    }

    std::vector<LossReport> reports;
    for (double T : Ts)
    {
        DecisionTally bayes_tally{truth_is_null};
        if (has_bayes)
        {
            RopeConfig rope = rope_base;
            rope.T = T;
            for (const auto& r : replicates)
            {
                if (!r.betaDraws.empty())
                {
                    bayes_tally.add(decide(r.betaDraws, rope).outcome);
                }
            }
        }
        for (double a : as)
        {
            const LossSpec spec{a};
            if (has_bayes)
            {
                reports.push_back({scenario, Method::Bayesian, T, a, bayes_tally, expected_loss(bayes_tally, spec),
                                   failed_replicates});
            }
            if (has_freq)
            {
                reports.push_back({scenario, freq_method, T, a, freq_tally, expected_loss(freq_tally, spec),
                                   failed_replicates});
            }
        }
    }
    return reports;
}

}  // namespace ropemr
