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

// Interval null hypothesis H0: -T <= beta <= T. Draws sampled under the
// continuous N(0, betaUsedSd^2) prior are reweighted to the mixture prior
//   pi0 * N(0, betaUsedSd^2) + (1 - pi0) * Uniform(-T, T)
// and classified by their weighted inside/outside odds.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "ropemr/error.hpp"
#include "ropemr/random.hpp"

namespace ropemr
{

struct RopeConfig
{
    double T = 0.05;
    double pi0 = 0.5;
    double betaUsedSd = 10.0;
    double upperOdds = 10.0;
    double lowerOdds = 0.1;

    void validate() const
    {
        require(T > 0.0 && std::isfinite(T), "RopeConfig: T must be positive and finite");
        require(pi0 > 0.0 && pi0 < 1.0, "RopeConfig: pi0 must lie in (0,1)");
        require(betaUsedSd > 0.0, "RopeConfig: betaUsedSd must be positive");
        require(lowerOdds > 0.0 && lowerOdds < upperOdds, "RopeConfig: need 0 < lowerOdds < upperOdds");
    }
};

enum class Outcome
{
    AcceptH0,
    AcceptH1,
    Uncertain
};

inline std::string_view to_string(Outcome o)
{
    switch (o)
    {
        case Outcome::AcceptH0: return "accept_h0";
        case Outcome::AcceptH1: return "accept_h1";
        case Outcome::Uncertain: return "uncertain";
    }
    return "unknown";
}

struct RopeOdds
{
    double v0 = 0.0;
    double v1 = 0.0;
    double odds = 0.0;  // v0 / v1, +inf when v1 == 0
};

struct Decision
{
    Outcome outcome = Outcome::Uncertain;
    double odds = 0.0;
    double v0 = 0.0;
    double v1 = 0.0;
};

inline bool inside_rope(double beta, double T) noexcept { return std::abs(beta) <= T; }

inline double normal_density(double x, double sd) noexcept
{
    const double z = x / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Ratio of mixture prior to used prior at beta; pi0 outside the ROPE.
inline double importance_weight(double beta, const RopeConfig& cfg)
{
    require(std::isfinite(beta), "importance_weight: beta draw is not finite");
    require(cfg.T > 0.0, "importance_weight: T must be positive");
    if (!inside_rope(beta, cfg.T))
    {
        return cfg.pi0;
    }
    return cfg.pi0 + (1.0 - cfg.pi0) / (2.0 * cfg.T * normal_density(beta, cfg.betaUsedSd));
}

inline std::vector<double> importance_weights(std::span<const double> draws, const RopeConfig& cfg)
{
    std::vector<double> w(draws.size());
    for (std::size_t k = 0; k < draws.size(); ++k)
    {
        w[k] = importance_weight(draws[k], cfg);
    }
    return w;
}

// Weighted ROPE mass for explicit weights (any positive scale).
inline RopeOdds rope_odds_weighted(std::span<const double> draws, std::span<const double> weights, double T)
{
    require(!draws.empty(), "rope_odds: need at least one draw");
    require(draws.size() == weights.size(), "rope_odds: draws and weights differ in length");
    double inside = 0.0;
    double outside = 0.0;
    for (std::size_t k = 0; k < draws.size(); ++k)
    {
        require(std::isfinite(draws[k]), "rope_odds: draw is not finite");
        require(weights[k] > 0.0 && std::isfinite(weights[k]), "rope_odds: weights must be positive and finite");
        (inside_rope(draws[k], T) ? inside : outside) += weights[k];
    }
    RopeOdds r;
    const double total = inside + outside;
    r.v0 = inside / total;
    r.v1 = outside / total;
    r.odds = outside == 0.0 ? std::numeric_limits<double>::infinity() : inside / outside;
    return r;
}

// Exact large-resample limit of importance resampling: normalized weights.
inline RopeOdds rope_odds(std::span<const double> draws, const RopeConfig& cfg)
{
    cfg.validate();
    require(!draws.empty(), "rope_odds: need at least one draw");
    const std::vector<double> w = importance_weights(draws, cfg);
    return rope_odds_weighted(draws, w, cfg.T);
}

// Closed middle band [lowerOdds, upperOdds] is Uncertain.
inline Outcome classify(double odds, const RopeConfig& cfg)
{
    if (odds > cfg.upperOdds)
    {
        return Outcome::AcceptH0;
    }
    if (odds < cfg.lowerOdds)
    {
        return Outcome::AcceptH1;
    }
    return Outcome::Uncertain;
}

inline Decision decide_weighted(std::span<const double> draws, std::span<const double> weights, const RopeConfig& cfg)
{
    cfg.validate();
    const RopeOdds r = rope_odds_weighted(draws, weights, cfg.T);
    return Decision{classify(r.odds, cfg), r.odds, r.v0, r.v1};
}

inline Decision decide(std::span<const double> draws, const RopeConfig& cfg)
{
    const RopeOdds r = rope_odds(draws, cfg);
    return Decision{classify(r.odds, cfg), r.odds, r.v0, r.v1};
}

// Multinomial resampling with replacement, probabilities proportional to weights.
inline std::vector<double> resample(std::span<const double> draws,
                                    std::span<const double> weights,
                                    std::size_t K,
                                    std::uint64_t seed)
{
    require(draws.size() == weights.size(), "resample: draws and weights differ in length");
    require(!draws.empty() && K >= 1, "resample: need at least one draw and K >= 1");
    for (double w : weights)
    {
        require(w > 0.0 && std::isfinite(w), "resample: weights must be positive and finite");
    }
    Rng rng(seed);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::vector<double> out(K);
    for (auto& v : out)
    {
        v = draws[pick(rng)];
    }
    return out;
}

}  // namespace ropemr
