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

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "ropemr/diagnostics.hpp"
#include "ropemr/hmc.hpp"
#include "ropemr/model.hpp"

namespace ropemr
{

struct PosteriorDraws
{
    std::vector<std::vector<ParameterState>> draws;  // per chain; empty unless retainStates
    ChainDraws betaByChain;
    std::vector<double> betaDraws;  // chains concatenated in order
    double rhat = 1.0;
    double essBulk = 0.0;
    double acceptanceRate = 0.0;
    std::size_t divergences = 0;
};

// Samples the posterior under the continuous N(0, betaUsedSd^2) prior on beta.
// `target` may hold coordinates fixed; beta must be among its free coordinates.
inline PosteriorDraws sample(const PosteriorTarget& target, const SamplerConfig& cfg)
{
    cfg.validate();
    const auto& free = target.free_coordinates();
    const auto beta_pos = std::find(free.begin(), free.end(), CoordinateLayout::beta);
    require(beta_pos != free.end(), "sample: beta must be a free coordinate");
    const auto beta_col = static_cast<std::size_t>(beta_pos - free.begin());

    std::vector<std::size_t> retain;
    if (!cfg.retainStates)
    {
        retain.push_back(beta_col);
    }
    const std::vector<ChainOutput> chains = hmc::run(target, cfg, retain);

    PosteriorDraws out;
    const auto beta_index = static_cast<Eigen::Index>(cfg.retainStates ? beta_col : 0);
    double accept = 0.0;
    for (const auto& chain : chains)
    {
        std::vector<double> beta(static_cast<std::size_t>(chain.draws.rows()));
        for (Eigen::Index r = 0; r < chain.draws.rows(); ++r)
        {
            beta[static_cast<std::size_t>(r)] = chain.draws(r, beta_index);
        }
        out.betaDraws.insert(out.betaDraws.end(), beta.begin(), beta.end());
        out.betaByChain.push_back(std::move(beta));
        if (cfg.retainStates)
        {
            std::vector<ParameterState> states;
            states.reserve(static_cast<std::size_t>(chain.draws.rows()));
            for (Eigen::Index r = 0; r < chain.draws.rows(); ++r)
            {
                const Eigen::VectorXd row = chain.draws.row(r).transpose();
                states.push_back(target.expand(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
            }
            out.draws.push_back(std::move(states));
        }
        accept += chain.acceptanceRate;
        out.divergences += chain.divergences;
    }
    out.acceptanceRate = accept / static_cast<double>(chains.size());
    if (cfg.keepLast >= 4)
    {
        out.rhat = split_rhat(out.betaByChain);
    }
    if (cfg.keepLast >= 8)
    {
        out.essBulk = ess_bulk(out.betaByChain);
    }
    return out;
}

inline PosteriorDraws sample(const Dataset& data, const PriorSpec& priors, const SamplerConfig& cfg)
{
    priors.validate();
    return sample(PosteriorTarget(data, priors), cfg);
}

}  // namespace ropemr
