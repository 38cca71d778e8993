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

// Convergence diagnostics on per-chain scalar draws: split-chain potential
// scale reduction and rank-normalized bulk effective sample size.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "ropemr/error.hpp"
#include "ropemr/log.hpp"

namespace ropemr
{

using ChainDraws = std::vector<std::vector<double>>;

namespace detail
{

// Splits every chain into two halves of equal length (the middle draw of an
// odd-length chain is dropped).
inline ChainDraws split_chains(const ChainDraws& chains)
{
    ChainDraws halves;
    halves.reserve(2 * chains.size());
    for (const auto& c : chains)
    {
        const std::size_t half = c.size() / 2;
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return halves;
}

inline double mean(std::span<const double> v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v)
{
    if (v.size() < 2)
    {
        return 0.0;
    }
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v)
    {
        ss += (x - m) * (x - m);
    }
    return ss / static_cast<double>(v.size() - 1);
}

inline void check_chains(const ChainDraws& chains, std::size_t min_draws, const char* who)
{
    require(!chains.empty(), std::string(who) + ": need at least one chain");
    for (const auto& c : chains)
    {
        require(c.size() >= min_draws,
                std::string(who) + ": every chain needs at least " + std::to_string(min_draws) + " draws");
    }
}

// Pooled ranks (ties averaged) mapped through the normal quantile with the
// Blom offset.
inline ChainDraws rank_normalize(const ChainDraws& chains)
{
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t c = 0; c < chains.size(); ++c)
    {
        for (double x : chains[c])
        {
            pooled.emplace_back(x, pooled.size());
        }
    }
    std::sort(pooled.begin(), pooled.end());
    const double total = static_cast<double>(pooled.size());
    std::vector<double> z(pooled.size());
    const boost::math::normal standard;
    for (std::size_t i = 0; i < pooled.size();)
    {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first)
        {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1..j
        const double value = boost::math::quantile(standard, (avg_rank - 0.375) / (total + 0.25));
        for (std::size_t k = i; k < j; ++k)
        {
            z[pooled[k].second] = value;
        }
        i = j;
    }
    ChainDraws out(chains.size());
    std::size_t pos = 0;
    for (std::size_t c = 0; c < chains.size(); ++c)
    {
        out[c].assign(z.begin() + static_cast<std::ptrdiff_t>(pos),
                      z.begin() + static_cast<std::ptrdiff_t>(pos + chains[c].size()));
        pos += chains[c].size();
    }
    return out;
}

inline double autocovariance(std::span<const double> v, double m, std::size_t lag)
{
    double s = 0.0;
    for (std::size_t t = 0; t + lag < v.size(); ++t)
    {
        s += (v[t] - m) * (v[t + lag] - m);
    }
    return s / static_cast<double>(v.size());
}

// Multi-chain autocorrelation ESS with Geyer's initial monotone sequence.
// Returns 0 for zero-variance input; capped at twice the draw count.
inline double ess_geyer(const ChainDraws& chains)
{
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    for (const auto& c : chains)
    {
        require(c.size() == n, "ess: chains must have equal length");
    }
    const double total = static_cast<double>(m * n);

    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c)
    {
        means[c] = mean(chains[c]);
        vars[c] = sample_variance(chains[c]);
    }
    const double w = mean(vars);
    const double b_over_n = m > 1 ? sample_variance(means) : 0.0;
    const double var_plus = w * (static_cast<double>(n) - 1.0) / static_cast<double>(n) + b_over_n;
    if (!(var_plus > 0.0))
    {
        return 0.0;
    }

    auto rho = [&](std::size_t lag) {
        double acov = 0.0;
        for (std::size_t c = 0; c < m; ++c)
        {
            acov += autocovariance(chains[c], means[c], lag);
        }
        acov /= static_cast<double>(m);
        return 1.0 - (w - acov) / var_plus;
    };

    double sum_pairs = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k)
    {
        const double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
        if (!(pair > 0.0))
        {
            break;
        }
        const double monotone = std::min(pair, prev_pair);
        sum_pairs += monotone;
        prev_pair = monotone;
    }
    const double tau = std::max(-1.0 + 2.0 * sum_pairs, 0.5);
    return total / tau;
}

}  // namespace detail

// Split-chain R-hat, floored at 1. 1 for constant input, +inf when halves are
// individually constant but differ.
inline double split_rhat(const ChainDraws& chains)
{
    detail::check_chains(chains, 4, "split_rhat");
    const ChainDraws halves = detail::split_chains(chains);
    const std::size_t len = halves.front().size();
    for (const auto& h : halves)
    {
        require(h.size() == len, "split_rhat: chains must have equal length");
    }
    std::vector<double> means, vars;
    for (const auto& h : halves)
    {
        means.push_back(detail::mean(h));
        vars.push_back(detail::sample_variance(h));
    }
    const double n = static_cast<double>(len);
    const double w = detail::mean(vars);
    const double b = n * detail::sample_variance(means);
    if (w == 0.0)
    {
        return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return std::max(1.0, std::sqrt((n - 1.0) / n + b / (n * w)));
}

inline double split_rhat(std::span<const double> single_chain)
{
    return split_rhat(ChainDraws{std::vector<double>(single_chain.begin(), single_chain.end())});
}

// Bulk ESS: rank-normalized split chains, Geyer initial-monotone truncation.
inline double ess_bulk(const ChainDraws& chains)
{
    detail::check_chains(chains, 8, "ess_bulk");
    const ChainDraws halves = detail::split_chains(chains);
    bool constant = true;
    const double first = chains.front().front();
    for (const auto& c : chains)
    {
        constant = constant && std::all_of(c.begin(), c.end(), [&](double x) { return x == first; });
    }
    if (constant)
    {
        log::warn("ess_bulk: draws are constant; effective sample size reported as 0");
        return 0.0;
    }
    return detail::ess_geyer(detail::rank_normalize(halves));
}

inline double ess_bulk(std::span<const double> single_chain)
{
    return ess_bulk(ChainDraws{std::vector<double>(single_chain.begin(), single_chain.end())});
}

}  // namespace ropemr
