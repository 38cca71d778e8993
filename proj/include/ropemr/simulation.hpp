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

// Simulation grid: a population of individuals is generated from the model,
// an exposure sample A (X observed) and a disjoint outcome-only sample B
// (X missing) are drawn without replacement, and both the Bayesian and the
// frequentist analyses are run on D1 = A u B.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "ropemr/error.hpp"
#include "ropemr/frequentist.hpp"
#include "ropemr/loss.hpp"
#include "ropemr/model.hpp"
#include "ropemr/posterior.hpp"
#include "ropemr/random.hpp"
#include "ropemr/rope.hpp"

namespace ropemr
{

struct ScenarioConfig
{
    double missingRate = 0.0;
    double alphaAll = 0.3;
    double betaTrue = 0.3;
    std::size_t J = 15;
    std::size_t populationSize = 1000;
    std::size_t nTotal = 400;
    double deltaX = 1.0;
    double deltaY = 1.0;
    double sigmaXGen = 1.0;
    double interceptGen = 0.0;
    double uVariance = 0.1;
    std::size_t replicates = 200;
    std::uint64_t seed = 0;
    std::string name;  // generated from the grid values when empty

    std::size_t nA() const { return static_cast<std::size_t>(std::llround((1.0 - missingRate) * static_cast<double>(nTotal))); }
    std::size_t nB() const { return nTotal - nA(); }
    bool truthIsNull() const noexcept { return betaTrue == 0.0; }

    std::string id() const
    {
        if (!name.empty())
        {
            return name;
        }
        std::ostringstream os;
        os << "miss" << missingRate << "_alpha" << alphaAll << "_beta" << betaTrue;
        return os.str();
    }

    void validate() const
    {
        require(missingRate >= 0.0 && missingRate < 1.0, "ScenarioConfig: missingRate must lie in [0,1)");
        require(J >= 1, "ScenarioConfig: J must be >= 1");
        require(nTotal >= 2 && nTotal <= populationSize, "ScenarioConfig: need 2 <= nTotal <= populationSize");
        require(nA() >= 2, "ScenarioConfig: exposure sample needs at least two individuals");
        require(sigmaXGen > 0.0 && uVariance > 0.0, "ScenarioConfig: sigmaXGen and uVariance must be positive");
        require(replicates >= 1, "ScenarioConfig: replicates must be >= 1");
    }
};

// The paper's grid: missingness x instrument strength x causal effect.
inline std::vector<ScenarioConfig> standard_grid(const ScenarioConfig& base = {})
{
    std::vector<ScenarioConfig> grid;
    for (double miss : {0.8, 0.4, 0.0})
    {
        for (double alpha : {0.3, 0.1, 0.05})
        {
            for (double beta : {0.3, 0.0})
            {
                ScenarioConfig s = base;
                s.name.clear();
                s.missingRate = miss;
                s.alphaAll = alpha;
                s.betaTrue = beta;
                grid.push_back(s);
            }
        }
    }
    return grid;
}

struct Population
{
    Dataset data;          // Z and X standardized, fully observed
    Eigen::VectorXd u;     // latent confounder
    Eigen::VectorXd xRaw;  // exposure before standardization
    std::vector<double> maf;
};

inline Population simulate_population(const ScenarioConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(cfg.populationSize);
    const auto J = static_cast<Eigen::Index>(cfg.J);
    Population pop;
    Eigen::MatrixXd Z(n, J);
    std::uniform_real_distribution<double> maf_dist(0.1, 0.5);
    for (Eigen::Index j = 0; j < J; ++j)
    {
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt)
        {
            const double maf = maf_dist(rng);
            std::binomial_distribution<int> geno(2, maf);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                Z(i, j) = geno(rng);
            }
            ok = Z.col(j).maxCoeff() > Z.col(j).minCoeff();
            if (ok)
            {
                pop.maf.push_back(maf);
            }
        }
        if (!ok)
        {
            throw DataError("simulate_population: genotype column " + std::to_string(j + 1) + " stayed constant");
        }
        const double mean = Z.col(j).mean();
        Z.col(j).array() -= mean;
        Z.col(j) /= std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(n - 1));
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    pop.u.resize(n);
    pop.xRaw.resize(n);
    std::vector<int> y(static_cast<std::size_t>(n));
    const double u_sd = std::sqrt(cfg.uVariance);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        pop.u[i] = u_sd * normal(rng);
        pop.xRaw[i] = cfg.alphaAll * Z.row(i).sum() + cfg.deltaX * pop.u[i] + cfg.sigmaXGen * normal(rng);
        const double mu = expit(cfg.interceptGen + cfg.betaTrue * pop.xRaw[i] + cfg.deltaY * pop.u[i]);
        y[static_cast<std::size_t>(i)] = uniform01(rng) < mu ? 1 : 0;
    }
    std::vector<std::optional<double>> x(pop.xRaw.data(), pop.xRaw.data() + n);
    pop.data = Dataset(std::move(Z), std::move(x), std::move(y), {}, Standardize::Yes);
    return pop;
}

struct SimulatedDataset
{
    Dataset d1;  // rows of A (X observed) followed by rows of B (X missing)
    double truthBeta = 0.0;
    std::vector<std::size_t> rowsA;  // population indices
    std::vector<std::size_t> rowsB;
    ScenarioConfig scenario;

    Dataset sampleA() const
    {
        return d1.subset(d1.observed_rows());
    }
    Dataset sampleB() const
    {
        return d1.subset(d1.missing_rows());
    }
};

inline SimulatedDataset split_missing(const Dataset& population, const ScenarioConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const std::size_t nA = cfg.nA();
    const std::size_t nB = cfg.nB();
    require(nA + nB <= population.size(), "split_missing: nA + nB exceeds the population size");
    for (std::size_t i = 0; i < population.size(); ++i)
    {
        require(population.observed(i), "split_missing: population must be fully observed");
    }

    Rng rng(seed);
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first nA + nB positions are a uniform draw
    // without replacement.
    for (std::size_t k = 0; k < nA + nB; ++k)
    {
        std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
        std::swap(order[k], order[pick(rng)]);
    }

    SimulatedDataset out;
    out.scenario = cfg;
    out.truthBeta = cfg.betaTrue;
    out.rowsA.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nA));
    out.rowsB.assign(order.begin() + static_cast<std::ptrdiff_t>(nA), order.begin() + static_cast<std::ptrdiff_t>(nA + nB));

    const auto total = static_cast<Eigen::Index>(nA + nB);
    Eigen::MatrixXd Z(total, static_cast<Eigen::Index>(population.instruments()));
    Eigen::MatrixXd C(total, static_cast<Eigen::Index>(population.covariates()));
    std::vector<std::optional<double>> x(nA + nB);
    std::vector<int> y(nA + nB);
    std::size_t r = 0;
    for (const auto* rows : {&out.rowsA, &out.rowsB})
    {
        const bool masked = rows == &out.rowsB;
        for (std::size_t i : *rows)
        {
            const auto ri = static_cast<Eigen::Index>(r);
            Z.row(ri) = population.z().row(static_cast<Eigen::Index>(i));
            C.row(ri) = population.c().row(static_cast<Eigen::Index>(i));
            x[r] = masked ? std::nullopt : population.x(i);
            y[r] = population.y()[i];
            ++r;
        }
    }
    out.d1 = Dataset(std::move(Z), std::move(x), std::move(y), std::move(C), Standardize::Yes);
    return out;
}

enum class LossMode
{
    Random,  // T ~ U(0.01, 0.1), a ~ U(0, 0.6) per replicate
    Grid     // fixed (T, a) grid, draws reused across cells
};

struct ExperimentConfig
{
    std::vector<ScenarioConfig> scenarios;
    SamplerConfig sampler;
    PriorSpec priors;
    RopeConfig rope;  // T is overridden per replicate or per cell
    LossMode mode = LossMode::Random;
    std::vector<double> gridT{0.02, 0.04, 0.06, 0.08, 0.1};
    std::vector<double> gridA{0.0, 0.15, 0.3, 0.45, 0.6};
    double randomTLow = 0.01;
    double randomTHigh = 0.1;
    double randomALow = 0.0;
    double randomAHigh = 0.6;
    std::uint64_t seed = 0;
    bool runBayesian = true;
    bool runFrequentist = true;
    std::size_t threads = 1;

    void validate() const
    {
        require(!scenarios.empty(), "ExperimentConfig: no scenarios");
        require(runBayesian || runFrequentist, "ExperimentConfig: no method selected");
        for (const auto& s : scenarios)
        {
            s.validate();
        }
        sampler.validate();
        priors.validate();
        require(randomTLow > 0.0 && randomTLow < randomTHigh, "ExperimentConfig: invalid random T range");
        require(randomALow >= 0.0 && randomALow <= randomAHigh && randomAHigh <= 1.0,
                "ExperimentConfig: invalid random a range");
        require(threads >= 1, "ExperimentConfig: threads must be >= 1");
    }
};

struct ReplicateFailure
{
    std::string scenario;
    std::size_t replicate = 0;
    std::string message;
};

struct ReplicateResult
{
    ReplicateDecisions decisions;
    double T = 0.0;  // random mode draws
    double a = 0.0;
    std::optional<std::string> failure;
};

struct ExperimentResult
{
    std::vector<LossReport> reports;
    std::vector<ReplicateFailure> failures;
};

// Seed streams per (scenario, replicate).
enum class Stream : std::uint64_t
{
    Population = 1,
    Split = 2,
    Sampler = 3,
    Loss = 4
};

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t cell, std::size_t replicate, Stream stream)
{
    return derive_seed(master, {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(replicate),
                                static_cast<std::uint64_t>(stream)});
}

inline Method frequentist_method(const ScenarioConfig& s)
{
    return s.missingRate == 0.0 ? Method::Frequentist2SLS : Method::FrequentistIVW;
}

inline FreqEstimate run_frequentist(const SimulatedDataset& sim)
{
    if (frequentist_method(sim.scenario) == Method::Frequentist2SLS)
    {
        return two_stage_least_squares(sim.d1);
    }
    return ivw_estimate(sim.sampleA(), sim.sampleB());
}

inline ReplicateResult run_replicate(const ExperimentConfig& cfg, std::size_t cell, std::size_t replicate)
{
    const ScenarioConfig& sc = cfg.scenarios[cell];
    const std::uint64_t master = cfg.seed ^ sc.seed;
    ReplicateResult res;
    {
        Rng loss_rng(replicate_seed(master, cell, replicate, Stream::Loss));
        res.T = std::uniform_real_distribution<double>(cfg.randomTLow, cfg.randomTHigh)(loss_rng);
        res.a = std::uniform_real_distribution<double>(cfg.randomALow, cfg.randomAHigh)(loss_rng);
    }
    try
    {
        const Population pop = simulate_population(sc, replicate_seed(master, cell, replicate, Stream::Population));
        const SimulatedDataset sim = split_missing(pop.data, sc, replicate_seed(master, cell, replicate, Stream::Split));
        res.decisions.frequentistMethod = frequentist_method(sc);
        if (cfg.runFrequentist)
        {
            res.decisions.frequentist = run_frequentist(sim).rejectNull ? Outcome::AcceptH1 : Outcome::AcceptH0;
        }
        if (cfg.runBayesian)
        {
            SamplerConfig sampler = cfg.sampler;
            sampler.seed = replicate_seed(master, cell, replicate, Stream::Sampler);
            sampler.retainStates = false;
            sampler.parallelChains = cfg.threads <= 1;
            PriorSpec priors = cfg.priors;
            res.decisions.betaDraws = sample(sim.d1, priors, sampler).betaDraws;
        }
    }
    catch (const std::exception& e)
    {
        res.failure = e.what();
        res.decisions = {};
    }
    return res;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn)
{
    if (threads <= 1 || count <= 1)
    {
        for (std::size_t k = 0; k < count; ++k)
        {
            fn(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t)
    {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++)
            {
                fn(k);
            }
        });
    }
}

// Runs every replicate of every scenario and aggregates loss reports. All
// randomness derives from cfg.seed (xor the scenario seed); the result does
// not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    std::vector<std::pair<std::size_t, std::size_t>> work;
    for (std::size_t c = 0; c < cfg.scenarios.size(); ++c)
    {
        for (std::size_t r = 0; r < cfg.scenarios[c].replicates; ++r)
        {
            work.emplace_back(c, r);
        }
    }
    std::vector<ReplicateResult> results(work.size());
    parallel_for(work.size(), cfg.threads, [&](std::size_t k) { results[k] = run_replicate(cfg, work[k].first, work[k].second); });

    ExperimentResult out;
    std::size_t k = 0;
    for (std::size_t c = 0; c < cfg.scenarios.size(); ++c)
    {
        const ScenarioConfig& sc = cfg.scenarios[c];
        const bool null_truth = sc.truthIsNull();
        std::vector<ReplicateDecisions> ok;
        std::vector<double> Ts, as;
        std::size_t failed = 0;
        for (std::size_t r = 0; r < sc.replicates; ++r, ++k)
        {
            auto& res = results[k];
            if (res.failure)
            {
                out.failures.push_back({sc.id(), r, *res.failure});
                ++failed;
                continue;
            }
            ok.push_back(std::move(res.decisions));
            Ts.push_back(res.T);
            as.push_back(res.a);
        }
        if (ok.empty())
        {
            continue;
        }

        if (cfg.mode == LossMode::Grid)
        {
            auto reports = calibration_grid(sc.id(), null_truth, cfg.gridT, cfg.gridA, ok, cfg.rope, failed);
            out.reports.insert(out.reports.end(), reports.begin(), reports.end());
            continue;
        }

        const double n = static_cast<double>(ok.size());
        const double mean_T = std::accumulate(Ts.begin(), Ts.end(), 0.0) / n;
        const double mean_a = std::accumulate(as.begin(), as.end(), 0.0) / n;
        if (cfg.runBayesian)
        {
            LossReport rep{sc.id(), Method::Bayesian, mean_T, mean_a, DecisionTally{null_truth}, 0.0, failed};
            double total = 0.0;
            for (std::size_t r = 0; r < ok.size(); ++r)
            {
                RopeConfig rope = cfg.rope;
                rope.T = Ts[r];
                const Outcome o = decide(ok[r].betaDraws, rope).outcome;
                rep.tally.add(o);
                total += loss(null_truth, o, LossSpec{as[r]});
            }
            rep.expectedLoss = total / n;
            out.reports.push_back(rep);
        }
        if (cfg.runFrequentist)
        {
            LossReport rep{sc.id(), frequentist_method(sc), mean_T, mean_a, DecisionTally{null_truth}, 0.0, failed};
            double total = 0.0;
            for (std::size_t r = 0; r < ok.size(); ++r)
            {
                rep.tally.add(*ok[r].frequentist);
                total += loss(null_truth, *ok[r].frequentist, LossSpec{as[r]});
            }
            rep.expectedLoss = total / n;
            out.reports.push_back(rep);
        }
    }
    return out;
}

}  // namespace ropemr
