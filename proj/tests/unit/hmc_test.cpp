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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ropemr/diagnostics.hpp"
#include "ropemr/hmc.hpp"
#include "ropemr/posterior.hpp"

namespace ropemr
{
namespace
{

// Independent Gaussian with per-coordinate sd.
struct Gaussian
{
    std::vector<double> sd;

    std::size_t dimension() const { return sd.size(); }
    double log_density_gradient(std::span<const double> q, std::span<double> g) const
    {
        double lp = 0.0;
        for (std::size_t k = 0; k < sd.size(); ++k)
        {
            const double z = q[k] / sd[k];
            lp -= 0.5 * z * z;
            g[k] = -z / sd[k];
        }
        return lp;
    }
};

struct NanGradient
{
    std::size_t dimension() const { return 2; }
    double log_density_gradient(std::span<const double> q, std::span<double> g) const
    {
        g[0] = -q[0];
        g[1] = std::nan("");
        return -0.5 * (q[0] * q[0] + q[1] * q[1]);
    }
    std::string coordinate_name(std::size_t k) const { return k == 0 ? "first" : "second"; }
};

std::vector<double> column(const ChainOutput& out, Eigen::Index c)
{
    std::vector<double> v(static_cast<std::size_t>(out.draws.rows()));
    for (Eigen::Index r = 0; r < out.draws.rows(); ++r) v[static_cast<std::size_t>(r)] = out.draws(r, c);
    return v;
}

SamplerConfig small_config(std::uint64_t seed)
{
    SamplerConfig cfg;
    cfg.totalIterations = 6000;
    cfg.keepLast = 4000;
    cfg.maxLeapfrogSteps = 16;
    cfg.seed = seed;
    return cfg;
}

TEST(Hmc, StandardNormalMeanAndVariance)
{
    const auto chains = hmc::run(Gaussian{{1.0}}, small_config(1));
    ASSERT_EQ(chains.size(), 1u);
    const auto x = column(chains[0], 0);
    const double ess = ess_bulk(std::span<const double>(x));
    const double m = detail::mean(x);
    const double v = detail::sample_variance(x);
    EXPECT_LT(std::abs(m), 3.0 * std::sqrt(v / ess));
    EXPECT_NEAR(v, 1.0, 0.1);
    EXPECT_LT(split_rhat(std::span<const double>(x)), 1.01);
}

TEST(Hmc, FirstFourMomentsOfStandardNormal)
{
    SamplerConfig cfg = small_config(7);
    cfg.totalIterations = 12000;
    cfg.keepLast = 10000;
    const auto x = column(hmc::run(Gaussian{{1.0}}, cfg)[0], 0);
    const double theory[] = {0.0, 1.0, 0.0, 3.0};
    const double variance[] = {1.0, 2.0, 15.0, 96.0};  // Var(x^k) under N(0, 1)
    for (int k = 1; k <= 4; ++k)
    {
        std::vector<double> xk(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) xk[i] = std::pow(x[i], k);
        const double ess = std::min(ess_bulk(std::span<const double>(xk)), static_cast<double>(x.size()));
        const double se = std::sqrt(variance[k - 1] / ess);
        EXPECT_NEAR(detail::mean(xk), theory[k - 1], 3.0 * se) << "moment " << k;
    }
}

TEST(Hmc, LeapfrogErrorShrinksWithStepSize)
{
    const Gaussian target{{1.0, 2.0, 0.5}};
    const Eigen::VectorXd inv_metric = Eigen::VectorXd::Ones(3);
    auto mean_abs_error = [&](double step) {
        Rng rng(99);
        std::normal_distribution<double> normal(0.0, 1.0);
        const auto steps = static_cast<std::size_t>(std::lround(1.0 / step));
        double total = 0.0;
        for (int rep = 0; rep < 200; ++rep)
        {
            Eigen::VectorXd q(3), p(3), g(3);
            for (int k = 0; k < 3; ++k)
            {
                q[k] = normal(rng) * target.sd[static_cast<std::size_t>(k)];
                p[k] = normal(rng);
            }
            double lp = hmc::evaluate(target, q, g);
            total += std::abs(hmc::leapfrog(target, q, p, g, lp, inv_metric, step, steps).energyError);
        }
        return total / 200.0;
    };
    const double coarse = mean_abs_error(0.1);
    const double fine = mean_abs_error(0.05);
    EXPECT_GT(coarse, 0.0);
    EXPECT_GE(coarse / fine, 2.0);
}

TEST(Hmc, RetainsExactlyKeepLastDraws)
{
    SamplerConfig cfg = small_config(3);
    cfg.totalIterations = 700;
    cfg.keepLast = 123;
    cfg.chains = 2;
    const auto chains = hmc::run(Gaussian{{1.0, 3.0}}, cfg);
    ASSERT_EQ(chains.size(), 2u);
    for (const auto& c : chains)
    {
        EXPECT_EQ(c.draws.rows(), 123);
        EXPECT_EQ(c.draws.cols(), 2);
    }
    const std::vector<std::size_t> retain{1};
    const auto only = hmc::run(Gaussian{{1.0, 3.0}}, cfg, retain);
    EXPECT_EQ(only[0].draws.cols(), 1);
    for (Eigen::Index r = 0; r < 123; ++r) EXPECT_EQ(only[0].draws(r, 0), chains[0].draws(r, 1));
}

TEST(Hmc, DeterministicAndIndependentOfThreading)
{
    SamplerConfig cfg = small_config(42);
    cfg.totalIterations = 800;
    cfg.keepLast = 300;
    cfg.chains = 3;
    const auto a = hmc::run(Gaussian{{1.0, 0.3}}, cfg);
    cfg.parallelChains = false;
    const auto b = hmc::run(Gaussian{{1.0, 0.3}}, cfg);
    for (std::size_t c = 0; c < 3; ++c)
    {
        EXPECT_TRUE((a[c].draws.array() == b[c].draws.array()).all());
    }
    EXPECT_FALSE((a[0].draws.array() == a[1].draws.array()).all());
    cfg.seed = 43;
    const auto d = hmc::run(Gaussian{{1.0, 0.3}}, cfg);
    EXPECT_FALSE((a[0].draws.array() == d[0].draws.array()).all());
}

TEST(Hmc, AdaptationApproachesTargetAcceptance)
{
    SamplerConfig cfg = small_config(5);
    const auto out = hmc::run(Gaussian{{0.01, 1.0, 100.0}}, cfg)[0];
    // The averaged final step is a little conservative, so acceptance lands at or above target.
    EXPECT_GT(out.acceptanceRate, cfg.targetAcceptance - 0.1);
    EXPECT_LT(out.acceptanceRate, 0.99);
    // The diagonal metric should track the target variances.
    EXPECT_NEAR(std::log(out.inverseMetric[0]), std::log(1e-4), 0.5);
    EXPECT_NEAR(std::log(out.inverseMetric[2]), std::log(1e4), 0.5);
}

TEST(Hmc, ExcessiveDivergenceIsReported)
{
    SamplerConfig cfg;
    cfg.totalIterations = 200;
    cfg.keepLast = 200;  // no warm-up: step size stays far too large
    cfg.maxLeapfrogSteps = 20;
    try
    {
        hmc::run(Gaussian{{1e-4}}, cfg);
        FAIL() << "expected SamplerError";
    }
    catch (const SamplerError& e)
    {
        EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos);
    }
}

TEST(Hmc, NonFiniteGradientNamesCoordinate)
{
    SamplerConfig cfg = small_config(1);
    try
    {
        hmc::run(NanGradient{}, cfg);
        FAIL() << "expected SamplerError";
    }
    catch (const SamplerError& e)
    {
        EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
    }
}

TEST(Hmc, InvalidConfigurationRejected)
{
    SamplerConfig cfg;
    cfg.keepLast = cfg.totalIterations + 1;
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = SamplerConfig{};
    cfg.targetAcceptance = 1.0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = SamplerConfig{};
    cfg.chains = 0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
}

// Reduced (beta, intercept) posterior: everything else fixed at the truth.
struct ReducedProblem
{
    Dataset data;
    ParameterState truth;
    PriorSpec priors;
};

ReducedProblem reduced_problem(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), 1);
    std::vector<std::optional<double>> x(n);
    std::vector<int> y(n);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto r = static_cast<Eigen::Index>(i);
        Z(r, 0) = normal(rng);
        u[r] = std::sqrt(0.1) * normal(rng);
        x[i] = 0.4 * Z(r, 0) + u[r] + normal(rng);
        y[i] = uniform01(rng) < expit(0.2 + 0.8 * *x[i] + u[r]) ? 1 : 0;
    }
    ReducedProblem p{Dataset(Z, x, y, {}, Standardize::No), {}, {}};
    p.truth = ParameterState::zeros(p.data);
    p.truth.alpha[0] = 0.4;
    p.truth.sigmaX = 1.0;
    p.truth.deltaX = 1.0;
    p.truth.deltaY = 1.0;
    p.truth.u = u;
    return p;
}

// Posterior mean of beta by midpoint quadrature on a 200 x 200 grid, written
// directly from the Bernoulli likelihood and the two normal priors.
double grid_posterior_mean_beta(const ReducedProblem& p, double lo, double hi)
{
    constexpr int kGrid = 200;
    const double h = (hi - lo) / kGrid;
    std::vector<double> logd(kGrid * kGrid);
    double best = -INFINITY;
    for (int a = 0; a < kGrid; ++a)
    {
        const double beta = lo + (a + 0.5) * h;
        for (int b = 0; b < kGrid; ++b)
        {
            const double omega = lo + (b + 0.5) * h;
            double l = -0.5 * (beta * beta + omega * omega) / (p.priors.betaUsedSd * p.priors.betaUsedSd);
            for (std::size_t i = 0; i < p.data.size(); ++i)
            {
                const double eta = omega + beta * *p.data.x(i) + p.truth.u[static_cast<Eigen::Index>(i)];
                const double prob = 1.0 / (1.0 + std::exp(-eta));
                l += p.data.y()[i] == 1 ? std::log(prob) : std::log1p(-prob);
            }
            logd[static_cast<std::size_t>(a * kGrid + b)] = l;
            best = std::max(best, l);
        }
    }
    double mass = 0.0, first = 0.0;
    for (int a = 0; a < kGrid; ++a)
    {
        const double beta = lo + (a + 0.5) * h;
        for (int b = 0; b < kGrid; ++b)
        {
            const double w = std::exp(logd[static_cast<std::size_t>(a * kGrid + b)] - best);
            mass += w;
            first += w * beta;
        }
    }
    return first / mass;
}

TEST(Posterior, ReducedModelMatchesGridQuadrature)
{
    const ReducedProblem p = reduced_problem(30, 2718);
    const CoordinateLayout L(p.data);
    const PosteriorTarget target(p.data, p.priors, p.truth, {CoordinateLayout::beta, L.intercept()});
    SamplerConfig cfg;
    cfg.totalIterations = 8000;
    cfg.keepLast = 5000;
    cfg.chains = 2;
    cfg.maxLeapfrogSteps = 32;
    cfg.seed = 11;
    const PosteriorDraws draws = sample(target, cfg);
    ASSERT_EQ(draws.betaDraws.size(), 10000u);
    const double oracle = grid_posterior_mean_beta(p, -6.0, 6.0);
    EXPECT_NEAR(detail::mean(draws.betaDraws), oracle, 0.02);
    EXPECT_LT(draws.rhat, 1.01);
    ASSERT_EQ(draws.draws.size(), 2u);
    EXPECT_EQ(draws.draws[0][17].alpha[0], 0.4);
    EXPECT_EQ(draws.draws[1][3].beta, draws.betaByChain[1][3]);
}

TEST(Posterior, BetaOnlyRetentionMatchesFullRetention)
{
    const ReducedProblem p = reduced_problem(20, 5);
    SamplerConfig cfg;
    cfg.totalIterations = 400;
    cfg.keepLast = 100;
    cfg.maxLeapfrogSteps = 8;
    cfg.seed = 3;
    const PosteriorDraws full = sample(p.data, p.priors, cfg);
    cfg.retainStates = false;
    const PosteriorDraws slim = sample(p.data, p.priors, cfg);
    EXPECT_TRUE(slim.draws.empty());
    EXPECT_EQ(full.betaDraws, slim.betaDraws);
    EXPECT_EQ(full.draws[0].size(), 100u);
    EXPECT_GE(full.rhat, 1.0 - 1e-9);
}

TEST(Posterior, BetaMustBeFree)
{
    const ReducedProblem p = reduced_problem(10, 1);
    const PosteriorTarget target(p.data, p.priors, p.truth, {CoordinateLayout(p.data).intercept()});
    EXPECT_THROW(sample(target, small_config(1)), ContractViolation);
}

}  // namespace
}  // namespace ropemr
