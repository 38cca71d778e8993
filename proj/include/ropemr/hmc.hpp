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

// Static-trajectory Hamiltonian Monte Carlo over any differentiable log
// density. Warm-up runs dual-averaging step-size adaptation and estimates a
// diagonal inverse metric in doubling windows; the trajectory length of each
// iteration is drawn uniformly from [1, maxLeapfrogSteps] and cut short when
// the energy error exceeds a divergence bound.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "ropemr/error.hpp"
#include "ropemr/random.hpp"

namespace ropemr
{

template <class T>
concept DifferentiableDensity = requires(const T& t, std::span<const double> q, std::span<double> g) {
    { t.dimension() } -> std::convertible_to<std::size_t>;
    { t.log_density_gradient(q, g) } -> std::convertible_to<double>;
};

struct SamplerConfig
{
    std::size_t totalIterations = 20000;
    std::size_t keepLast = 5000;
    std::size_t chains = 1;
    double targetAcceptance = 0.8;
    std::size_t maxLeapfrogSteps = 512;
    std::uint64_t seed = 0;
    // Keep full ParameterState draws (otherwise only beta is retained).
    bool retainStates = true;
    // Run chains on separate threads.
    bool parallelChains = true;

    std::size_t warmup() const noexcept { return totalIterations - keepLast; }

    void validate() const
    {
        require(keepLast >= 1 && keepLast <= totalIterations, "SamplerConfig: need 1 <= keepLast <= totalIterations");
        require(targetAcceptance > 0.0 && targetAcceptance < 1.0, "SamplerConfig: targetAcceptance must lie in (0,1)");
        require(chains >= 1, "SamplerConfig: chains must be >= 1");
        require(maxLeapfrogSteps >= 1, "SamplerConfig: maxLeapfrogSteps must be >= 1");
    }
};

inline constexpr double kDivergenceEnergy = 1000.0;
inline constexpr double kMaxDivergenceRate = 0.10;

struct ChainOutput
{
    Eigen::MatrixXd draws;  // keepLast x retained coordinates
    double acceptanceRate = 0.0;
    std::size_t divergences = 0;
    double stepSize = 0.0;
    Eigen::VectorXd inverseMetric;
};

namespace hmc
{

template <DifferentiableDensity Target>
std::string coordinate_label(const Target& target, std::size_t k)
{
    if constexpr (requires { { target.coordinate_name(k) } -> std::convertible_to<std::string>; })
    {
        return target.coordinate_name(k);
    }
    else
    {
        return "coordinate " + std::to_string(k);
    }
}

template <DifferentiableDensity Target>
double evaluate(const Target& target, const Eigen::VectorXd& q, Eigen::VectorXd& grad)
{
    const auto d = static_cast<std::size_t>(q.size());
    const double lp = target.log_density_gradient(std::span<const double>(q.data(), d), std::span<double>(grad.data(), d));
    if (std::isfinite(lp))
    {
        for (std::size_t k = 0; k < d; ++k)
        {
            if (!std::isfinite(grad[static_cast<Eigen::Index>(k)]))
            {
                throw SamplerError("non-finite gradient at " + coordinate_label(target, k));
            }
        }
    }
    return lp;
}

struct Trajectory
{
    double energyError = 0.0;  // H(end) - H(start); +inf when divergent
    bool divergent = false;
};

// Integrates `steps` leapfrog steps in place. Kinetic energy is
// 0.5 * sum(inverseMetric * p^2).
template <DifferentiableDensity Target>
Trajectory leapfrog(const Target& target,
                    Eigen::VectorXd& q,
                    Eigen::VectorXd& p,
                    Eigen::VectorXd& grad,
                    double& log_density,
                    const Eigen::VectorXd& inverse_metric,
                    double step_size,
                    std::size_t steps)
{
    auto kinetic = [&](const Eigen::VectorXd& mom) { return 0.5 * (inverse_metric.array() * mom.array().square()).sum(); };
    const double h0 = -log_density + kinetic(p);
    Trajectory out;
    for (std::size_t s = 0; s < steps; ++s)
    {
        p.noalias() += 0.5 * step_size * grad;
        q.array() += step_size * inverse_metric.array() * p.array();
        log_density = evaluate(target, q, grad);
        if (!std::isfinite(log_density))
        {
            out.divergent = true;
            out.energyError = std::numeric_limits<double>::infinity();
            return out;
        }
        p.noalias() += 0.5 * step_size * grad;
        const double h = -log_density + kinetic(p);
        if (!std::isfinite(h) || h - h0 > kDivergenceEnergy)
        {
            out.divergent = true;
            out.energyError = std::numeric_limits<double>::infinity();
            return out;
        }
        out.energyError = h - h0;
    }
    return out;
}

inline Eigen::VectorXd draw_momentum(Rng& rng, const Eigen::VectorXd& inverse_metric)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd p(inverse_metric.size());
    for (Eigen::Index k = 0; k < p.size(); ++k)
    {
        p[k] = normal(rng) / std::sqrt(inverse_metric[k]);
    }
    return p;
}

// Nesterov dual averaging on log step size.
class DualAveraging
{
public:
    DualAveraging(double target, double initial_step) : target_(target) { restart(initial_step); }

    void restart(double step)
    {
        mu_ = std::log(10.0 * step);
        s_bar_ = 0.0;
        x_bar_ = 0.0;
        count_ = 0;
        step_ = step;
    }

    double update(double acceptance)
    {
        ++count_;
        const double m = static_cast<double>(count_);
        const double eta = 1.0 / (m + kT0);
        s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - acceptance);
        const double x = mu_ - std::sqrt(m) / kGamma * s_bar_;
        const double w = std::pow(m, -kKappa);
        x_bar_ = w * x + (1.0 - w) * x_bar_;
        step_ = std::exp(x);
        return step_;
    }

    double step() const noexcept { return step_; }
    double final_step() const noexcept { return count_ == 0 ? step_ : std::exp(x_bar_); }

private:
    static constexpr double kGamma = 0.05;
    static constexpr double kT0 = 10.0;
    static constexpr double kKappa = 0.75;
    double target_;
    double mu_ = 0.0;
    double s_bar_ = 0.0;
    double x_bar_ = 0.0;
    std::size_t count_ = 0;
    double step_ = 1.0;
};

// Doubling/halving search for a step size whose one-step acceptance crosses 0.8.
template <DifferentiableDensity Target>
double find_reasonable_step(const Target& target,
                            const Eigen::VectorXd& q0,
                            const Eigen::VectorXd& grad0,
                            double lp0,
                            const Eigen::VectorXd& inverse_metric,
                            double step,
                            Rng& rng)
{
    auto log_accept = [&](double eps) {
        Eigen::VectorXd q = q0;
        Eigen::VectorXd g = grad0;
        Eigen::VectorXd p = draw_momentum(rng, inverse_metric);
        double lp = lp0;
        const Trajectory t = leapfrog(target, q, p, g, lp, inverse_metric, eps, 1);
        return t.divergent ? -std::numeric_limits<double>::infinity() : -t.energyError;
    };
    const double threshold = std::log(0.8);
    const double direction = log_accept(step) > threshold ? 1.0 : -1.0;
    for (int it = 0; it < 60; ++it)
    {
        const double next = direction > 0 ? step * 2.0 : step * 0.5;
        const double la = log_accept(next);
        if ((direction > 0 && !(la > threshold)) || (direction < 0 && la > threshold))
        {
            return direction > 0 ? step : next;
        }
        step = next;
    }
    return step;
}

// Warm-up schedule: fast initial buffer, slow doubling windows for the
// metric, fast terminal buffer.
struct AdaptationSchedule
{
    std::size_t initBuffer = 75;
    std::size_t termBuffer = 50;
    std::size_t baseWindow = 25;
    std::vector<std::size_t> windowEnds;  // iteration index (exclusive) where a metric window ends

    explicit AdaptationSchedule(std::size_t warmup)
    {
        if (warmup < 20)
        {
            initBuffer = warmup;
            termBuffer = 0;
            baseWindow = 0;
            return;
        }
        if (warmup < initBuffer + termBuffer + baseWindow)
        {
            initBuffer = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
            termBuffer = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
            baseWindow = warmup - initBuffer - termBuffer;
        }
        const std::size_t slow_end = warmup - termBuffer;
        std::size_t start = initBuffer;
        std::size_t size = baseWindow;
        while (start < slow_end)
        {
            std::size_t end = start + size;
            // Fold a short remainder into the current window.
            if (end + 2 * size > slow_end)
            {
                end = slow_end;
            }
            windowEnds.push_back(end);
            start = end;
            size *= 2;
        }
    }
};

template <DifferentiableDensity Target>
ChainOutput run_chain(const Target& target_in, const SamplerConfig& cfg, std::uint64_t chain_seed, std::span<const std::size_t> retain)
{
    const Target target = target_in;  // per-chain copy (targets may own scratch space)
    const auto d = static_cast<Eigen::Index>(target.dimension());
    require(d > 0, "sampler: target has no free coordinates");
    Rng rng(chain_seed);

    Eigen::VectorXd q(d);
    Eigen::VectorXd grad(d);
    double lp = -std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> init(-0.5, 0.5);
    for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt)
    {
        for (Eigen::Index k = 0; k < d; ++k)
        {
            q[k] = init(rng);
        }
        lp = evaluate(target, q, grad);
    }
    if (!std::isfinite(lp))
    {
        throw SamplerError("sampler: could not find an initial point with finite log density");
    }

    Eigen::VectorXd inverse_metric = Eigen::VectorXd::Ones(d);
    const std::size_t warmup = cfg.warmup();
    const AdaptationSchedule schedule(warmup);
    double step = warmup > 0 ? find_reasonable_step(target, q, grad, lp, inverse_metric, 1.0, rng) : 0.1;
    DualAveraging adapter(cfg.targetAcceptance, step);

    Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd w_m2 = Eigen::VectorXd::Zero(d);
    std::size_t w_count = 0;
    std::size_t window = 0;

    std::vector<std::size_t> all;
    if (retain.empty())
    {
        all.resize(static_cast<std::size_t>(d));
        std::iota(all.begin(), all.end(), std::size_t{0});
        retain = all;
    }

    ChainOutput out;
    out.draws.resize(static_cast<Eigen::Index>(cfg.keepLast), static_cast<Eigen::Index>(retain.size()));
    double accept_sum = 0.0;
    std::uniform_int_distribution<std::size_t> steps_dist(1, cfg.maxLeapfrogSteps);

    for (std::size_t it = 0; it < cfg.totalIterations; ++it)
    {
        const bool warming = it < warmup;
        Eigen::VectorXd q_new = q;
        Eigen::VectorXd g_new = grad;
        Eigen::VectorXd p = draw_momentum(rng, inverse_metric);
        double lp_new = lp;
        const std::size_t steps = steps_dist(rng);
        const Trajectory traj = leapfrog(target, q_new, p, g_new, lp_new, inverse_metric, step, steps);

        double accept_prob = 0.0;
        if (!traj.divergent)
        {
            accept_prob = traj.energyError <= 0.0 ? 1.0 : std::exp(-traj.energyError);
        }
        if (uniform01(rng) < accept_prob)
        {
            q.swap(q_new);
            grad.swap(g_new);
            lp = lp_new;
        }

        if (warming)
        {
            step = adapter.update(accept_prob);
            const bool in_slow = window < schedule.windowEnds.size() && it >= schedule.initBuffer;
            if (in_slow)
            {
                ++w_count;
                const Eigen::VectorXd delta = q - w_mean;
                w_mean += delta / static_cast<double>(w_count);
                w_m2.array() += delta.array() * (q - w_mean).array();
                if (it + 1 == schedule.windowEnds[window])
                {
                    const double n = static_cast<double>(w_count);
                    if (w_count > 2)
                    {
                        const Eigen::VectorXd var = w_m2 / (n - 1.0);
                        inverse_metric = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
                    }
                    w_mean.setZero();
                    w_m2.setZero();
                    w_count = 0;
                    ++window;
                    step = find_reasonable_step(target, q, grad, lp, inverse_metric, step, rng);
                    adapter.restart(step);
                }
            }
            if (it + 1 == warmup)
            {
                step = adapter.final_step();
            }
        }
        else
        {
            accept_sum += accept_prob;
            out.divergences += traj.divergent ? 1 : 0;
            const auto row = static_cast<Eigen::Index>(it - warmup);
            for (std::size_t c = 0; c < retain.size(); ++c)
            {
                out.draws(row, static_cast<Eigen::Index>(c)) = q[static_cast<Eigen::Index>(retain[c])];
            }
        }
    }

    out.acceptanceRate = accept_sum / static_cast<double>(cfg.keepLast);
    out.stepSize = step;
    out.inverseMetric = inverse_metric;
    const double divergence_rate = static_cast<double>(out.divergences) / static_cast<double>(cfg.keepLast);
    if (divergence_rate > kMaxDivergenceRate)
    {
        throw SamplerError("sampler: " + std::to_string(out.divergences) + " of " + std::to_string(cfg.keepLast) +
                           " post-warm-up iterations diverged; lengthen warm-up, raise targetAcceptance or reduce "
                           "maxLeapfrogSteps");
    }
    return out;
}

// Seed of chain c is derived from cfg.seed; results do not depend on threading.
template <DifferentiableDensity Target>
std::vector<ChainOutput> run(const Target& target, const SamplerConfig& cfg, std::span<const std::size_t> retain = {})
{
    cfg.validate();
    std::vector<ChainOutput> chains(cfg.chains);
    std::vector<std::exception_ptr> errors(cfg.chains);
    auto work = [&](std::size_t c) {
        try
        {
            chains[c] = run_chain(target, cfg, derive_seed(cfg.seed, {0x6368u, c}), retain);
        }
        catch (...)
        {
            errors[c] = std::current_exception();
        }
    };
    if (cfg.parallelChains && cfg.chains > 1)
    {
        std::vector<std::jthread> threads;
        for (std::size_t c = 0; c < cfg.chains; ++c)
        {
            threads.emplace_back(work, c);
        }
    }
    else
    {
        for (std::size_t c = 0; c < cfg.chains; ++c)
        {
            work(c);
        }
    }
    for (auto& e : errors)
    {
        if (e)
        {
            std::rethrow_exception(e);
        }
    }
    return chains;
}

}  // namespace hmc
}  // namespace ropemr
