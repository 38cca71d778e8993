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

// Mendelian-randomization data model with a latent confounder:
//
//   U         ~ N(0, uVariance)
//   X | Z, U  ~ N(alpha'Z + deltaX U + gammaX'C, sigmaX^2)
//   Y         ~ Bernoulli(expit(intercept + beta X + deltaY U + gammaY'C))
//
// Missing exposures and the per-individual confounders are unknowns sampled
// jointly with the parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ropemr/error.hpp"

namespace ropemr
{

inline double expit(double a) noexcept
{
    if (a >= 0.0)
    {
        return 1.0 / (1.0 + std::exp(-a));
    }
    const double e = std::exp(a);
    return e / (1.0 + e);
}

// log(1 + e^a) without overflow.
inline double softplus(double a) noexcept
{
    return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
}

inline double log_normal_density(double x, double mean, double sd) noexcept
{
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

enum class Standardize
{
    Yes,
    No
};

// Immutable analysis dataset. With Standardize::Yes every Z column and the
// observed X entries are centred and scaled to unit sample sd (n - 1).
class Dataset
{
public:
    Dataset() = default;

    Dataset(Eigen::MatrixXd z,
            std::vector<std::optional<double>> x,
            std::vector<int> y,
            Eigen::MatrixXd covariates = {},
            Standardize standardize = Standardize::Yes)
        : z_(std::move(z)), c_(std::move(covariates)), y_(std::move(y))
    {
        const auto n = static_cast<Eigen::Index>(y_.size());
        if (z_.rows() != n || static_cast<Eigen::Index>(x.size()) != n)
        {
            throw ContractViolation("Dataset: Z, X and Y must have the same number of rows");
        }
        if (c_.size() == 0)
        {
            c_.resize(n, 0);
        }
        if (c_.rows() != n)
        {
            throw ContractViolation("Dataset: covariate matrix row count differs from Y");
        }
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (y_[i] != 0 && y_[i] != 1)
            {
                throw DataError("Dataset: y at row " + std::to_string(i) + " is not 0 or 1");
            }
        }
        if (!z_.allFinite() || !c_.allFinite())
        {
            throw DataError("Dataset: Z and covariates must be finite");
        }

        x_.setZero(n);
        observed_.assign(y_.size(), false);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (x[i].has_value())
            {
                if (!std::isfinite(*x[i]))
                {
                    throw DataError("Dataset: observed x at row " + std::to_string(i) + " is not finite");
                }
                x_[i] = *x[i];
                observed_[i] = true;
                observed_rows_.push_back(static_cast<std::size_t>(i));
            }
            else
            {
                missing_rows_.push_back(static_cast<std::size_t>(i));
            }
        }

        if (standardize == Standardize::Yes)
        {
            for (Eigen::Index j = 0; j < z_.cols(); ++j)
            {
                standardize_column(z_.col(j), "z_" + std::to_string(j + 1));
            }
            standardize_observed_x();
        }
    }

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t instruments() const noexcept { return static_cast<std::size_t>(z_.cols()); }
    std::size_t covariates() const noexcept { return static_cast<std::size_t>(c_.cols()); }
    std::size_t missing_count() const noexcept { return missing_rows_.size(); }

    const Eigen::MatrixXd& z() const noexcept { return z_; }
    const Eigen::MatrixXd& c() const noexcept { return c_; }
    const std::vector<int>& y() const noexcept { return y_; }

    bool observed(std::size_t i) const { return observed_.at(i); }

    std::optional<double> x(std::size_t i) const
    {
        if (!observed_.at(i))
        {
            return std::nullopt;
        }
        return x_[static_cast<Eigen::Index>(i)];
    }

    // Observed X with zeros in missing slots; pair with observed().
    const Eigen::VectorXd& x_filled() const noexcept { return x_; }

    const std::vector<std::size_t>& missing_rows() const noexcept { return missing_rows_; }
    const std::vector<std::size_t>& observed_rows() const noexcept { return observed_rows_; }

    // Row subset carrying values through unchanged (no re-standardization).
    Dataset subset(std::span<const std::size_t> rows) const
    {
        const auto m = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd z(m, z_.cols());
        Eigen::MatrixXd c(m, c_.cols());
        std::vector<std::optional<double>> x(rows.size());
        std::vector<int> y(rows.size());
        for (Eigen::Index k = 0; k < m; ++k)
        {
            const auto i = rows[static_cast<std::size_t>(k)];
            if (i >= size())
            {
                throw ContractViolation("Dataset::subset: row index out of range");
            }
            z.row(k) = z_.row(static_cast<Eigen::Index>(i));
            c.row(k) = c_.row(static_cast<Eigen::Index>(i));
            x[static_cast<std::size_t>(k)] = this->x(i);
            y[static_cast<std::size_t>(k)] = y_[i];
        }
        return Dataset(std::move(z), std::move(x), std::move(y), std::move(c), Standardize::No);
    }

private:
    template <class Column>
    static void standardize_column(Column&& col, const std::string& name)
    {
        const auto n = col.size();
        if (n < 2)
        {
            throw DataError("Dataset: column " + name + " needs at least two values to standardize");
        }
        const double mean = col.mean();
        col.array() -= mean;
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
        if (!(sd > 0.0) || sd < 1e-12 * std::max(1.0, std::abs(mean)))
        {
            throw DataError("Dataset: column " + name + " is constant");
        }
        col /= sd;
    }

    void standardize_observed_x()
    {
        const auto k = observed_rows_.size();
        if (k == 0)
        {
            return;
        }
        Eigen::VectorXd obs(static_cast<Eigen::Index>(k));
        for (std::size_t r = 0; r < k; ++r)
        {
            obs[static_cast<Eigen::Index>(r)] = x_[static_cast<Eigen::Index>(observed_rows_[r])];
        }
        standardize_column(obs, "x");
        for (std::size_t r = 0; r < k; ++r)
        {
            x_[static_cast<Eigen::Index>(observed_rows_[r])] = obs[static_cast<Eigen::Index>(r)];
        }
    }

    Eigen::MatrixXd z_;
    Eigen::MatrixXd c_;
    Eigen::VectorXd x_;
    std::vector<int> y_;
    std::vector<bool> observed_;
    std::vector<std::size_t> missing_rows_;
    std::vector<std::size_t> observed_rows_;
};

struct PriorSpec
{
    double alphaMean = 0.5;
    double alphaSd = 0.2;
    double sigmaXShape = 3.0;  // inverse-gamma on sigmaX itself
    double sigmaXScale = 2.0;
    double betaUsedSd = 10.0;
    double uVariance = 0.1;
    double deltaSd = 1.0;
    double interceptSd = 10.0;
    double gammaSd = 1.0;

    void validate() const
    {
        const bool ok = alphaSd > 0 && sigmaXShape > 0 && sigmaXScale > 0 && betaUsedSd > 0 && uVariance > 0 &&
                        deltaSd > 0 && interceptSd > 0 && gammaSd > 0 && std::isfinite(alphaMean);
        require(ok, "PriorSpec: every sd, scale, shape and variance must be strictly positive");
    }
};

struct ParameterState
{
    double beta = 0.0;
    Eigen::VectorXd alpha;
    double sigmaX = 1.0;
    double deltaX = 0.0;
    double deltaY = 0.0;
    double intercept = 0.0;
    Eigen::VectorXd gammaX;
    Eigen::VectorXd gammaY;
    Eigen::VectorXd u;
    Eigen::VectorXd xMissing;

    // Zero-valued state of the right shape, with sigmaX = 1.
    static ParameterState zeros(const Dataset& data)
    {
        ParameterState s;
        s.alpha.setZero(static_cast<Eigen::Index>(data.instruments()));
        s.gammaX.setZero(static_cast<Eigen::Index>(data.covariates()));
        s.gammaY.setZero(static_cast<Eigen::Index>(data.covariates()));
        s.u.setZero(static_cast<Eigen::Index>(data.size()));
        s.xMissing.setZero(static_cast<Eigen::Index>(data.missing_count()));
        return s;
    }
};

// Offsets of each block in the unconstrained coordinate vector
//   [beta | alpha(J) | log sigmaX | deltaX raw | deltaY | intercept | gammaX(P) | gammaY(P) | u(n) | xMissing(m)]
// deltaX = |raw|: the fold maps N(0, deltaSd^2) on raw onto the half-normal prior.
struct CoordinateLayout
{
    std::size_t instruments = 0;
    std::size_t covariates = 0;
    std::size_t individuals = 0;
    std::size_t missing = 0;

    CoordinateLayout() = default;
    explicit CoordinateLayout(const Dataset& d)
        : instruments(d.instruments()), covariates(d.covariates()), individuals(d.size()), missing(d.missing_count())
    {
    }

    static constexpr std::size_t beta = 0;
    std::size_t alpha() const noexcept { return 1; }
    std::size_t log_sigma() const noexcept { return 1 + instruments; }
    std::size_t delta_x() const noexcept { return 2 + instruments; }
    std::size_t delta_y() const noexcept { return 3 + instruments; }
    std::size_t intercept() const noexcept { return 4 + instruments; }
    std::size_t gamma_x() const noexcept { return 5 + instruments; }
    std::size_t gamma_y() const noexcept { return 5 + instruments + covariates; }
    std::size_t u() const noexcept { return 5 + instruments + 2 * covariates; }
    std::size_t x_missing() const noexcept { return u() + individuals; }
    std::size_t size() const noexcept { return x_missing() + missing; }

    std::string name(std::size_t k) const
    {
        auto indexed = [](const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; };
        if (k == beta) return "beta";
        if (k < log_sigma()) return indexed("alpha", k - alpha());
        if (k == log_sigma()) return "log_sigmaX";
        if (k == delta_x()) return "deltaX";
        if (k == delta_y()) return "deltaY";
        if (k == intercept()) return "intercept";
        if (k < gamma_y()) return indexed("gammaX", k - gamma_x());
        if (k < u()) return indexed("gammaY", k - gamma_y());
        if (k < x_missing()) return indexed("u", k - u());
        if (k < size()) return indexed("xMissing", k - x_missing());
        return "out-of-range[" + std::to_string(k) + "]";
    }
};

inline void check_dimensions(const ParameterState& s, const Dataset& d)
{
    require(static_cast<std::size_t>(s.alpha.size()) == d.instruments(), "ParameterState: alpha length != J");
    require(static_cast<std::size_t>(s.gammaX.size()) == d.covariates() &&
                static_cast<std::size_t>(s.gammaY.size()) == d.covariates(),
            "ParameterState: covariate coefficient length != P");
    require(static_cast<std::size_t>(s.u.size()) == d.size(), "ParameterState: u length != n");
    require(static_cast<std::size_t>(s.xMissing.size()) == d.missing_count(),
            "ParameterState: xMissing length != number of missing X entries");
    require(s.sigmaX > 0.0, "ParameterState: sigmaX must be positive");
    require(s.deltaX >= 0.0, "ParameterState: deltaX must be nonnegative");
}

inline Eigen::VectorXd to_unconstrained(const ParameterState& s, const CoordinateLayout& L)
{
    Eigen::VectorXd q(static_cast<Eigen::Index>(L.size()));
    auto seg = [&](std::size_t off, Eigen::Index len) { return q.segment(static_cast<Eigen::Index>(off), len); };
    q[0] = s.beta;
    seg(L.alpha(), s.alpha.size()) = s.alpha;
    q[static_cast<Eigen::Index>(L.log_sigma())] = std::log(s.sigmaX);
    q[static_cast<Eigen::Index>(L.delta_x())] = s.deltaX;
    q[static_cast<Eigen::Index>(L.delta_y())] = s.deltaY;
    q[static_cast<Eigen::Index>(L.intercept())] = s.intercept;
    seg(L.gamma_x(), s.gammaX.size()) = s.gammaX;
    seg(L.gamma_y(), s.gammaY.size()) = s.gammaY;
    seg(L.u(), s.u.size()) = s.u;
    seg(L.x_missing(), s.xMissing.size()) = s.xMissing;
    return q;
}

inline ParameterState from_unconstrained(std::span<const double> q, const CoordinateLayout& L)
{
    require(q.size() == L.size(), "from_unconstrained: coordinate vector has the wrong length");
    auto vec = [&](std::size_t off, std::size_t len) {
        return Eigen::Map<const Eigen::VectorXd>(q.data() + off, static_cast<Eigen::Index>(len)).eval();
    };
    ParameterState s;
    s.beta = q[0];
    s.alpha = vec(L.alpha(), L.instruments);
    s.sigmaX = std::exp(q[L.log_sigma()]);
    s.deltaX = std::abs(q[L.delta_x()]);
    s.deltaY = q[L.delta_y()];
    s.intercept = q[L.intercept()];
    s.gammaX = vec(L.gamma_x(), L.covariates);
    s.gammaY = vec(L.gamma_y(), L.covariates);
    s.u = vec(L.u(), L.individuals);
    s.xMissing = vec(L.x_missing(), L.missing);
    return s;
}

// Joint log density over the unconstrained coordinates, including every
// normalizing constant and the log-sigmaX Jacobian. Fills grad when non-empty.
inline double evaluate_log_posterior(std::span<const double> q,
                                     const Dataset& data,
                                     const PriorSpec& priors,
                                     std::span<double> grad = {})
{
    const CoordinateLayout L(data);
    require(q.size() == L.size(), "log_posterior: state dimension does not match the dataset");
    const bool want_grad = !grad.empty();
    require(!want_grad || grad.size() == L.size(), "log_posterior: gradient buffer has the wrong length");

    using Eigen::Index;
    using Vec = Eigen::Map<const Eigen::VectorXd>;
    const auto n = static_cast<Index>(L.individuals);
    const auto J = static_cast<Index>(L.instruments);
    const auto P = static_cast<Index>(L.covariates);
    const double beta = q[0];
    const double log_sigma = q[L.log_sigma()];
    const double sigma = std::exp(log_sigma);
    const double inv_var = 1.0 / (sigma * sigma);
    const double dx_raw = q[L.delta_x()];
    const double delta_x = std::abs(dx_raw);
    const double delta_y = q[L.delta_y()];
    const double omega = q[L.intercept()];
    const Vec alpha(q.data() + L.alpha(), J);
    const Vec gamma_x(q.data() + L.gamma_x(), P);
    const Vec gamma_y(q.data() + L.gamma_y(), P);
    const Vec u(q.data() + L.u(), n);
    const auto& missing = data.missing_rows();

    Eigen::VectorXd x = data.x_filled();
    for (std::size_t k = 0; k < missing.size(); ++k)
    {
        x[static_cast<Index>(missing[k])] = q[L.x_missing() + k];
    }

    Eigen::VectorXd resid = x - data.z() * alpha - delta_x * u;
    Eigen::VectorXd eta = (omega + beta * x.array() + delta_y * u.array()).matrix();
    if (P > 0)
    {
        resid.noalias() -= data.c() * gamma_x;
        eta.noalias() += data.c() * gamma_y;
    }

    // Bernoulli terms y*eta - log(1 + e^eta) and scores y - expit(eta).
    Eigen::VectorXd score(n);
    double bernoulli = 0.0;
    const auto& y = data.y();
    for (Index i = 0; i < n; ++i)
    {
        const double e = eta[i];
        const double t = std::exp(-std::abs(e));
        bernoulli += y[static_cast<std::size_t>(i)] * e - (std::max(e, 0.0) + std::log1p(t));
        const double mu = e >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
        score[i] = y[static_cast<std::size_t>(i)] - mu;
    }

    const double two_pi_log = std::log(2.0 * std::numbers::pi);
    const double nd = static_cast<double>(n);
    const double rss = resid.squaredNorm();
    double lp = bernoulli;
    lp += -0.5 * u.squaredNorm() / priors.uVariance - 0.5 * nd * (std::log(priors.uVariance) + two_pi_log);
    lp += -0.5 * rss * inv_var - nd * log_sigma - 0.5 * nd * two_pi_log;

    // Priors.
    for (Index j = 0; j < J; ++j)
    {
        lp += log_normal_density(alpha[j], priors.alphaMean, priors.alphaSd);
    }
    lp += log_normal_density(beta, 0.0, priors.betaUsedSd);
    // Inverse-gamma on sigmaX with the log-scale Jacobian (+ log sigma).
    const double a = priors.sigmaXShape;
    const double b = priors.sigmaXScale;
    lp += a * std::log(b) - std::lgamma(a) - (a + 1.0) * log_sigma - b / sigma + log_sigma;
    lp += log_normal_density(dx_raw, 0.0, priors.deltaSd);
    lp += log_normal_density(delta_y, 0.0, priors.deltaSd);
    lp += log_normal_density(omega, 0.0, priors.interceptSd);
    for (Index p = 0; p < P; ++p)
    {
        lp += log_normal_density(gamma_x[p], 0.0, priors.gammaSd);
        lp += log_normal_density(gamma_y[p], 0.0, priors.gammaSd);
    }

    if (!want_grad)
    {
        return lp;
    }

    Eigen::Map<Eigen::VectorXd> g(grad.data(), static_cast<Index>(grad.size()));
    const Eigen::VectorXd rs = resid * inv_var;
    const double alpha_prec = 1.0 / (priors.alphaSd * priors.alphaSd);
    const double delta_prec = 1.0 / (priors.deltaSd * priors.deltaSd);
    const double gamma_prec = 1.0 / (priors.gammaSd * priors.gammaSd);

    g[0] = score.dot(x) - beta / (priors.betaUsedSd * priors.betaUsedSd);
    g.segment(static_cast<Index>(L.alpha()), J).noalias() = data.z().transpose() * rs;
    g.segment(static_cast<Index>(L.alpha()), J).array() -= (alpha.array() - priors.alphaMean) * alpha_prec;
    g[static_cast<Index>(L.log_sigma())] = rss * inv_var - nd - (a + 1.0) + b / sigma + 1.0;
    const double sign = dx_raw < 0.0 ? -1.0 : 1.0;
    g[static_cast<Index>(L.delta_x())] = sign * rs.dot(u) - dx_raw * delta_prec;
    g[static_cast<Index>(L.delta_y())] = score.dot(u) - delta_y * delta_prec;
    g[static_cast<Index>(L.intercept())] = score.sum() - omega / (priors.interceptSd * priors.interceptSd);
    if (P > 0)
    {
        g.segment(static_cast<Index>(L.gamma_x()), P).noalias() = data.c().transpose() * rs;
        g.segment(static_cast<Index>(L.gamma_x()), P) -= gamma_x * gamma_prec;
        g.segment(static_cast<Index>(L.gamma_y()), P).noalias() = data.c().transpose() * score;
        g.segment(static_cast<Index>(L.gamma_y()), P) -= gamma_y * gamma_prec;
    }
    g.segment(static_cast<Index>(L.u()), n) = delta_x * rs + delta_y * score - u / priors.uVariance;
    for (std::size_t k = 0; k < missing.size(); ++k)
    {
        const auto i = static_cast<Index>(missing[k]);
        g[static_cast<Index>(L.x_missing() + k)] = -rs[i] + beta * score[i];
    }
    return lp;
}

inline double log_posterior(const ParameterState& state, const Dataset& data, const PriorSpec& priors)
{
    check_dimensions(state, data);
    const CoordinateLayout L(data);
    const Eigen::VectorXd q = to_unconstrained(state, L);
    return evaluate_log_posterior(std::span<const double>(q.data(), L.size()), data, priors);
}

// Gradient with respect to the unconstrained coordinates (see CoordinateLayout).
inline Eigen::VectorXd grad_log_posterior(const ParameterState& state, const Dataset& data, const PriorSpec& priors)
{
    check_dimensions(state, data);
    const CoordinateLayout L(data);
    const Eigen::VectorXd q = to_unconstrained(state, L);
    Eigen::VectorXd g(static_cast<Eigen::Index>(L.size()));
    evaluate_log_posterior(std::span<const double>(q.data(), L.size()), data, priors, std::span<double>(g.data(), L.size()));
    return g;
}

// Sampler-facing view of the posterior, optionally holding some coordinates
// fixed at reference values. Free coordinates keep their layout order.
class PosteriorTarget
{
public:
    PosteriorTarget(const Dataset& data, const PriorSpec& priors) : data_(&data), priors_(&priors), layout_(data)
    {
        priors.validate();
        full_.setZero(static_cast<Eigen::Index>(layout_.size()));
        grad_.setZero(full_.size());
        for (std::size_t k = 0; k < layout_.size(); ++k)
        {
            free_.push_back(k);
        }
    }

    // Only `free_coordinates` move; the rest stay at `reference`'s values.
    PosteriorTarget(const Dataset& data,
                    const PriorSpec& priors,
                    const ParameterState& reference,
                    std::vector<std::size_t> free_coordinates)
        : data_(&data), priors_(&priors), layout_(data), free_(std::move(free_coordinates))
    {
        priors.validate();
        check_dimensions(reference, data);
        full_ = to_unconstrained(reference, layout_);
        grad_.setZero(full_.size());
        std::sort(free_.begin(), free_.end());
        require(std::adjacent_find(free_.begin(), free_.end()) == free_.end(), "PosteriorTarget: duplicate free coordinate");
        require(free_.empty() || free_.back() < layout_.size(), "PosteriorTarget: free coordinate out of range");
    }

    std::size_t dimension() const noexcept { return free_.size(); }
    const CoordinateLayout& layout() const noexcept { return layout_; }
    const std::vector<std::size_t>& free_coordinates() const noexcept { return free_; }

    std::string coordinate_name(std::size_t k) const { return layout_.name(free_.at(k)); }

    double log_density_gradient(std::span<const double> q, std::span<double> grad) const
    {
        for (std::size_t k = 0; k < free_.size(); ++k)
        {
            full_[static_cast<Eigen::Index>(free_[k])] = q[k];
        }
        const double lp = evaluate_log_posterior(std::span<const double>(full_.data(), layout_.size()), *data_, *priors_,
                                                 std::span<double>(grad_.data(), layout_.size()));
        for (std::size_t k = 0; k < free_.size(); ++k)
        {
            grad[k] = grad_[static_cast<Eigen::Index>(free_[k])];
        }
        return lp;
    }

    // Full ParameterState for a point in free coordinates.
    ParameterState expand(std::span<const double> q) const
    {
        Eigen::VectorXd full = full_;
        for (std::size_t k = 0; k < free_.size(); ++k)
        {
            full[static_cast<Eigen::Index>(free_[k])] = q[k];
        }
        return from_unconstrained(std::span<const double>(full.data(), layout_.size()), layout_);
    }

private:
    const Dataset* data_;
    const PriorSpec* priors_;
    CoordinateLayout layout_;
    std::vector<std::size_t> free_;
    // Scratch buffers: a target is owned by one chain at a time.
    mutable Eigen::VectorXd full_;
    mutable Eigen::VectorXd grad_;
};

}  // namespace ropemr
