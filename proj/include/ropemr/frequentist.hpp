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

// Frequentist MR comparators: one-sample two-stage least squares and
// two-sample fixed-effect inverse-variance weighting. H0: beta = 0 is
// rejected iff the 95% confidence interval excludes 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ropemr/error.hpp"
#include "ropemr/log.hpp"
#include "ropemr/model.hpp"

namespace ropemr
{

inline constexpr double kNormalQuantile975 = 1.959963984540054;

struct FreqEstimate
{
    double betaHat = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool rejectNull = false;
    std::vector<std::size_t> droppedInstruments;  // IVW only
};

inline FreqEstimate make_estimate(double beta_hat, double se)
{
    FreqEstimate e;
    e.betaHat = beta_hat;
    e.se = se;
    e.lo = beta_hat - kNormalQuantile975 * se;
    e.hi = beta_hat + kNormalQuantile975 * se;
    e.rejectNull = !(e.lo <= 0.0 && 0.0 <= e.hi);
    return e;
}

namespace detail
{

// Least squares with a rank check; `names` label the design columns.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& response,
                                     const std::vector<std::string>& names)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
    {
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < design.cols(); ++k)
        {
            cols += (cols.empty() ? "" : ", ") + names.at(static_cast<std::size_t>(perm[k]));
        }
        throw SingularDesign("singular design matrix; collinear column(s): " + cols);
    }
    return qr.solve(response);
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd d(m.rows(), m.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(m.cols()) = m;
    return d;
}

}  // namespace detail

// Stage 1: x ~ [1, Z]. Stage 2: y ~ [1, x_hat]. The residual variance uses the
// observed x, as in the usual 2SLS variance estimator. y may be continuous.
inline FreqEstimate two_stage_least_squares(const Eigen::MatrixXd& Z, const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    const Eigen::Index n = Z.rows();
    require(x.size() == n && y.size() == n, "2SLS: Z, x and y must have the same number of rows");
    require(n > Z.cols() + 1, "2SLS: need n > J + 1");

    std::vector<std::string> names{"intercept"};
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
    {
        names.push_back("z_" + std::to_string(j + 1));
    }
    const Eigen::MatrixXd D1 = detail::with_intercept(Z);
    const Eigen::VectorXd first = detail::least_squares(D1, x, names);
    const Eigen::VectorXd x_hat = D1 * first;

    Eigen::MatrixXd D2(n, 2);
    D2.col(0).setOnes();
    D2.col(1) = x_hat;
    const Eigen::VectorXd second = detail::least_squares(D2, y, {"intercept", "x_hat"});

    const Eigen::VectorXd resid = y.array() - second[0] - second[1] * x.array();
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - 2);
    const Eigen::Matrix2d cov = sigma2 * (D2.transpose() * D2).inverse();
    return make_estimate(second[1], std::sqrt(std::max(cov(1, 1), 0.0)));
}

inline FreqEstimate two_stage_least_squares(const Dataset& data)
{
    require(data.missing_count() == 0, "2SLS: exposure must be fully observed");
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i)
    {
        y[static_cast<Eigen::Index>(i)] = data.y()[i];
    }
    return two_stage_least_squares(data.z(), data.x_filled(), y);
}

struct LogisticFit
{
    double intercept = 0.0;
    double slope = 0.0;
    double se = 0.0;  // slope standard error from the inverse observed information
    int iterations = 0;
};

inline constexpr double kSeparationSlope = 30.0;

// Intercept + slope logistic regression by Newton-Raphson (IRLS).
inline LogisticFit logistic_fit_single(std::span<const double> z, std::span<const int> y)
{
    require(z.size() == y.size() && z.size() >= 3, "logistic_fit_single: z and y must have equal length >= 3");
    std::size_t ones = 0;
    for (int v : y)
    {
        require(v == 0 || v == 1, "logistic_fit_single: y must be binary");
        ones += static_cast<std::size_t>(v);
    }
    require(ones > 0 && ones < y.size(), "logistic_fit_single: y must contain both classes");
    const auto [zmin, zmax] = std::minmax_element(z.begin(), z.end());
    require(*zmin < *zmax, "logistic_fit_single: z is constant");

    const double base = std::log(static_cast<double>(ones) / static_cast<double>(y.size() - ones));
    Eigen::Vector2d b(base, 0.0);
    Eigen::Matrix2d info;
    for (int it = 1; it <= 100; ++it)
    {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        info.setZero();
        for (std::size_t i = 0; i < z.size(); ++i)
        {
            const double p = expit(b[0] + b[1] * z[i]);
            const double r = y[i] - p;
            const double w = p * (1.0 - p);
            g[0] += r;
            g[1] += r * z[i];
            info(0, 0) += w;
            info(0, 1) += w * z[i];
            info(1, 1) += w * z[i] * z[i];
        }
        info(1, 0) = info(0, 1);
        if (g.norm() < 1e-10)
        {
            const Eigen::Matrix2d cov = info.inverse();
            return LogisticFit{b[0], b[1], std::sqrt(cov(1, 1)), it};
        }
        b += info.ldlt().solve(g);
        if (!b.allFinite() || std::abs(b[1]) > kSeparationSlope)
        {
            throw SeparationError("logistic fit diverged (slope beyond +/-30): separation");
        }
    }
    throw SeparationError("logistic fit did not converge in 100 iterations");
}

struct SnpSummary
{
    double exposureEffect = 0.0;  // gene-exposure slope
    double outcomeEffect = 0.0;   // gene-outcome slope
    double outcomeSe = 0.0;
};

// Fixed-effect IVW with first-order weights 1/se^2.
inline FreqEstimate ivw_combine(std::span<const SnpSummary> snps)
{
    require(!snps.empty(), "ivw_combine: no instruments");
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : snps)
    {
        require(s.outcomeSe > 0.0, "ivw_combine: outcome standard errors must be positive");
        const double w = 1.0 / (s.outcomeSe * s.outcomeSe);
        num += s.exposureEffect * s.outcomeEffect * w;
        den += s.exposureEffect * s.exposureEffect * w;
    }
    require(den > 0.0, "ivw_combine: all exposure effects are zero");
    return make_estimate(num / den, 1.0 / std::sqrt(den));
}

// Two-sample IVW: exposure associations from `a` (Y ignored), outcome
// associations from `b` by per-instrument logistic regression. Instruments
// whose logistic fit separates are dropped with a warning.
inline FreqEstimate ivw_estimate(const Dataset& a, const Dataset& b)
{
    require(a.instruments() == b.instruments(), "ivw_estimate: datasets differ in instrument count");
    require(a.instruments() >= 1, "ivw_estimate: no instruments");
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        require(a.observed(i), "ivw_estimate: exposure sample must have every X observed");
    }
    std::vector<double> xa;
    xa.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        xa.push_back(*a.x(i));
    }

    std::vector<SnpSummary> kept;
    std::vector<std::size_t> dropped;
    for (std::size_t j = 0; j < a.instruments(); ++j)
    {
        const auto col = static_cast<Eigen::Index>(j);
        Eigen::MatrixXd design(static_cast<Eigen::Index>(a.size()), 2);
        design.col(0).setOnes();
        design.col(1) = a.z().col(col);
        const Eigen::VectorXd coef = detail::least_squares(
            design, Eigen::Map<const Eigen::VectorXd>(xa.data(), static_cast<Eigen::Index>(xa.size())),
            {"intercept", "z_" + std::to_string(j + 1)});

        const Eigen::VectorXd zb = b.z().col(col);
        try
        {
            const LogisticFit fit =
                logistic_fit_single(std::span<const double>(zb.data(), static_cast<std::size_t>(zb.size())), b.y());
            kept.push_back(SnpSummary{coef[1], fit.slope, fit.se});
        }
        catch (const SeparationError& e)
        {
            log::warn("ivw: dropping instrument z_" + std::to_string(j + 1) + ": " + e.what());
            dropped.push_back(j);
        }
    }
    if (kept.empty())
    {
        throw SeparationError("ivw: every instrument was dropped");
    }
    FreqEstimate est = ivw_combine(kept);
    est.droppedInstruments = std::move(dropped);
    return est;
}

}  // namespace ropemr
