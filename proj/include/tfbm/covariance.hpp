#pragma once

// Covariance structure of tempered fractional Brownian motion.
//
// The process is the moving average
//
//     B(t) = c * Int [ e^{-lambda (t-s)_+} (t-s)_+^{H-1/2} - e^{-lambda (-s)_+} (-s)_+^{H-1/2} ] dW(s)
//
// with c chosen so that lambda -> 0 recovers standard fBm (Var B(1) = 1).  The
// 1/Gamma(H+1/2) prefactor of the plain moving-average form gives instead
// moving_average_scale(H) * t^{2H} in that limit; multiply by that constant to
// convert.

#include "tfbm/params.hpp"

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <type_traits>
#include <vector>

namespace tfbm {

/// Var[B(1)] of lambda -> 0 moving-average fBm under the 1/Gamma(H+1/2) prefactor.
[[nodiscard]] inline double moving_average_scale(double hurst) {
    detail::require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0,1)");
    return 1.0 / (std::tgamma(2.0 * hurst + 1.0) * std::sin(std::numbers::pi * hurst));
}

namespace detail {

// Below this value of lambda*t the Bessel closed form cancels catastrophically;
// the power series is used instead.
inline constexpr double kSeriesCutoff = 2.0;

// Series form of C(t)/t^{2H}, obtained by expanding K_H through I_{+-H}.
inline double variance_series_ratio(double hurst, double z) {
    const double q = 0.25 * z * z;
    const double half_z_pow = std::pow(0.5 * z, -2.0 * hurst);
    double a = 1.0 / std::tgamma(hurst + 1.0);  // k = 0 term of the first sum
    double b = q / std::tgamma(2.0 - hurst);    // k = 1 term of the second sum
    double s1 = a;
    double s2 = b;
    for (int k = 1; k < 60; ++k) {
        a *= q / (k * (k + hurst));
        b *= q / ((k + 1) * (k + 1 - hurst));
        s1 += a;
        s2 += b;
        if (a < 1e-18 * s1 && b * half_z_pow < 1e-18 * s1) break;
    }
    return std::tgamma(hurst + 1.0) * (s1 - half_z_pow * s2);
}

inline double variance_bessel(double hurst, double lambda, double t) {
    const double g = std::tgamma(hurst + 0.5);
    const double plateau = 2.0 * std::tgamma(2.0 * hurst) / std::pow(2.0 * lambda, 2.0 * hurst);
    const double z = lambda * t;
    const double bessel = z > 700.0 ? 0.0 : std::cyl_bessel_k(hurst, z);
    const double raw = (plateau - 2.0 * g / std::sqrt(std::numbers::pi) *
                                      std::pow(t / (2.0 * lambda), hurst) * bessel) /
                       (g * g);
    return raw / moving_average_scale(hurst);
}

}  // namespace detail

/// Variance C(t) = E[B(t)^2] of one component.
[[nodiscard]] inline double variance(const ModelParams& p, double t) {
    detail::require(t >= 0.0, "variance: time must be nonnegative");
    if (t == 0.0) return 0.0;
    const double z = p.lambda * t;
    if (z <= detail::kSeriesCutoff)
        return std::pow(t, 2.0 * p.hurst) * detail::variance_series_ratio(p.hurst, z);
    return detail::variance_bessel(p.hurst, p.lambda, t);
}

/// lim_{t -> inf} C(t); finite because tempering makes the process mean-reverting.
[[nodiscard]] inline double variance_plateau(const ModelParams& p) {
    const double g = std::tgamma(p.hurst + 0.5);
    return 2.0 * std::tgamma(2.0 * p.hurst) / std::pow(2.0 * p.lambda, 2.0 * p.hurst) / (g * g) /
           moving_average_scale(p.hurst);
}

/// R(s,t) = (C(s) + C(t) - C(|t-s|)) / 2.
[[nodiscard]] inline double covariance(const ModelParams& p, double s, double t) {
    detail::require(s >= 0.0 && t >= 0.0, "covariance: times must be nonnegative");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    return 0.5 * (variance(p, lo) + variance(p, hi) - variance(p, hi - lo));
}

/// Standard (unit-variance) fBm covariance.
[[nodiscard]] inline double fbm_covariance(double hurst, double s, double t) {
    detail::require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0,1)");
    detail::require(s >= 0.0 && t >= 0.0, "fbm_covariance: times must be nonnegative");
    const double e = 2.0 * hurst;
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    return 0.5 * (std::pow(lo, e) + std::pow(hi, e) - std::pow(hi - lo, e));
}

/// E[(B_t - B_s)(B_v - B_u)], written through stationary increments.
[[nodiscard]] inline double incremental_covariance(const ModelParams& p, double s, double t,
                                                   double u, double v) {
    detail::require(s >= 0.0 && u >= 0.0, "incremental_covariance: times must be nonnegative");
    detail::require(s <= t && u <= v, "incremental_covariance: intervals must be ordered");
    return 0.5 * (variance(p, std::abs(v - s)) + variance(p, std::abs(u - t)) -
                  variance(p, std::abs(v - t)) - variance(p, std::abs(u - s)));
}

// ---------------------------------------------------------------------------
// Decomposition R_{H,lambda} = R_H + E1 + E2 and its pointwise bounds
// ---------------------------------------------------------------------------

struct DecompositionConstants {
    double c1 = 0.0;           // max of the two published forms below
    double c1_statement = 0.0; // Gamma(2H+2)/2
    double c1_derived = 0.0;   // Gamma(2H+2)/(4 Gamma(H+1/2)^2)
    double c_exp = 0.0;        // min(1/2, H/2)
    double c2 = 0.0;           // (2H/(c_exp e))^{2H}
};

[[nodiscard]] inline DecompositionConstants decomposition_constants(double hurst) {
    detail::require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0,1)");
    DecompositionConstants k;
    const double g2 = std::tgamma(2.0 * hurst + 2.0);
    const double gh = std::tgamma(hurst + 0.5);
    k.c1_statement = 0.5 * g2;
    k.c1_derived = g2 / (4.0 * gh * gh);
    k.c1 = std::max(k.c1_statement, k.c1_derived);
    k.c_exp = std::min(0.5, 0.5 * hurst);
    k.c2 = std::pow(2.0 * hurst / (k.c_exp * std::numbers::e), 2.0 * hurst);
    return k;
}

struct DecompositionBounds {
    double poly = 0.0;  // bound on |E1(s,t)|
    double exp = 0.0;   // bound on |E2(s,t)|
    [[nodiscard]] double total() const { return poly + exp; }
};

[[nodiscard]] inline DecompositionBounds decomposition_error_bounds(const ModelParams& p, double s,
                                                                    double t) {
    detail::require(s >= 0.0 && t >= 0.0, "decomposition bounds: times must be nonnegative");
    const auto k = decomposition_constants(p.hurst);
    const double g = std::tgamma(2.0 * p.hurst);
    const double lam_pow = std::pow(p.lambda, 2.0 * p.hurst);
    const double d = std::max({s, t, std::abs(t - s)});
    return {k.c1 / g * lam_pow * (t - s) * (t - s),
            k.c2 / (g * lam_pow) * std::exp(-k.c_exp * p.lambda * d)};
}

struct DecompositionViolation {
    double s = 0.0;
    double t = 0.0;
    double gap = 0.0;
    double bound = 0.0;
};

struct DecompositionReport {
    std::size_t pairs_checked = 0;
    double max_gap = 0.0;
    double min_slack = std::numeric_limits<double>::infinity();  // min of bound - gap
    double max_slack = -std::numeric_limits<double>::infinity();
    std::vector<DecompositionViolation> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Checks |R_{H,lambda}(s,t) - R_H(s,t)| <= poly + exp bound over every pair of grid points.
[[nodiscard]] inline DecompositionReport verify_decomposition(const ModelParams& p,
                                                              const Partition& grid) {
    DecompositionReport r;
    const auto& ts = grid.times();
    std::vector<double> var(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) var[i] = variance(p, ts[i]);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const double s = ts[i], t = ts[j];
            const double cov = 0.5 * (var[i] + var[j] - variance(p, std::abs(t - s)));
            const double gap = std::abs(cov - fbm_covariance(p.hurst, s, t));
            const double bound = decomposition_error_bounds(p, s, t).total();
            ++r.pairs_checked;
            r.max_gap = std::max(r.max_gap, gap);
            r.min_slack = std::min(r.min_slack, bound - gap);
            r.max_slack = std::max(r.max_slack, bound - gap);
            if (gap > bound) r.violations.push_back({s, t, gap, bound});
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// 2D rho-variation
// ---------------------------------------------------------------------------

template <class Kernel>
concept CovarianceKernel = std::regular_invocable<Kernel, double, double> &&
    std::convertible_to<std::invoke_result_t<Kernel, double, double>, double>;

[[nodiscard]] inline auto tfbm_kernel(const ModelParams& p) {
    return [p](double s, double t) { return covariance(p, s, t); };
}

[[nodiscard]] inline auto fbm_kernel(double hurst) {
    return [hurst](double s, double t) { return fbm_covariance(hurst, s, t); };
}

/// (sum_{i,j} |R(t_i,t_{i+1}; t_j,t_{j+1})|^rho)^{1/rho} for a single partition.
template <CovarianceKernel Kernel>
[[nodiscard]] double rho_variation_sum(const Kernel& cov, const Partition& partition, double rho) {
    detail::require(rho >= 1.0, "rho-variation requires rho >= 1");
    const auto& ts = partition.times();
    const std::size_t n = ts.size();
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            gram[i * n + j] = gram[j * n + i] = static_cast<double>(cov(ts[i], ts[j]));

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double rect = gram[(i + 1) * n + j + 1] - gram[(i + 1) * n + j] -
                                gram[i * n + j + 1] + gram[i * n + j];
            total += rho == 1.0 ? std::abs(rect) : std::pow(std::abs(rect), rho);
        }
    }
    return std::pow(total, 1.0 / rho);
}

struct RhoVariationSweep {
    double rho = 1.0;
    std::vector<int> depths;
    std::vector<double> values;       // per dyadic depth
    std::vector<double> running_sup;  // empirical sup over depths seen so far

    /// Relative change of the running sup between the last two depths.
    [[nodiscard]] double final_relative_growth() const {
        const std::size_t n = running_sup.size();
        if (n < 2) return 0.0;
        return (running_sup[n - 1] - running_sup[n - 2]) / running_sup[n - 2];
    }
};

/// Approximates the partition supremum by uniform dyadic partitions of depth 1..max_depth.
template <CovarianceKernel Kernel>
[[nodiscard]] RhoVariationSweep dyadic_rho_variation(const Kernel& cov, double horizon, double rho,
                                                     int max_depth = 10) {
    detail::require(max_depth >= 1, "max_depth must be at least 1");
    RhoVariationSweep sweep;
    sweep.rho = rho;
    double sup = 0.0;
    for (int d = 1; d <= max_depth; ++d) {
        const double v = rho_variation_sum(cov, Partition::dyadic(horizon, d), rho);
        sup = std::max(sup, v);
        sweep.depths.push_back(d);
        sweep.values.push_back(v);
        sweep.running_sup.push_back(sup);
    }
    return sweep;
}

/// Variation index used for tfBm: 1/(2H), floored at 1 where the 2D rho-variation is defined.
[[nodiscard]] inline double critical_rho(double hurst) {
    return std::max(1.0, 1.0 / (2.0 * hurst));
}

/// Assembled finite-variation bound C(H, lambda, T).
///
///   C = V_rho(R_H) + (C1 / Gamma(2H)) lambda^{2H} T^2
///       + C2 / (Gamma(2H) lambda^{2H}) * (K2 / lambda)^{1/rho},
///   K2 = 2T / (c rho) * (1 + 1 / (c lambda T)),
///
/// with C1 the larger of the two published forms.  V_rho(R_H) is not explicit and
/// must be supplied (e.g. the dyadic sup of the fBm kernel).
[[nodiscard]] inline double rho_variation_bound(const ModelParams& p, double rho,
                                                double fbm_rho_variation) {
    const auto k = decomposition_constants(p.hurst);
    const double g = std::tgamma(2.0 * p.hurst);
    const double lam_pow = std::pow(p.lambda, 2.0 * p.hurst);
    const double t = p.horizon;
    const double k2 = 2.0 * t / (k.c_exp * rho) * (1.0 + 1.0 / (k.c_exp * p.lambda * t));
    return fbm_rho_variation + k.c1 / g * lam_pow * t * t +
           k.c2 / (g * lam_pow) * std::pow(k2 / p.lambda, 1.0 / rho);
}

struct PartitionBoundCheck {
    double sum = 0.0;
    double bound = 0.0;
    [[nodiscard]] bool holds() const { return sum <= bound; }
};

/// sum_{i,j} D_i^a D_j^a e^{-beta |t_i - t_j|} against T d^{2a-1} + (2T/beta) d^{2a-2} (1 + beta d),
/// d the mesh.  The second term uses 1/(1 - e^{-x}) <= 1 + 1/x.
[[nodiscard]] inline PartitionBoundCheck lemma_partition_bound_check(double alpha, double beta,
                                                                     double horizon,
                                                                     const Partition& partition) {
    detail::require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0,2)");
    detail::require(beta > 0.0, "beta must be positive");
    detail::require(std::abs(partition.horizon() - horizon) <= 1e-12 * horizon,
                    "partition must end at the horizon");
    const auto& ts = partition.times();
    const std::size_t n = partition.intervals();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(partition.step(i), alpha);

    PartitionBoundCheck out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.sum += w[i] * w[j] * std::exp(-beta * std::abs(ts[i] - ts[j]));

    const double d = partition.mesh();
    out.bound = horizon * std::pow(d, 2.0 * alpha - 1.0) +
                2.0 * horizon / beta * std::pow(d, 2.0 * alpha - 2.0) * (1.0 + beta * d);
    return out;
}

}  // namespace tfbm
