#pragma once

// Level-2 lift of a sampled path by piecewise-linear interpolation.
//
// Convention: (a (x) b)_{ij} = a_i b_j and Lift(s,t)_{ij} = Int_s^t (X^i_u - X^i_s) dX^j_u.

#include "tfbm/params.hpp"
#include "tfbm/rng.hpp"
#include "tfbm/simulate.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

namespace tfbm {

using Tensor2 = Eigen::MatrixXd;

/// Piecewise-linear rough path lift of a SamplePath.
///
/// Stores the prefix tensors L(t_0, t_i); any L(t_i, t_j) is rebuilt with one
/// Chen composition, so memory is O(N d^2) instead of O(N^2 d^2).
class RoughPathLift {
public:
    explicit RoughPathLift(SamplePath path) : path_(std::move(path)) {
        detail::require(path_.points() >= 2, "lift needs at least two grid points");
        const int d = path_.dim();
        const std::size_t n = path_.intervals();
        prefix_.assign(n + 1, Tensor2::Zero(d, d));
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd x0i = path_.increment(0, i);
            const Eigen::VectorXd dx = path_.increment(i, i + 1);
            prefix_[i + 1] = prefix_[i] + 0.5 * dx * dx.transpose() + x0i * dx.transpose();
        }
    }

    [[nodiscard]] const SamplePath& path() const noexcept { return path_; }
    [[nodiscard]] int dim() const noexcept { return path_.dim(); }
    [[nodiscard]] std::size_t intervals() const noexcept { return path_.intervals(); }

    [[nodiscard]] Eigen::VectorXd increment(std::size_t i, std::size_t j) const {
        check_span(i, j);
        return path_.increment(i, j);
    }

    /// L(t_i, t_{i+1}) = dB_i (x) dB_i / 2.
    [[nodiscard]] Tensor2 interval(std::size_t i) const {
        detail::require(i < intervals(), "interval index out of range");
        const Eigen::VectorXd dx = path_.increment(i, i + 1);
        return 0.5 * dx * dx.transpose();
    }

    /// L(t_0, t_i), stored.
    [[nodiscard]] const Tensor2& from_origin(std::size_t i) const {
        detail::require(i <= intervals(), "grid index out of range");
        return prefix_[i];
    }

    /// L(t_i, t_j) = L(0, t_j) - L(0, t_i) - X(0, t_i) (x) X(t_i, t_j).
    [[nodiscard]] Tensor2 level2(std::size_t i, std::size_t j) const {
        check_span(i, j);
        if (i == j) return Tensor2::Zero(dim(), dim());
        if (i == 0) return prefix_[j];
        if (j == i + 1) return interval(i);
        return prefix_[j] - prefix_[i] - path_.increment(0, i) * path_.increment(i, j).transpose();
    }

    /// L(t_i, t_j) by the forward recursion
    /// L(t_i, t_{k+1}) = L(t_i, t_k) + L(t_k, t_{k+1}) + X(t_i, t_k) (x) dX_k.  O(j - i).
    [[nodiscard]] Tensor2 level2_by_recursion(std::size_t i, std::size_t j) const {
        check_span(i, j);
        Tensor2 acc = Tensor2::Zero(dim(), dim());
        for (std::size_t k = i; k < j; ++k) {
            const Eigen::VectorXd dx = path_.increment(k, k + 1);
            acc += 0.5 * dx * dx.transpose() + path_.increment(i, k) * dx.transpose();
        }
        return acc;
    }

private:
    void check_span(std::size_t i, std::size_t j) const {
        detail::require(i <= j, "span requires i <= j");
        detail::require(j <= intervals(), "grid index out of range");
    }

    SamplePath path_;
    std::vector<Tensor2> prefix_;
};

[[nodiscard]] inline RoughPathLift lift_piecewise_linear(SamplePath path) {
    return RoughPathLift(std::move(path));
}

/// L(t_i, t_j) assembled as L(t_i, t_k) + L(t_k, t_j) + X(t_i, t_k) (x) X(t_k, t_j).
[[nodiscard]] inline Tensor2 chen_compose(const RoughPathLift& lift, std::size_t i, std::size_t k,
                                          std::size_t j) {
    detail::require(i <= k && k <= j, "chen_compose requires i <= k <= j");
    detail::require(j <= lift.intervals(), "grid index out of range");
    return lift.level2(i, k) + lift.level2(k, j) +
           lift.increment(i, k) * lift.increment(k, j).transpose();
}

/// Antisymmetric part (L - L^T) / 2; in dim 2 entry (0,1) is the signed Levy area.
[[nodiscard]] inline Tensor2 antisymmetric_part(const Tensor2& t) { return 0.5 * (t - t.transpose()); }
[[nodiscard]] inline Tensor2 symmetric_part(const Tensor2& t) { return 0.5 * (t + t.transpose()); }

/// Monte Carlo L2 error with its standard error (delta method on the mean square).
struct MonteCarloError {
    double rms = 0.0;
    double stderr_rms = 0.0;
    std::size_t samples = 0;
};

namespace detail {

inline MonteCarloError rms_from_squares(const std::vector<double>& sq) {
    MonteCarloError out;
    out.samples = sq.size();
    if (sq.empty()) return out;
    double mean = 0.0;
    for (double v : sq) mean += v;
    mean /= static_cast<double>(sq.size());
    double var = 0.0;
    for (double v : sq) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sq.size() > 1 ? sq.size() - 1 : 1);
    out.rms = std::sqrt(mean);
    const double se_mean = std::sqrt(var / static_cast<double>(sq.size()));
    out.stderr_rms = out.rms > 0.0 ? se_mean / (2.0 * out.rms) : 0.0;
    return out;
}

}  // namespace detail

/// L(t_0, t_n) of the path restricted to every `stride`-th grid point, without
/// storing prefixes.
[[nodiscard]] inline Tensor2 level2_from_origin(const SamplePath& path, std::size_t stride = 1) {
    detail::require(stride >= 1 && path.intervals() % stride == 0, "stride must divide the interval count");
    const auto& v = path.values();
    const Eigen::Index d = v.cols();
    Tensor2 acc = Tensor2::Zero(d, d);
    Eigen::VectorXd x0i = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < path.intervals(); i += stride) {
        const Eigen::VectorXd dx =
            (v.row(static_cast<Eigen::Index>(i + stride)) - v.row(static_cast<Eigen::Index>(i))).transpose();
        acc.noalias() += (x0i + 0.5 * dx) * dx.transpose();
        x0i += dx;
    }
    return acc;
}

/// e(N) for several N from one coupled simulation per replica: each replica is
/// simulated on the 2 max(N) grid and every coarser grid is obtained by dropping
/// points. Replica k draws from rng.substream(k).
[[nodiscard]] inline std::vector<MonteCarloError> refinement_errors(const ModelParams& p,
                                                                    const std::vector<std::size_t>& ns,
                                                                    std::size_t n_mc,
                                                                    const RngSpec& rng) {
    p.require_liftable();
    detail::require(!ns.empty(), "need at least one resolution");
    detail::require(n_mc >= 2, "refinement_error needs at least two Monte Carlo samples");
    std::size_t n_max = 0;
    for (std::size_t n : ns) {
        detail::require(n >= 1 && (n & (n - 1)) == 0, "N must be a power of two");
        n_max = std::max(n_max, n);
    }
    UniformPathGenerator sampler(p, 2 * n_max);
    std::vector<std::vector<double>> sq(ns.size(), std::vector<double>(n_mc));
    for (std::size_t k = 0; k < n_mc; ++k) {
        const SamplePath fine = sampler.sample(rng.substream(k));
        for (std::size_t r = 0; r < ns.size(); ++r) {
            const std::size_t stride = n_max / ns[r];
            sq[r][k] = (level2_from_origin(fine, 2 * stride) - level2_from_origin(fine, stride)).squaredNorm();
        }
    }
    std::vector<MonteCarloError> out;
    for (const auto& s : sq) out.push_back(detail::rms_from_squares(s));
    return out;
}

/// e(N) = E[ |L^{(N)}(0,T) - L^{(2N)}(0,T)|_F^2 ]^{1/2}.
///
/// Each replica simulates one path on the 2N grid; the N-grid lift uses the same
/// path with odd points dropped. Replica k draws from rng.substream(k).
[[nodiscard]] inline MonteCarloError refinement_error(const ModelParams& p, std::size_t n,
                                                      std::size_t n_mc, const RngSpec& rng) {
    return refinement_errors(p, {n}, n_mc, rng).front();
}

}  // namespace tfbm
