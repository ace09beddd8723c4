#pragma once

// Truncated signatures of piecewise-linear paths.

#include "tfbm/covariance.hpp"
#include "tfbm/roughpath.hpp"
#include "tfbm/simulate.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tfbm {

class UnsupportedDepthError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxSignatureDepth = 8;

/// Levels 0..K of a tensor series; level k is a flattened dim^k array
/// (row-major multi-index, first index slowest).
class TruncatedSignature {
public:
    TruncatedSignature(int dim, int depth) : dim_(dim), depth_(depth) {
        detail::require(dim >= 1, "signature dimension must be at least 1");
        if (depth < 0 || depth > kMaxSignatureDepth)
            throw UnsupportedDepthError("signature depth must lie in [0, 8]");
        levels_.resize(static_cast<std::size_t>(depth) + 1);
        std::size_t size = 1;
        for (auto& level : levels_) {
            level.assign(size, 0.0);
            size *= static_cast<std::size_t>(dim);
        }
        levels_[0][0] = 1.0;
    }

    /// exp(v) truncated at `depth`: level k = v^{(x)k} / k!.
    static TruncatedSignature segment(const Eigen::VectorXd& v, int depth) {
        TruncatedSignature s(static_cast<int>(v.size()), depth);
        for (int k = 1; k <= depth; ++k) {
            const auto& prev = s.levels_[k - 1];
            auto& cur = s.levels_[k];
            std::size_t idx = 0;
            for (double a : prev)
                for (int j = 0; j < s.dim_; ++j) cur[idx++] = a * v[j] / k;
        }
        return s;
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] const std::vector<double>& level(int k) const { return levels_.at(static_cast<std::size_t>(k)); }

    [[nodiscard]] double norm(int k) const {
        double s = 0.0;
        for (double v : level(k)) s += v * v;
        return std::sqrt(s);
    }

    /// Level 2 as a dim x dim matrix.
    [[nodiscard]] Eigen::MatrixXd level2_matrix() const {
        detail::require(depth_ >= 2, "signature truncated below level 2");
        Eigen::MatrixXd m(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) m(i, j) = levels_[2][static_cast<std::size_t>(i * dim_ + j)];
        return m;
    }

    /// Chen product in the truncated tensor algebra: (a b)_k = sum_i a_i (x) b_{k-i}.
    [[nodiscard]] TruncatedSignature operator*(const TruncatedSignature& rhs) const {
        detail::require(dim_ == rhs.dim_ && depth_ == rhs.depth_,
                        "signature product needs equal dim and depth");
        TruncatedSignature out(dim_, depth_);
        out.levels_[0][0] = levels_[0][0] * rhs.levels_[0][0];
        for (int k = 1; k <= depth_; ++k) {
            auto& dst = out.levels_[k];
            for (int i = 0; i <= k; ++i) {
                const auto& a = levels_[i];
                const auto& b = rhs.levels_[k - i];
                std::size_t idx = 0;
                for (double x : a)
                    for (double y : b) dst[idx++] += x * y;
            }
        }
        return out;
    }

private:
    int dim_;
    int depth_;
    std::vector<std::vector<double>> levels_;
};

/// Signature of a polyline: Chen product of the per-segment exponentials.
[[nodiscard]] inline TruncatedSignature signature_truncated(const SamplePath& path, int depth) {
    TruncatedSignature acc(path.dim(), depth);
    for (std::size_t i = 0; i < path.intervals(); ++i)
        acc = acc * TruncatedSignature::segment(path.increment(i, i + 1), depth);
    return acc;
}

[[nodiscard]] inline TruncatedSignature signature_truncated(const RoughPathLift& lift, int depth) {
    return signature_truncated(lift.path(), depth);
}

struct FactorialDecayReport {
    int depth = 0;
    std::vector<double> rms;               // E[|S^k|^2]^{1/2}, k = 1..K (index k-1)
    std::vector<double> rms_stderr;
    std::vector<double> successive_ratio;  // rms[k] / rms[k-1], k = 2..K (index k-2)
    double fitted_constant = 0.0;          // smallest C with rms_k <= C^k T^{kH} / (k/2)!
    bool ratios_decreasing_from_3 = false;
};

/// Monte Carlo estimate of the level norms of the signature over [0, T].
[[nodiscard]] inline FactorialDecayReport factorial_decay_check(const ModelParams& p, int depth,
                                                                std::size_t n_mc,
                                                                const RngSpec& rng,
                                                                std::size_t n_steps = 128) {
    p.require_liftable();
    detail::require(depth >= 1 && depth <= 6, "factorial_decay_check supports depth 1..6");
    detail::require(n_mc >= 2, "n_mc must be at least 2");
    UniformPathGenerator gen(p, n_steps);
    std::vector<std::vector<double>> sq(static_cast<std::size_t>(depth), std::vector<double>(n_mc));
    for (std::size_t m = 0; m < n_mc; ++m) {
        const auto sig = signature_truncated(gen.sample(rng.substream(m)), depth);
        for (int k = 1; k <= depth; ++k) {
            const double nk = sig.norm(k);
            sq[static_cast<std::size_t>(k - 1)][m] = nk * nk;
        }
    }

    FactorialDecayReport r;
    r.depth = depth;
    for (int k = 1; k <= depth; ++k) {
        const auto e = detail::rms_from_squares(sq[static_cast<std::size_t>(k - 1)]);
        r.rms.push_back(e.rms);
        r.rms_stderr.push_back(e.stderr_rms);
        const double scale = std::pow(p.horizon, k * p.hurst) / std::tgamma(0.5 * k + 1.0);
        r.fitted_constant = std::max(r.fitted_constant, std::pow(e.rms / scale, 1.0 / k));
    }
    for (int k = 2; k <= depth; ++k) r.successive_ratio.push_back(r.rms[k - 1] / r.rms[k - 2]);

    r.ratios_decreasing_from_3 = true;
    // successive_ratio[j] compares level j+2 with level j+1; start at level 3 / level 2.
    for (std::size_t j = 2; j < r.successive_ratio.size(); ++j)
        if (!(r.successive_ratio[j] < r.successive_ratio[j - 1])) r.ratios_decreasing_from_3 = false;
    return r;
}

}  // namespace tfbm
