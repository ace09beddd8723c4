#pragma once

// Rough differential equations dY = f(Y) dB driven by a piecewise-linear lift.

#include "tfbm/params.hpp"
#include "tfbm/regression.hpp"
#include "tfbm/rng.hpp"
#include "tfbm/roughpath.hpp"
#include "tfbm/simulate.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfbm {

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// f: R^m -> R^{m x d} together with its derivative.
///
/// jacobian(y)[c] is the m x d matrix of partial derivatives d f / d y_c.
struct VectorField {
    int state_dim = 1;
    int noise_dim = 1;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> f;
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> jacobian;
    bool lipschitz = true;  // informational
    bool smooth_c3 = true;  // informational

    [[nodiscard]] bool additive() const noexcept { return additive_; }

    /// f(y) = Sigma, Df = 0.
    static VectorField constant(Eigen::MatrixXd sigma) {
        VectorField vf;
        vf.state_dim = static_cast<int>(sigma.rows());
        vf.noise_dim = static_cast<int>(sigma.cols());
        const int m = vf.state_dim;
        vf.f = [sigma](const Eigen::VectorXd&) { return sigma; };
        vf.jacobian = [sigma, m](const Eigen::VectorXd&) {
            return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(m),
                                                Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols()));
        };
        vf.additive_ = true;
        return vf;
    }

    /// f(y)_{., b} = A_b y, one matrix per noise component.
    static VectorField linear(std::vector<Eigen::MatrixXd> a) {
        detail::require(!a.empty(), "linear field needs at least one matrix");
        VectorField vf;
        vf.state_dim = static_cast<int>(a.front().rows());
        vf.noise_dim = static_cast<int>(a.size());
        const int m = vf.state_dim;
        const int d = vf.noise_dim;
        vf.f = [a, m, d](const Eigen::VectorXd& y) {
            Eigen::MatrixXd out(m, d);
            for (int b = 0; b < d; ++b) out.col(b) = a[static_cast<std::size_t>(b)] * y;
            return out;
        };
        vf.jacobian = [a, m, d](const Eigen::VectorXd&) {
            std::vector<Eigen::MatrixXd> j(static_cast<std::size_t>(m), Eigen::MatrixXd(m, d));
            for (int c = 0; c < m; ++c)
                for (int b = 0; b < d; ++b) j[static_cast<std::size_t>(c)].col(b) = a[static_cast<std::size_t>(b)].col(c);
            return j;
        };
        return vf;
    }

    /// Scalar dY = Y dB.
    static VectorField scalar_linear() { return linear({Eigen::MatrixXd::Ones(1, 1)}); }

private:
    bool additive_ = false;
};

/// Largest relative discrepancy between the supplied Jacobian and central
/// differences with step h, over the given states.
[[nodiscard]] inline double jacobian_check(const VectorField& vf,
                                           const std::vector<Eigen::VectorXd>& states,
                                           double h = 1e-6) {
    double worst = 0.0;
    for (const auto& y : states) {
        const auto jac = vf.jacobian(y);
        for (int c = 0; c < vf.state_dim; ++c) {
            Eigen::VectorXd up = y, down = y;
            up[c] += h;
            down[c] -= h;
            const Eigen::MatrixXd fd = (vf.f(up) - vf.f(down)) / (2.0 * h);
            const Eigen::MatrixXd& exact = jac[static_cast<std::size_t>(c)];
            const double denom = std::max({exact.norm(), fd.norm(), 1e-8});
            worst = std::max(worst, (fd - exact).norm() / denom);
        }
    }
    return worst;
}

/// Jacobian check at `count` random states drawn from N(0, scale^2 I).
[[nodiscard]] inline double jacobian_check_random(const VectorField& vf, std::size_t count,
                                                  std::uint64_t seed, double scale = 1.0) {
    NormalStream normal(RngSpec{seed, 0});
    std::vector<Eigen::VectorXd> states;
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::VectorXd y(vf.state_dim);
        for (int k = 0; k < vf.state_dim; ++k) y[k] = scale * normal();
        states.push_back(std::move(y));
    }
    return jacobian_check(vf, states);
}

/// Milstein scheme: Y_{k+1} = Y_k + f(Y_k) dB_k + sum_{e} Df_e(Y_k) (f(Y_k) L_k)_e, where
/// L_k is the adjacent-interval lift. Returns (N+1) x m states.
[[nodiscard]] inline PathMatrix milstein_solve(const VectorField& vf, const Eigen::VectorXd& y0,
                                               const RoughPathLift& lift) {
    detail::require(y0.size() == vf.state_dim, "initial state has the wrong dimension");
    detail::require(lift.dim() == vf.noise_dim, "lift dimension does not match the vector field");
    const std::size_t n = lift.intervals();
    PathMatrix y(n + 1, vf.state_dim);
    y.row(0) = y0.transpose();
    Eigen::VectorXd state = y0;
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::MatrixXd fy = vf.f(state);
        Eigen::VectorXd next = state + fy * lift.increment(k, k + 1);
        if (!vf.additive()) {
            const Eigen::MatrixXd fl = fy * lift.interval(k);  // (f L)(e, b) = sum_c f(e,c) L(c,b)
            const auto jac = vf.jacobian(state);
            for (int e = 0; e < vf.state_dim; ++e)
                next += jac[static_cast<std::size_t>(e)] * fl.row(e).transpose();
        }
        if (!next.allFinite()) throw DivergenceError(k, "Milstein state became non-finite");
        state = std::move(next);
        y.row(k + 1) = state.transpose();
    }
    return y;
}

/// exp(B(T) - B(0)): the solution of the scalar geometric equation dY = Y dB, Y_0 = 1.
[[nodiscard]] inline double exact_scalar_linear(const SamplePath& path) {
    detail::require(path.dim() == 1, "exact_scalar_linear requires a one-dimensional path");
    const auto& v = path.values();
    return std::exp(v(static_cast<Eigen::Index>(path.points() - 1), 0) - v(0, 0));
}

/// exp(B(t_i) - B(0)) at every grid point.
[[nodiscard]] inline std::vector<double> exact_scalar_linear_trajectory(const SamplePath& path) {
    detail::require(path.dim() == 1, "exact_scalar_linear requires a one-dimensional path");
    std::vector<double> out(path.points());
    for (std::size_t i = 0; i < path.points(); ++i)
        out[i] = std::exp(path.values()(static_cast<Eigen::Index>(i), 0) - path.values()(0, 0));
    return out;
}

struct ConvergenceReport {
    std::vector<std::size_t> resolutions;
    std::vector<double> errors;
    std::vector<double> stderrs;
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::size_t n_mc = 0;
    RngSpec rng;
};

/// Rows `n,error,stderr`, then a `# slope=...` comment line.
inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
    const auto old = os.precision(12);
    os << "n,error,stderr\n";
    for (std::size_t i = 0; i < r.resolutions.size(); ++i)
        os << r.resolutions[i] << ',' << r.errors[i] << ',' << r.stderrs[i] << '\n';
    os << "# slope=" << r.slope << " slope_stderr=" << r.slope_stderr << " n_mc=" << r.n_mc
       << " seed=" << r.rng.seed << " stream=" << r.rng.stream << '\n';
    os.precision(old);
}

namespace detail {

inline void require_nested_resolutions(const std::vector<std::size_t>& res) {
    require(res.size() >= 3, "need at least three resolutions");
    for (std::size_t i = 0; i < res.size(); ++i) {
        require(res[i] >= 1 && (res[i] & (res[i] - 1)) == 0, "resolutions must be powers of two");
        if (i > 0) require(res[i] > res[i - 1], "resolutions must be strictly increasing");
    }
}

inline ConvergenceReport finish_report(std::vector<std::size_t> res,
                                       const std::vector<std::vector<double>>& sq, std::size_t n_mc,
                                       const RngSpec& rng) {
    ConvergenceReport r;
    r.resolutions = std::move(res);
    r.n_mc = n_mc;
    r.rng = rng;
    for (const auto& s : sq) {
        const auto e = rms_from_squares(s);
        r.errors.push_back(e.rms);
        r.stderrs.push_back(e.stderr_rms);
    }
    bool all_positive = true;
    for (double e : r.errors) all_positive = all_positive && e > 0.0;
    if (all_positive) {
        std::vector<double> x(r.resolutions.begin(), r.resolutions.end());
        const auto fit = loglog_fit(x, r.errors);
        r.slope = fit.slope;
        r.slope_stderr = fit.slope_stderr;
    }
    return r;
}

}  // namespace detail

/// Reference value of Y_T computed from the finest simulated path.
using ReferenceSolution = std::function<Eigen::VectorXd(const SamplePath&)>;

/// Strong L2 error of Milstein at each resolution on coupled paths.
///
/// With a reference functional, paths are simulated at the finest resolution and
/// the reference is evaluated on them; otherwise the reference is Milstein at 8x
/// the finest resolution on the same fine path. Replica k uses rng.substream(k).
[[nodiscard]] inline ConvergenceReport strong_error(const ModelParams& p, const VectorField& vf,
                                                    const Eigen::VectorXd& y0,
                                                    std::vector<std::size_t> resolutions,
                                                    std::size_t n_mc, const RngSpec& rng,
                                                    const std::optional<ReferenceSolution>& reference = std::nullopt) {
    p.require_liftable();
    detail::require(p.dim == vf.noise_dim, "model dimension must match the vector field");
    detail::require(n_mc >= 2, "n_mc must be at least 2");
    detail::require_nested_resolutions(resolutions);
    const std::size_t finest = resolutions.back() * (reference ? 1 : 8);
    UniformPathGenerator gen(p, finest);
    std::vector<std::vector<double>> sq(resolutions.size(), std::vector<double>(n_mc));
    for (std::size_t m = 0; m < n_mc; ++m) {
        const SamplePath fine = gen.sample(rng.substream(m));
        Eigen::VectorXd y_ref;
        if (reference) {
            y_ref = (*reference)(fine);
        } else {
            const auto traj = milstein_solve(vf, y0, RoughPathLift(fine));
            y_ref = traj.row(traj.rows() - 1).transpose();
        }
        for (std::size_t r = 0; r < resolutions.size(); ++r) {
            const auto traj = milstein_solve(vf, y0, RoughPathLift(fine.coarsen(finest / resolutions[r])));
            sq[r][m] = (traj.row(traj.rows() - 1).transpose() - y_ref).squaredNorm();
        }
    }
    return detail::finish_report(std::move(resolutions), sq, n_mc, rng);
}

/// Reference functional for dY = Y dB, Y_0 = 1.
[[nodiscard]] inline ReferenceSolution scalar_linear_reference() {
    return [](const SamplePath& path) {
        return Eigen::VectorXd::Constant(1, exact_scalar_linear(path));
    };
}

// ---------------------------------------------------------------------------
// Young vs compensated (rough) Riemann sums
// ---------------------------------------------------------------------------

/// Integrand X_t = g(B_t) for the scalar integral Int <g(B), dB>; dg(i, j) = d g_i / d x_j.
struct OneForm {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> dg;

    /// g(x) = x.
    static OneForm identity(int dim) {
        return {[](const Eigen::VectorXd& x) { return x; },
                [dim](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(dim, dim); }};
    }

    /// g(x) = c.
    static OneForm constant(Eigen::VectorXd c) {
        const auto d = c.size();
        return {[c](const Eigen::VectorXd&) { return c; },
                [d](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(d, d); }};
    }
};

/// Left-point Riemann sum sum_k <g(B_k), dB_k>.
[[nodiscard]] inline double young_integral(const SamplePath& path, const OneForm& x) {
    double acc = 0.0;
    for (std::size_t k = 0; k < path.intervals(); ++k)
        acc += x.g(path.at(k)).dot(path.increment(k, k + 1));
    return acc;
}

/// Compensated sum sum_k <g(B_k), dB_k> + tr(Dg(B_k) L_k).
[[nodiscard]] inline double rough_integral(const RoughPathLift& lift, const OneForm& x) {
    const SamplePath& path = lift.path();
    double acc = 0.0;
    for (std::size_t k = 0; k < path.intervals(); ++k) {
        const Eigen::VectorXd b = path.at(k);
        acc += x.g(b).dot(path.increment(k, k + 1)) + (x.dg(b) * lift.interval(k)).trace();
    }
    return acc;
}

struct YoungRoughReport {
    std::vector<std::size_t> resolutions;
    std::vector<double> mean_abs_difference;  // E|Young - rough| per resolution
    std::vector<double> stderrs;
    double observed_rate = 0.0;               // -slope of log2 difference vs log2 N
    bool monotone_decreasing = false;
};

/// Compares Young and rough sums on coarsenings of one fine path per replica.
/// Requires H > 1/2; below that the Young sum has no limit.
[[nodiscard]] inline YoungRoughReport young_vs_rough_compare(const ModelParams& p, const OneForm& x,
                                                             std::vector<std::size_t> resolutions,
                                                             std::size_t n_mc, const RngSpec& rng) {
    p.validate();
    detail::require(p.hurst > 0.5, "Young integration requires hurst > 1/2");
    detail::require(n_mc >= 1, "n_mc must be at least 1");
    detail::require_nested_resolutions(resolutions);
    UniformPathGenerator gen(p, resolutions.back());
    std::vector<std::vector<double>> diff(resolutions.size(), std::vector<double>(n_mc));
    for (std::size_t m = 0; m < n_mc; ++m) {
        const SamplePath fine = gen.sample(rng.substream(m));
        for (std::size_t r = 0; r < resolutions.size(); ++r) {
            const SamplePath coarse = fine.coarsen(resolutions.back() / resolutions[r]);
            const RoughPathLift lift(coarse);
            diff[r][m] = std::abs(young_integral(coarse, x) - rough_integral(lift, x));
        }
    }
    YoungRoughReport out;
    out.resolutions = resolutions;
    for (const auto& d : diff) {
        double mean = 0.0, var = 0.0;
        for (double v : d) mean += v;
        mean /= static_cast<double>(d.size());
        for (double v : d) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d.size() > 1 ? d.size() - 1 : 1);
        out.mean_abs_difference.push_back(mean);
        out.stderrs.push_back(std::sqrt(var / static_cast<double>(d.size())));
    }
    out.monotone_decreasing = true;
    for (std::size_t i = 1; i < out.mean_abs_difference.size(); ++i)
        if (!(out.mean_abs_difference[i] < out.mean_abs_difference[i - 1])) out.monotone_decreasing = false;
    bool positive = true;
    for (double v : out.mean_abs_difference) positive = positive && v > 0.0;
    if (positive) {
        std::vector<double> xs(resolutions.begin(), resolutions.end());
        out.observed_rate = -loglog_fit(xs, out.mean_abs_difference).slope;
    }
    return out;
}

}  // namespace tfbm
