#pragma once

// Experiment drivers behind the command-line tool. Each driver returns plain
// result tables; writers render them as CSV with a commented config echo.

#include "tfbm/covariance.hpp"
#include "tfbm/params.hpp"
#include "tfbm/rde.hpp"
#include "tfbm/regression.hpp"
#include "tfbm/rng.hpp"
#include "tfbm/roughpath.hpp"
#include "tfbm/signature.hpp"
#include "tfbm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tfbm {

enum class Experiment { simulate, levy_convergence, milstein_convergence, signature_features, covariance_check, rho_variation };

[[nodiscard]] inline std::string_view experiment_name(Experiment e) {
    switch (e) {
        case Experiment::simulate: return "simulate";
        case Experiment::levy_convergence: return "levy-convergence";
        case Experiment::milstein_convergence: return "milstein-convergence";
        case Experiment::signature_features: return "signature-features";
        case Experiment::covariance_check: return "covariance-check";
        case Experiment::rho_variation: return "rho-variation";
    }
    return "unknown";
}

[[nodiscard]] inline Experiment parse_experiment(std::string_view s) {
    for (auto e : {Experiment::simulate, Experiment::levy_convergence, Experiment::milstein_convergence,
                   Experiment::signature_features, Experiment::covariance_check, Experiment::rho_variation})
        if (experiment_name(e) == s) return e;
    throw DomainError("unknown experiment '" + std::string(s) + "'");
}

inline constexpr std::size_t kDefaultMonteCarlo = 1000;
inline constexpr std::size_t kFastMonteCarlo = 200;
inline constexpr double kFastToleranceWidening = 0.05;
inline constexpr std::uint64_t kDefaultSeed = 20240917;

struct ExperimentConfig {
    Experiment experiment = Experiment::levy_convergence;
    std::vector<double> hurst;
    std::vector<double> lambda;
    double horizon = 1.0;
    std::vector<std::size_t> resolutions;
    std::size_t n_mc = kDefaultMonteCarlo;
    int dim = 1;
    int depth = 2;
    std::size_t n_paths = 1;
    std::size_t steps = 0;       // simulate / signature-features / covariance-check grid
    int max_depth = 10;          // rho-variation dyadic sweep
    std::optional<double> rho;   // rho-variation; default critical_rho(H)
    std::uint64_t seed = kDefaultSeed;
    std::string output;
    bool fast = false;
    bool binary = false;

    /// Defaults of each experiment.
    static ExperimentConfig defaults(Experiment e) {
        ExperimentConfig c;
        c.experiment = e;
        switch (e) {
            case Experiment::simulate:
                c.hurst = {0.4};
                c.lambda = {1.0};
                c.steps = 1024;
                c.dim = 1;
                break;
            case Experiment::levy_convergence:
                c.hurst = {0.3, 0.4, 0.6};
                c.lambda = {0.1, 1.0, 10.0};
                c.resolutions = dyadic_range(6, 12);
                c.dim = 2;
                break;
            case Experiment::milstein_convergence:
                c.hurst = {0.3, 0.4, 0.6, 0.7};
                c.lambda = {1.0};
                c.resolutions = dyadic_range(4, 10);
                c.steps = 100;  // trajectory dump
                break;
            case Experiment::signature_features:
                c.hurst = {0.3, 0.5, 0.7};
                c.lambda = {1.0};
                c.n_paths = 500;
                c.steps = 256;
                c.depth = 2;
                break;
            case Experiment::covariance_check:
                c.hurst = {0.3, 0.4, 0.6, 0.7};
                c.lambda = {0.1, 1.0, 10.0};
                c.steps = 63;  // 64 grid points
                c.max_depth = 10;
                break;
            case Experiment::rho_variation:
                c.hurst = {0.3, 0.5, 0.7};
                c.lambda = {1.0};
                c.max_depth = 10;
                break;
        }
        return c;
    }

    static std::vector<std::size_t> dyadic_range(int lo, int hi) {
        std::vector<std::size_t> out;
        for (int k = lo; k <= hi; ++k) out.push_back(std::size_t{1} << k);
        return out;
    }

    /// Applies --fast: n_mc = 200.
    void apply_fast() {
        fast = true;
        n_mc = std::min(n_mc, kFastMonteCarlo);
    }

    [[nodiscard]] double tolerance_widening() const noexcept { return fast ? kFastToleranceWidening : 0.0; }

    void validate() const {
        detail::require(!hurst.empty(), "hurst list must be nonempty");
        detail::require(!lambda.empty(), "lambda list must be nonempty");
        for (double h : hurst) detail::require(h > 0.0 && h < 1.0, "hurst must lie in (0,1)");
        for (double l : lambda) detail::require(l > 0.0, "lambda must be positive");
        detail::require(horizon > 0.0, "horizon must be positive");
        detail::require(dim >= 1, "dim must be at least 1");
        for (std::size_t i = 1; i < resolutions.size(); ++i)
            detail::require(resolutions[i] > resolutions[i - 1], "resolutions must be strictly increasing");
        const bool needs_lift = experiment == Experiment::levy_convergence ||
                                experiment == Experiment::milstein_convergence ||
                                experiment == Experiment::signature_features;
        if (needs_lift)
            for (double h : hurst)
                detail::require(h > 0.25, "this experiment builds the level-2 lift and needs hurst > 1/4");
        if (experiment == Experiment::levy_convergence || experiment == Experiment::milstein_convergence) {
            detail::require(resolutions.size() >= 4, "slope regression needs at least four resolutions");
            for (auto n : resolutions) detail::require(n >= 1 && (n & (n - 1)) == 0, "resolutions must be powers of two");
            detail::require(n_mc >= 2, "n_mc must be at least 2");
        }
        if (experiment == Experiment::rho_variation || experiment == Experiment::covariance_check)
            detail::require(max_depth >= 1 && max_depth <= 12, "max_depth must lie in [1, 12]");
        if (rho) detail::require(*rho >= 1.0, "rho must be at least 1");
    }

    [[nodiscard]] ModelParams model(double h, double l) const { return {h, l, dim, horizon}; }
};

namespace detail {

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    os.precision(12);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    return os.str();
}

/// Stream block keyed by the position of H in the config, so cells with equal H
/// share random numbers across lambda. Replicas use substreams inside the block.
inline RngSpec cell_rng(const ExperimentConfig& c, std::size_t hurst_index) {
    return RngSpec{c.seed, static_cast<std::uint64_t>(hurst_index) << 32};
}

inline constexpr std::uint64_t kTrajectoryStream = std::uint64_t{0xffff} << 32;

}  // namespace detail

/// `# key=value` lines echoing the full configuration.
inline void write_config_echo(std::ostream& os, const ExperimentConfig& c) {
    os << "# experiment=" << experiment_name(c.experiment) << '\n'
       << "# hurst=" << detail::join(c.hurst) << '\n'
       << "# lambda=" << detail::join(c.lambda) << '\n'
       << "# horizon=" << c.horizon << '\n'
       << "# resolutions=" << detail::join(c.resolutions) << '\n'
       << "# n_mc=" << c.n_mc << '\n'
       << "# dim=" << c.dim << '\n'
       << "# depth=" << c.depth << '\n'
       << "# n_paths=" << c.n_paths << '\n'
       << "# steps=" << c.steps << '\n'
       << "# max_depth=" << c.max_depth << '\n'
       << "# rho=" << (c.rho ? std::to_string(*c.rho) : std::string("critical")) << '\n'
       << "# seed=" << c.seed << '\n'
       << "# fast=" << (c.fast ? "true" : "false") << '\n';
}

// ---------------------------------------------------------------------------
// Convergence experiments
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    double hurst;
    double lambda;
    std::size_t n;
    double error;
    double stderr_;
};

struct SlopeSummary {
    double hurst;
    double lambda;
    LinearFit fit;
    double theoretical;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::vector<SlopeSummary> slopes;

    [[nodiscard]] const SlopeSummary& slope_for(double h, double l) const {
        for (const auto& s : slopes)
            if (s.hurst == h && s.lambda == l) return s;
        throw DomainError("no slope recorded for the requested cell");
    }

    [[nodiscard]] std::vector<double> errors_for(double h, double l) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.hurst == h && r.lambda == l) out.push_back(r.error);
        return out;
    }
};

namespace detail {

inline void add_cell(ConvergenceTable& t, double h, double l, const std::vector<std::size_t>& res,
                     const std::vector<double>& err, const std::vector<double>& se, double theoretical) {
    for (std::size_t i = 0; i < res.size(); ++i) t.rows.push_back({h, l, res[i], err[i], se[i]});
    SlopeSummary s{h, l, {}, theoretical};
    if (std::all_of(err.begin(), err.end(), [](double e) { return e > 0.0; })) {
        std::vector<double> x(res.begin(), res.end());
        s.fit = loglog_fit(x, err);
    }
    t.slopes.push_back(s);
}

inline void write_convergence_table(std::ostream& os, const ExperimentConfig& c, const ConvergenceTable& t,
                                    std::string_view n_column) {
    write_config_echo(os, c);
    const auto old = os.precision(12);
    os << "H,lambda," << n_column << ",error,stderr\n";
    for (const auto& r : t.rows)
        os << r.hurst << ',' << r.lambda << ',' << r.n << ',' << r.error << ',' << r.stderr_ << '\n';
    for (const auto& s : t.slopes)
        os << "# slope H=" << s.hurst << " lambda=" << s.lambda << " fitted=" << s.fit.slope
           << " stderr=" << s.fit.slope_stderr << " theoretical=" << s.theoretical << '\n';
    os.precision(old);
}

}  // namespace detail

/// e(N) per (H, lambda). Cells with the same H share random numbers across lambda.
[[nodiscard]] inline ConvergenceTable run_levy_convergence(const ExperimentConfig& c) {
    c.validate();
    ConvergenceTable t;
    for (std::size_t hi = 0; hi < c.hurst.size(); ++hi) {
        for (double l : c.lambda) {
            const auto errs = refinement_errors(c.model(c.hurst[hi], l), c.resolutions, c.n_mc, detail::cell_rng(c, hi));
            std::vector<double> e, se;
            for (const auto& x : errs) {
                e.push_back(x.rms);
                se.push_back(x.stderr_rms);
            }
            detail::add_cell(t, c.hurst[hi], l, c.resolutions, e, se, -2.0 * c.hurst[hi]);
        }
    }
    return t;
}

inline void write_levy_csv(std::ostream& os, const ExperimentConfig& c, const ConvergenceTable& t) {
    detail::write_convergence_table(os, c, t, "N");
}

/// Strong error of Milstein for dY = Y dB, Y_0 = 1, against exp(B(T)); dim 1.
[[nodiscard]] inline ConvergenceTable run_milstein_convergence(const ExperimentConfig& c) {
    c.validate();
    ConvergenceTable t;
    const auto vf = VectorField::scalar_linear();
    const Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
    for (std::size_t hi = 0; hi < c.hurst.size(); ++hi) {
        for (double l : c.lambda) {
            ModelParams p = c.model(c.hurst[hi], l);
            p.dim = 1;
            const auto r = strong_error(p, vf, y0, c.resolutions, c.n_mc, detail::cell_rng(c, hi),
                                        scalar_linear_reference());
            detail::add_cell(t, c.hurst[hi], l, c.resolutions, r.errors, r.stderrs, -c.hurst[hi]);
        }
    }
    return t;
}

inline void write_milstein_csv(std::ostream& os, const ExperimentConfig& c, const ConvergenceTable& t) {
    detail::write_convergence_table(os, c, t, "n");
}

struct TrajectoryDump {
    double hurst;
    double lambda;
    std::vector<double> times;
    std::vector<double> exact;
    std::vector<double> milstein;
};

/// One path with `steps` intervals: exp(B(t_i)) next to the Milstein approximation.
[[nodiscard]] inline TrajectoryDump milstein_trajectory(double hurst, double lambda, double horizon,
                                                        std::size_t steps, const RngSpec& rng) {
    const ModelParams p{hurst, lambda, 1, horizon};
    p.require_liftable();
    UniformPathGenerator gen(p, steps);
    const SamplePath path = gen.sample(rng);
    const auto traj = milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), RoughPathLift(path));
    TrajectoryDump d{hurst, lambda, path.partition().times(), exact_scalar_linear_trajectory(path), {}};
    for (Eigen::Index i = 0; i < traj.rows(); ++i) d.milstein.push_back(traj(i, 0));
    return d;
}

/// Trajectory for the config: H = 0.4 when listed, otherwise the first H.
[[nodiscard]] inline TrajectoryDump run_milstein_trajectory(const ExperimentConfig& c) {
    c.validate();
    std::size_t hi = 0;
    for (std::size_t i = 0; i < c.hurst.size(); ++i)
        if (c.hurst[i] == 0.4) hi = i;
    const std::size_t steps = c.steps ? c.steps : 100;
    return milstein_trajectory(c.hurst[hi], c.lambda.front(), c.horizon, steps,
                               RngSpec{c.seed, detail::kTrajectoryStream});
}

inline void write_trajectory_csv(std::ostream& os, const ExperimentConfig& c, const TrajectoryDump& d) {
    write_config_echo(os, c);
    os << "# trajectory H=" << d.hurst << " lambda=" << d.lambda << '\n';
    const auto old = os.precision(17);
    os << "t,exact,milstein\n";
    for (std::size_t i = 0; i < d.times.size(); ++i)
        os << d.times[i] << ',' << d.exact[i] << ',' << d.milstein[i] << '\n';
    os.precision(old);
}

// ---------------------------------------------------------------------------
// Signature features
// ---------------------------------------------------------------------------

struct SignatureFeatureRow {
    double hurst;
    double lambda;
    std::size_t path_id;
    double s1;
    double s2;
};

struct SignatureMoments {
    double hurst;
    double lambda;
    std::size_t n;
    double mean_s1, mean_s2;
    double var_s1, cov_s1s2, var_s2;
    double analytic_var_s1;
};

struct SignatureFeatures {
    std::vector<SignatureFeatureRow> rows;
    std::vector<SignatureMoments> moments;
    std::vector<TruncatedSignature> signatures;  // aligned with rows
};

/// (S1, S2) = (B(T), B(T)^2 / 2) of one-dimensional paths, plus per-cell moments.
[[nodiscard]] inline SignatureFeatures run_signature_features(const ExperimentConfig& c) {
    c.validate();
    detail::require(c.n_paths >= 2, "signature features need at least two paths");
    const int depth = std::max(2, c.depth);
    SignatureFeatures out;
    for (std::size_t hi = 0; hi < c.hurst.size(); ++hi) {
        for (double l : c.lambda) {
            const ModelParams p{c.hurst[hi], l, 1, c.horizon};
            UniformPathGenerator gen(p, c.steps ? c.steps : 256);
            const RngSpec rng = detail::cell_rng(c, hi);
            std::vector<double> s1, s2;
            for (std::size_t k = 0; k < c.n_paths; ++k) {
                auto sig = signature_truncated(RoughPathLift(gen.sample(rng.substream(k))), depth);
                s1.push_back(sig.level(1)[0]);
                s2.push_back(sig.level(2)[0]);
                out.rows.push_back({p.hurst, l, k, s1.back(), s2.back()});
                out.signatures.push_back(std::move(sig));
            }
            const double n = static_cast<double>(s1.size());
            SignatureMoments m{p.hurst, l, s1.size(), 0, 0, 0, 0, 0, variance(p, c.horizon)};
            for (std::size_t k = 0; k < s1.size(); ++k) {
                m.mean_s1 += s1[k] / n;
                m.mean_s2 += s2[k] / n;
            }
            for (std::size_t k = 0; k < s1.size(); ++k) {
                m.var_s1 += (s1[k] - m.mean_s1) * (s1[k] - m.mean_s1) / (n - 1);
                m.var_s2 += (s2[k] - m.mean_s2) * (s2[k] - m.mean_s2) / (n - 1);
                m.cov_s1s2 += (s1[k] - m.mean_s1) * (s2[k] - m.mean_s2) / (n - 1);
            }
            out.moments.push_back(m);
        }
    }
    return out;
}

inline void write_signature_features_csv(std::ostream& os, const ExperimentConfig& c, const SignatureFeatures& f) {
    write_config_echo(os, c);
    const auto old = os.precision(17);
    os << "H,lambda,path_id,S1,S2\n";
    for (const auto& r : f.rows) os << r.hurst << ',' << r.lambda << ',' << r.path_id << ',' << r.s1 << ',' << r.s2 << '\n';
    os.precision(old);
}

inline void write_signature_moments_csv(std::ostream& os, const ExperimentConfig& c, const SignatureFeatures& f) {
    write_config_echo(os, c);
    const auto old = os.precision(17);
    os << "H,lambda,n,mean_S1,mean_S2,var_S1,cov_S1S2,var_S2,analytic_var_S1\n";
    for (const auto& m : f.moments)
        os << m.hurst << ',' << m.lambda << ',' << m.n << ',' << m.mean_s1 << ',' << m.mean_s2 << ',' << m.var_s1
           << ',' << m.cov_s1s2 << ',' << m.var_s2 << ',' << m.analytic_var_s1 << '\n';
    os.precision(old);
}

/// Full signature dump: one row per path, columns `level:index...`.
inline void write_signature_dump_csv(std::ostream& os, const ExperimentConfig& c, const SignatureFeatures& f) {
    write_config_echo(os, c);
    if (f.signatures.empty()) return;
    const int dim = f.signatures.front().dim();
    const int depth = f.signatures.front().depth();
    os << "H,lambda,path_id";
    for (int k = 1; k <= depth; ++k) {
        const std::size_t size = f.signatures.front().level(k).size();
        for (std::size_t idx = 0; idx < size; ++idx) {
            os << ',' << k;
            std::vector<int> digits(static_cast<std::size_t>(k));
            std::size_t rest = idx;
            for (int pos = k - 1; pos >= 0; --pos) {
                digits[static_cast<std::size_t>(pos)] = static_cast<int>(rest % static_cast<std::size_t>(dim));
                rest /= static_cast<std::size_t>(dim);
            }
            for (int d : digits) os << ':' << d;
        }
    }
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
        os << f.rows[r].hurst << ',' << f.rows[r].lambda << ',' << f.rows[r].path_id;
        for (int k = 1; k <= depth; ++k)
            for (double v : f.signatures[r].level(k)) os << ',' << v;
        os << '\n';
    }
    os.precision(old);
}

// ---------------------------------------------------------------------------
// Covariance checks
// ---------------------------------------------------------------------------

struct DecompositionRow {
    double hurst;
    double lambda;
    DecompositionReport report;
};

struct RhoVariationRow {
    double hurst;
    double lambda;
    RhoVariationSweep sweep;
    double bound;
};

struct CovarianceCheck {
    std::vector<DecompositionRow> decomposition;
    std::vector<RhoVariationRow> rho_variation;

    [[nodiscard]] std::size_t total_violations() const {
        std::size_t n = 0;
        for (const auto& d : decomposition) n += d.report.violations.size();
        return n;
    }
};

/// rho-variation sweeps over dyadic depths 1..max_depth for every (H, lambda).
[[nodiscard]] inline std::vector<RhoVariationRow> run_rho_variation(const ExperimentConfig& c) {
    c.validate();
    std::vector<RhoVariationRow> out;
    for (double h : c.hurst) {
        const double rho = c.rho ? *c.rho : critical_rho(h);
        const auto fbm = dyadic_rho_variation(fbm_kernel(h), c.horizon, rho, c.max_depth);
        for (double l : c.lambda) {
            const ModelParams p{h, l, 1, c.horizon};
            auto sweep = dyadic_rho_variation(tfbm_kernel(p), c.horizon, rho, c.max_depth);
            const double bound = rho_variation_bound(p, rho, fbm.running_sup.back());
            out.push_back({h, l, std::move(sweep), bound});
        }
    }
    return out;
}

/// Decomposition bound check on a uniform grid with `steps + 1` points, plus the
/// rho-variation sweeps.
[[nodiscard]] inline CovarianceCheck run_covariance_check(const ExperimentConfig& c) {
    c.validate();
    CovarianceCheck out;
    const Partition grid = Partition::uniform(c.horizon, c.steps ? c.steps : 63);
    for (double h : c.hurst)
        for (double l : c.lambda)
            out.decomposition.push_back({h, l, verify_decomposition(ModelParams{h, l, 1, c.horizon}, grid)});
    out.rho_variation = run_rho_variation(c);
    return out;
}

inline void write_rho_variation_csv(std::ostream& os, const ExperimentConfig& c,
                                    const std::vector<RhoVariationRow>& rows, bool echo = true) {
    if (echo) write_config_echo(os, c);
    const auto old = os.precision(12);
    os << "H,lambda,rho,depth,value,running_sup,bound\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.sweep.depths.size(); ++i)
            os << r.hurst << ',' << r.lambda << ',' << r.sweep.rho << ',' << r.sweep.depths[i] << ','
               << r.sweep.values[i] << ',' << r.sweep.running_sup[i] << ',' << r.bound << '\n';
    for (const auto& r : rows)
        os << "# growth H=" << r.hurst << " lambda=" << r.lambda << " last_two_depths=" << r.sweep.final_relative_growth()
           << '\n';
    os.precision(old);
}

inline void write_covariance_check_csv(std::ostream& os, const ExperimentConfig& c, const CovarianceCheck& chk) {
    write_config_echo(os, c);
    const auto old = os.precision(12);
    os << "H,lambda,pairs,violations,max_gap,min_slack,max_slack\n";
    for (const auto& d : chk.decomposition)
        os << d.hurst << ',' << d.lambda << ',' << d.report.pairs_checked << ',' << d.report.violations.size() << ','
           << d.report.max_gap << ',' << d.report.min_slack << ',' << d.report.max_slack << '\n';
    os << "# total_violations=" << chk.total_violations() << '\n';
    os.precision(old);
}

}  // namespace tfbm
