// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any
// criterion fails. `--fast` uses 200 Monte Carlo replicas and widens slope
// tolerances by 0.05.

#include "support/oracles.hpp"
#include "tfbm/tfbm.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

bool g_fast = false;

std::size_t mc() { return g_fast ? tfbm::kFastMonteCarlo : tfbm::kDefaultMonteCarlo; }
double widen() { return g_fast ? tfbm::kFastToleranceWidening : 0.0; }

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

Outcome levy_rate() {
    auto c = tfbm::ExperimentConfig::defaults(tfbm::Experiment::levy_convergence);
    c.lambda = {1.0};
    c.n_mc = mc();
    const auto t = tfbm::run_levy_convergence(c);
    const double tol = 0.15 + widen();
    bool ok = true;
    std::string d;
    for (double h : c.hurst) {
        const auto& s = t.slope_for(h, 1.0);
        const bool cell = std::abs(s.fit.slope - s.theoretical) <= tol;
        ok = ok && cell;
        d += "H=" + fmt(h) + " slope=" + fmt(s.fit.slope) + " (target " + fmt(s.theoretical) + "+-" + fmt(tol) + ")" +
             (cell ? "" : "*") + "; ";
    }
    return {ok, d};
}

Outcome lambda_ordering() {
    auto c = tfbm::ExperimentConfig::defaults(tfbm::Experiment::levy_convergence);
    c.hurst = {0.4};
    c.n_mc = mc();
    const auto t = tfbm::run_levy_convergence(c);
    const auto e01 = t.errors_for(0.4, 0.1), e1 = t.errors_for(0.4, 1.0), e10 = t.errors_for(0.4, 10.0);
    bool ok = true;
    std::size_t checked = 0;
    double worst = 0.0;  // largest ratio e(lambda_hi) / e(lambda_lo)
    for (std::size_t i = 0; i < c.resolutions.size(); ++i) {
        if (c.resolutions[i] < 128) continue;
        ++checked;
        ok = ok && e10[i] < e1[i] && e1[i] < e01[i];
        worst = std::max({worst, e10[i] / e1[i], e1[i] / e01[i]});
    }
    return {ok, std::to_string(checked) + " resolutions N>=128, max ratio e(larger lambda)/e(smaller lambda)=" + fmt(worst) +
                    ", e(N=4096): " + fmt(e01.back()) + " > " + fmt(e1.back()) + " > " + fmt(e10.back())};
}

Outcome milstein_rate() {
    auto c = tfbm::ExperimentConfig::defaults(tfbm::Experiment::milstein_convergence);
    c.hurst = {0.3, 0.7};
    c.n_mc = mc();
    const auto t = tfbm::run_milstein_convergence(c);
    const double tol = 0.15 + widen();
    bool ok = true;
    std::string d;
    for (double h : c.hurst) {
        const auto& s = t.slope_for(h, 1.0);
        const bool cell = std::abs(s.fit.slope - s.theoretical) <= tol;
        ok = ok && cell;
        d += "H=" + fmt(h) + " slope=" + fmt(s.fit.slope) + "+-" + fmt(s.fit.slope_stderr, 2) + " (target " +
             fmt(s.theoretical) + "+-" + fmt(tol) + ")" + (cell ? "" : "*") + "; ";
    }
    return {ok, d};
}

Outcome decomposition() {
    auto c = tfbm::ExperimentConfig::defaults(tfbm::Experiment::covariance_check);
    const auto grid = tfbm::Partition::uniform(1.0, 63);
    std::size_t total = 0;
    std::string d;
    for (double h : c.hurst)
        for (double l : c.lambda) {
            const auto r = tfbm::verify_decomposition(tfbm::ModelParams{h, l, 1, 1.0}, grid);
            total += r.violations.size();
            if (!r.ok()) d += "(" + fmt(h) + "," + fmt(l) + "):" + std::to_string(r.violations.size()) + " ";
        }
    return {total == 0, std::to_string(total) + " violations over 12 cells x 4096 pairs" + (d.empty() ? "" : "; " + d)};
}

Outcome rho_variation() {
    bool ok = true;
    std::string d;
    for (double h : {0.3, 0.5, 0.7}) {
        const tfbm::ModelParams p{h, 1.0, 1, 1.0};
        const double rho = tfbm::critical_rho(h);
        const auto sweep = tfbm::dyadic_rho_variation(tfbm::tfbm_kernel(p), 1.0, rho, 10);
        const double g = sweep.final_relative_growth();
        ok = ok && g < 0.02;
        d += "H=" + fmt(h) + " rho=" + fmt(rho) + " growth=" + fmt(g, 3) + "; ";
    }
    return {ok, d};
}

Outcome chen_geometric() {
    const auto batch = tfbm::simulate_paths(tfbm::ModelParams{0.4, 1.0, 2, 1.0}, 64, 100, tfbm::RngSpec{101, 0});
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<std::size_t> u(0, 64);
    double chen = 0.0, sym = 0.0, area = 0.0;
    for (const auto& path : batch.paths) {
        const tfbm::RoughPathLift lift(path);
        for (int trial = 0; trial < 50; ++trial) {
            std::size_t idx[3] = {u(gen), u(gen), u(gen)};
            std::sort(idx, idx + 3);
            if (idx[0] == idx[2]) continue;
            const Eigen::MatrixXd direct = lift.level2_by_recursion(idx[0], idx[2]);
            const Eigen::MatrixXd composed = tfbm::chen_compose(lift, idx[0], idx[1], idx[2]);
            chen = std::max(chen, (composed - direct).norm() / direct.norm());
            const Eigen::VectorXd dx = lift.increment(idx[0], idx[2]);
            sym = std::max(sym, (tfbm::symmetric_part(direct) - 0.5 * dx * dx.transpose()).norm());
            std::vector<double> x, y;
            for (std::size_t k = idx[0]; k <= idx[2]; ++k) {
                x.push_back(path.values()(static_cast<Eigen::Index>(k), 0));
                y.push_back(path.values()(static_cast<Eigen::Index>(k), 1));
            }
            area = std::max(area, std::abs(tfbm::antisymmetric_part(lift.level2(idx[0], idx[2]))(0, 1) -
                                           oracle::shoelace_area(x, y)));
        }
    }
    const auto one = tfbm::simulate_paths(tfbm::ModelParams{0.4, 1.0, 1, 1.0}, 64, 100, tfbm::RngSpec{102, 0});
    double dim1 = 0.0;
    for (const auto& path : one.paths) {
        const double bt = path.values()(64, 0);
        dim1 = std::max(dim1, std::abs(tfbm::RoughPathLift(path).level2(0, 64)(0, 0) - 0.5 * bt * bt) / (0.5 * bt * bt));
    }
    const bool ok = chen < 1e-12 && sym < 1e-12 && area < 1e-12 && dim1 < 1e-12;
    return {ok, "chen rel=" + fmt(chen, 2) + " sym=" + fmt(sym, 2) + " shoelace=" + fmt(area, 2) +
                    " dim1 rel=" + fmt(dim1, 2) + " (all < 1e-12)"};
}

Outcome simulation_exactness() {
    double worst_z = 0.0;
    for (double h : {0.3, 0.7}) {
        const tfbm::ModelParams p{h, 1.0, 1, 1.0};
        const std::size_t n = 16, m = 20000;
        const auto batch = tfbm::simulate_paths(p, n, m, tfbm::RngSpec{201, 0});
        const Eigen::MatrixXd g = tfbm::path_gram_matrix(p, batch.paths.front().partition());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double s = 0.0, s2 = 0.0;
                for (const auto& path : batch.paths) {
                    const double prod = path.values()(static_cast<Eigen::Index>(i + 1), 0) *
                                        path.values()(static_cast<Eigen::Index>(j + 1), 0);
                    s += prod;
                    s2 += prod * prod;
                }
                const double mean = s / m;
                const double se = std::sqrt((s2 / m - mean * mean) / m);
                worst_z = std::max(worst_z, std::abs(mean - g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) / se);
            }
    }
    const tfbm::ModelParams p{0.4, 1.0, 1, 1.0};
    const auto circ = tfbm::simulate_paths(p, 64, 10000, tfbm::RngSpec{202, 0});
    const auto chol = tfbm::simulate_paths_cholesky(p, 64, 10000, tfbm::RngSpec{203, 0});
    std::vector<double> a, b;
    for (const auto& x : circ.paths) a.push_back(x.values()(64, 0));
    for (const auto& x : chol.paths) b.push_back(x.values()(64, 0));
    const double pval = oracle::ks_pvalue(oracle::ks_statistic(a, b), a.size(), b.size());
    return {worst_z < 4.0 && pval > 0.01,
            "max Gram z-score=" + fmt(worst_z, 3) + " (< 4), KS p-value circulant vs Cholesky=" + fmt(pval, 3) + " (> 0.01)"};
}

Outcome signature_properties() {
    // moment scaling; lambda = 0.1 keeps lambda T small so the exponent is kH
    const std::vector<double> ts{0.25, 0.5, 1.0};
    std::vector<double> m1, m2;
    for (double t : ts) {
        const auto r = tfbm::factorial_decay_check(tfbm::ModelParams{0.4, 0.1, 2, t}, 2, mc() * 2, tfbm::RngSpec{301, 0}, 64);
        m1.push_back(r.rms[0]);
        m2.push_back(r.rms[1]);
    }
    const double s1 = tfbm::loglog_fit(ts, m1).slope, s2 = tfbm::loglog_fit(ts, m2).slope;
    const bool scaling = std::abs(s1 - 0.4) <= 0.1 && std::abs(s2 - 0.8) <= 0.1;

    // dim 1: error of level k against (dB)^k / k!, in units of the rounding scale
    // (sum |dB_i|)^k / k! of the Chen products that produce it
    double dim1 = 0.0;
    for (const auto& path : tfbm::simulate_paths(tfbm::ModelParams{0.4, 1.0, 1, 1.0}, 64, 100, tfbm::RngSpec{302, 0}).paths) {
        const auto sig = tfbm::signature_truncated(path, 8);
        const double d = path.values()(64, 0);
        double tv = 0.0;
        for (std::size_t i = 0; i < 64; ++i) tv += std::abs(path.increment(i, i + 1)[0]);
        double expected = 1.0, scale = 1.0;
        for (int k = 1; k <= 8; ++k) {
            expected *= d / k;
            scale *= tv / k;
            dim1 = std::max(dim1, std::abs(sig.level(k)[0] - expected) / scale);
        }
    }

    double lvl3 = 0.0;
    std::vector<tfbm::SamplePath> paths{oracle::make_path({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}})};
    for (auto& p : tfbm::simulate_paths(tfbm::ModelParams{0.4, 1.0, 2, 1.0}, 32, 20, tfbm::RngSpec{303, 0}).paths)
        paths.push_back(std::move(p));
    for (const auto& path : paths) {
        const auto sig = tfbm::signature_truncated(path, 3);
        const auto incs = oracle::increments_of(path);
        for (std::size_t idx = 0; idx < 8; ++idx) {
            const std::vector<int> word{static_cast<int>(idx >> 2 & 1), static_cast<int>(idx >> 1 & 1), static_cast<int>(idx & 1)};
            lvl3 = std::max(lvl3, std::abs(sig.level(3)[idx] - oracle::brute_force_signature(incs, word)));
        }
    }
    const bool ok = scaling && dim1 < 1e-12 && lvl3 < 1e-10;
    return {ok, "H=0.4 lambda=0.1 exponents k=1: " + fmt(s1, 3) + " k=2: " + fmt(s2, 3) + " (+-0.1); dim1 scaled err=" + fmt(dim1, 2) +
                    "; level-3 vs brute force=" + fmt(lvl3, 2)};
}

Outcome young_consistency() {
    const auto r = tfbm::young_vs_rough_compare(tfbm::ModelParams{0.7, 1.0, 1, 1.0}, tfbm::OneForm::identity(1),
                                                tfbm::ExperimentConfig::dyadic_range(6, 12), 100, tfbm::RngSpec{401, 0});
    const double last = r.mean_abs_difference.back();
    std::string d = "E|Young-rough| at N=64.." + std::to_string(r.resolutions.back()) + ": ";
    for (double v : r.mean_abs_difference) d += fmt(v, 3) + " ";
    d += "rate=" + fmt(r.observed_rate, 3) + (r.monotone_decreasing ? " monotone" : " NOT monotone") + ", final < 1e-3 required";
    return {r.monotone_decreasing && last < 1e-3, d};
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--fast") == 0) g_fast = true;

    const std::vector<Criterion> criteria = {
        {"levy-area-rate", levy_rate},
        {"lambda-prefactor-ordering", lambda_ordering},
        {"milstein-rate", milstein_rate},
        {"covariance-decomposition", decomposition},
        {"rho-variation-bounded", rho_variation},
        {"chen-geometric-suite", chen_geometric},
        {"simulation-exactness", simulation_exactness},
        {"signature-properties", signature_properties},
        {"young-consistency", young_consistency},
    };

    std::cout << "acceptance (" << (g_fast ? "fast, n_mc=200" : "n_mc=1000") << ")\n";
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << fmt(secs, 3) << "s] " << o.detail << '\n';
        std::cout.flush();
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
