#include "support/oracles.hpp"
#include "tfbm/rde.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using tfbm::ModelParams;
using tfbm::RngSpec;
using tfbm::VectorField;

namespace {

/// f(y) = [[sin y0, cos y1], [y0 y1 / (1 + y0^2), 1]], a smooth nonlinear field on R^2 driven by R^2.
VectorField nonlinear_field() {
    VectorField vf;
    vf.state_dim = 2;
    vf.noise_dim = 2;
    vf.f = [](const Eigen::VectorXd& y) {
        Eigen::MatrixXd m(2, 2);
        m << std::sin(y[0]), std::cos(y[1]), y[0] * y[1] / (1.0 + y[0] * y[0]), 1.0;
        return m;
    };
    vf.jacobian = [](const Eigen::VectorXd& y) {
        const double q = 1.0 + y[0] * y[0];
        Eigen::MatrixXd d0(2, 2), d1(2, 2);
        d0 << std::cos(y[0]), 0.0, y[1] * (1.0 - y[0] * y[0]) / (q * q), 0.0;
        d1 << 0.0, -std::sin(y[1]), y[0] / q, 0.0;
        return std::vector<Eigen::MatrixXd>{d0, d1};
    };
    return vf;
}

tfbm::SamplePath one_dim_path(double hurst, std::size_t n, std::uint64_t seed) {
    return tfbm::simulate_paths(ModelParams{hurst, 1.0, 1, 1.0}, n, 1, RngSpec{seed, 0}).paths.front();
}

}  // namespace

TEST_CASE("Jacobian consistency", "[rde]") {
    CHECK(tfbm::jacobian_check_random(nonlinear_field(), 10, 1) < 1e-5);
    CHECK(tfbm::jacobian_check_random(VectorField::scalar_linear(), 10, 2) < 1e-5);
    std::vector<Eigen::MatrixXd> a{Eigen::MatrixXd::Random(3, 3), Eigen::MatrixXd::Random(3, 3)};
    CHECK(tfbm::jacobian_check_random(VectorField::linear(a), 10, 3) < 1e-5);

    auto wrong = nonlinear_field();
    wrong.jacobian = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2));
    };
    CHECK(tfbm::jacobian_check_random(wrong, 10, 1) > 1e-2);
}

TEST_CASE("zero and constant fields", "[rde]") {
    const auto path = tfbm::simulate_paths(ModelParams{0.4, 1.0, 2, 1.0}, 64, 1, RngSpec{1, 0}).paths.front();
    const tfbm::RoughPathLift lift(path);
    Eigen::VectorXd y0(3);
    y0 << 1.0, -2.0, 0.5;

    const auto zero = tfbm::milstein_solve(VectorField::constant(Eigen::MatrixXd::Zero(3, 2)), y0, lift);
    REQUIRE(zero.rows() == 65);
    for (Eigen::Index i = 0; i < zero.rows(); ++i) CHECK(zero.row(i).transpose() == y0);

    const Eigen::MatrixXd sigma = Eigen::MatrixXd::Random(3, 2);
    const auto add = tfbm::milstein_solve(VectorField::constant(sigma), y0, lift);
    const Eigen::VectorXd expected = y0 + sigma * path.increment(0, 64);
    CHECK((add.row(64).transpose() - expected).norm() < 1e-13);
}

TEST_CASE("scalar linear step", "[rde]") {
    const auto path = oracle::make_path({{0.0}, {0.3}, {-0.1}});
    const auto y = tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Constant(1, 2.0),
                                        tfbm::RoughPathLift(path));
    const double y1 = 2.0 * (1.0 + 0.3 + 0.5 * 0.09);
    CHECK_THAT(y(1, 0), WithinRel(y1, 1e-15));
    CHECK_THAT(y(2, 0), WithinRel(y1 * (1.0 - 0.4 + 0.5 * 0.16), 1e-15));
}

TEST_CASE("linear system against the matrix exponential on a smooth driver", "[rde]") {
    // commuting fields: Y_T = exp(A0 x0 + A1 x1) y0 for a C^1 driver
    Eigen::MatrixXd a0(2, 2), a1(2, 2);
    a0 << 0.3, 0.0, 0.0, -0.2;
    a1 << 0.1, 0.0, 0.0, 0.4;
    const auto vf = VectorField::linear({a0, a1});
    const std::size_t n = 4000;
    const auto grid = tfbm::Partition::uniform(1.0, n);
    tfbm::PathMatrix v(n + 1, 2);
    for (std::size_t i = 0; i <= n; ++i) v.row(static_cast<Eigen::Index>(i)) << std::sin(grid[i]), grid[i] * grid[i];
    const auto y = tfbm::milstein_solve(vf, Eigen::Vector2d(1.0, 1.0), tfbm::RoughPathLift({grid, v}));
    const double x0 = std::sin(1.0), x1 = 1.0;
    CHECK_THAT(y(n, 0), WithinRel(std::exp(0.3 * x0 + 0.1 * x1), 1e-7));
    CHECK_THAT(y(n, 1), WithinRel(std::exp(-0.2 * x0 + 0.4 * x1), 1e-7));
}

TEST_CASE("exact scalar oracle", "[rde]") {
    CHECK(tfbm::exact_scalar_linear(oracle::make_path({{0.0}, {0.0}, {0.0}})) == 1.0);
    CHECK_THAT(tfbm::exact_scalar_linear(oracle::make_path({{0.0}, {0.5}, {-0.25}})), WithinRel(std::exp(-0.25), 1e-15));
    CHECK_THROWS_AS(tfbm::exact_scalar_linear(oracle::make_path({{0.0, 0.0}, {1.0, 1.0}})), tfbm::DomainError);
    const auto traj = tfbm::exact_scalar_linear_trajectory(oracle::make_path({{0.0}, {0.5}, {-0.25}}));
    REQUIRE(traj.size() == 3);
    CHECK_THAT(traj[1], WithinRel(std::exp(0.5), 1e-15));
}

TEST_CASE("Milstein on a smooth driver converges to exp(B(T))", "[rde]") {
    const auto path = oracle::sample_function([](double t) { return std::sin(t); }, 1.0, 10000);
    const auto y = tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), tfbm::RoughPathLift(path));
    CHECK_THAT(y(10000, 0), WithinAbs(std::exp(std::sin(1.0)), 1e-6));
}

TEST_CASE("one-step residual is third order on a smooth driver", "[rde]") {
    // residual of one Milstein step from t = 0 against exp(sin h)
    auto residual = [](double h) {
        const auto path = oracle::make_path({{0.0}, {std::sin(h)}}, h);
        const auto y = tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), tfbm::RoughPathLift(path));
        return std::abs(y(1, 0) - std::exp(std::sin(h)));
    };
    for (double h : {0.1, 0.05, 0.025}) CHECK_THAT(residual(h) / residual(h / 2), WithinRel(8.0, 0.1));
}

TEST_CASE("divergence is reported with its step", "[rde]") {
    VectorField blow;
    blow.f = [](const Eigen::VectorXd& y) { return Eigen::MatrixXd::Constant(1, 1, y[0] * y[0] * 1e150); };
    blow.jacobian = [](const Eigen::VectorXd& y) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, 2e150 * y[0])};
    };
    const auto path = oracle::make_path({{0.0}, {1.0}, {2.0}, {3.0}});
    try {
        (void)tfbm::milstein_solve(blow, Eigen::VectorXd::Ones(1), tfbm::RoughPathLift(path));
        FAIL("expected a divergence error");
    } catch (const tfbm::DivergenceError& e) {
        CHECK(e.step() <= 2);
    }
}

TEST_CASE("solver determinism and dimension checks", "[rde]") {
    const auto path = tfbm::simulate_paths(ModelParams{0.45, 1.0, 2, 1.0}, 128, 1, RngSpec{3, 0}).paths.front();
    const tfbm::RoughPathLift lift(path);
    const auto a = tfbm::milstein_solve(nonlinear_field(), Eigen::Vector2d(0.1, 0.2), lift);
    const auto b = tfbm::milstein_solve(nonlinear_field(), Eigen::Vector2d(0.1, 0.2), lift);
    CHECK(a == b);
    CHECK_THROWS_AS(tfbm::milstein_solve(nonlinear_field(), Eigen::VectorXd::Ones(3), lift), tfbm::DomainError);
    CHECK_THROWS_AS(tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), lift), tfbm::DomainError);
}

TEST_CASE("strong error with constant field is zero", "[rde]") {
    const ModelParams p{0.4, 1.0, 2, 1.0};
    const auto vf = VectorField::constant(Eigen::MatrixXd::Ones(1, 2));
    const auto r = tfbm::strong_error(p, vf, Eigen::VectorXd::Zero(1), {8, 16, 32}, 20, RngSpec{1, 0});
    for (double e : r.errors) CHECK(e < 1e-13);
}

TEST_CASE("strong error report", "[rde]") {
    const ModelParams p{0.45, 1.0, 1, 1.0};
    const auto r = tfbm::strong_error(p, VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), {16, 32, 64, 128}, 100,
                                      RngSpec{2, 0}, tfbm::scalar_linear_reference());
    REQUIRE(r.errors.size() == 4);
    CHECK(r.errors.front() > r.errors.back());
    CHECK(r.slope < 0.0);
    CHECK(r.n_mc == 100);
    std::ostringstream os;
    tfbm::write_convergence_csv(os, r);
    const std::string s = os.str();
    CHECK(s.rfind("n,error,stderr\n16,", 0) == 0);
    CHECK(s.find("\n# slope=") != std::string::npos);

    // nonlinear equation against the self-convergence reference
    const auto nl = tfbm::strong_error(ModelParams{0.45, 1.0, 2, 1.0}, nonlinear_field(), Eigen::Vector2d(0.1, 0.2),
                                       {8, 16, 32}, 30, RngSpec{3, 0});
    CHECK(nl.errors.front() > nl.errors.back());

    CHECK_THROWS_AS(tfbm::strong_error(p, VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), {16, 32}, 10, RngSpec{}),
                    tfbm::DomainError);
    CHECK_THROWS_AS(tfbm::strong_error(p, VectorField::scalar_linear(), Eigen::VectorXd::Ones(1), {16, 24, 32}, 10,
                                       RngSpec{}),
                    tfbm::DomainError);
}

TEST_CASE("coupled resolutions on a fixed path", "[rde]") {
    // logged, not asserted: pathwise differences need not shrink monotonically
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto fine = one_dim_path(0.4, 1024, seed);
        double prev = 1e300;
        for (std::size_t n = 16; n <= 512; n *= 2) {
            const auto a = tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1),
                                                tfbm::RoughPathLift(fine.coarsen(1024 / n)));
            const auto b = tfbm::milstein_solve(VectorField::scalar_linear(), Eigen::VectorXd::Ones(1),
                                                tfbm::RoughPathLift(fine.coarsen(512 / n)));
            const double d = std::abs(a(a.rows() - 1, 0) - b(b.rows() - 1, 0));
            if (d >= prev) WARN("seed " << seed << ": |Y(n) - Y(2n)| did not decrease at n=" << n);
            prev = d;
        }
    }
    SUCCEED();
}

TEST_CASE("Young and rough sums", "[young]") {
    const auto path = one_dim_path(0.7, 256, 4);
    const tfbm::RoughPathLift lift(path);
    const double bt = path.values()(256, 0);
    CHECK_THAT(tfbm::rough_integral(lift, tfbm::OneForm::identity(1)), WithinRel(0.5 * bt * bt, 1e-12));

    Eigen::VectorXd c(1);
    c << 2.5;
    CHECK_THAT(tfbm::young_integral(path, tfbm::OneForm::constant(c)), WithinRel(2.5 * bt, 1e-12));
    CHECK_THAT(tfbm::rough_integral(lift, tfbm::OneForm::constant(c)), WithinRel(2.5 * bt, 1e-12));

    const auto r = tfbm::young_vs_rough_compare(ModelParams{0.7, 1.0, 1, 1.0}, tfbm::OneForm::identity(1),
                                                {64, 128, 256, 512}, 50, RngSpec{5, 0});
    CHECK(r.monotone_decreasing);
    CHECK(r.observed_rate > 0.0);
    CHECK_THROWS_AS(tfbm::young_vs_rough_compare(ModelParams{0.5, 1.0, 1, 1.0}, tfbm::OneForm::identity(1),
                                                 {64, 128, 256}, 10, RngSpec{}),
                    tfbm::DomainError);
}
