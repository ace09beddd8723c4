#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfbm {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace detail

/// Parameters of a d-dimensional tempered fractional Brownian motion on [0, horizon].
///
/// Components are independent copies of the one-dimensional process.
struct ModelParams {
    double hurst = 0.5;
    double lambda = 1.0;
    int dim = 1;
    double horizon = 1.0;

    ModelParams() = default;
    ModelParams(double hurst_, double lambda_, int dim_ = 1, double horizon_ = 1.0)
        : hurst(hurst_), lambda(lambda_), dim(dim_), horizon(horizon_) {
        validate();
    }

    void validate() const {
        detail::require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0,1)");
        detail::require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
        detail::require(dim >= 1, "dim must be at least 1");
        detail::require(horizon > 0.0 && std::isfinite(horizon), "horizon must be positive");
    }

    /// Level-2 constructions exist only above the H = 1/4 threshold.
    void require_liftable() const {
        validate();
        detail::require(hurst > 0.25, "rough path lift requires hurst > 1/4");
    }
};

/// Ordered time grid 0 = t_0 < t_1 < ... < t_N = T.
class Partition {
public:
    explicit Partition(std::vector<double> times) : times_(std::move(times)) {
        detail::require(times_.size() >= 2, "partition needs at least two points");
        detail::require(times_.front() == 0.0, "partition must start at 0");
        mesh_ = 0.0;
        for (std::size_t i = 1; i < times_.size(); ++i) {
            const double gap = times_[i] - times_[i - 1];
            detail::require(gap > 0.0, "partition times must be strictly increasing");
            mesh_ = std::max(mesh_, gap);
        }
    }

    static Partition uniform(double horizon, std::size_t intervals) {
        detail::require(intervals >= 1, "uniform partition needs at least one interval");
        detail::require(horizon > 0.0, "horizon must be positive");
        std::vector<double> t(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i)
            t[i] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
        t.back() = horizon;
        return Partition(std::move(t));
    }

    /// Uniform partition with 2^depth intervals.
    static Partition dyadic(double horizon, int depth) {
        detail::require(depth >= 0 && depth < 31, "dyadic depth out of range");
        return uniform(horizon, std::size_t{1} << depth);
    }

    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] double operator[](std::size_t i) const { return times_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] std::size_t intervals() const noexcept { return times_.size() - 1; }
    [[nodiscard]] double horizon() const noexcept { return times_.back(); }
    [[nodiscard]] double mesh() const noexcept { return mesh_; }
    [[nodiscard]] double step(std::size_t i) const { return times_[i + 1] - times_[i]; }

    /// True when every gap equals T/N up to rounding.
    [[nodiscard]] bool is_uniform(double rel_tol = 1e-9) const {
        const double h = horizon() / static_cast<double>(intervals());
        for (std::size_t i = 0; i < intervals(); ++i)
            if (std::abs(step(i) - h) > rel_tol * h) return false;
        return true;
    }

    /// Keep every `factor`-th point. The number of intervals must be divisible by `factor`.
    [[nodiscard]] Partition coarsen(std::size_t factor) const {
        detail::require(factor >= 1 && intervals() % factor == 0,
                        "coarsening factor must divide the number of intervals");
        std::vector<double> t;
        t.reserve(intervals() / factor + 1);
        for (std::size_t i = 0; i < times_.size(); i += factor) t.push_back(times_[i]);
        return Partition(std::move(t));
    }

private:
    std::vector<double> times_;
    double mesh_ = 0.0;
};

}  // namespace tfbm
