#pragma once

// Exact simulation of tfBm on a grid.
//
// Uniform grids use circulant embedding of the stationary increment sequence
// (Davies-Harte / Wood-Chan); dense Cholesky of the path Gram matrix covers
// arbitrary grids and serves as the reference method.

#include "tfbm/covariance.hpp"
#include "tfbm/params.hpp"
#include "tfbm/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfbm {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A d-dimensional sample on a partition; row i holds B(t_i).
class SamplePath {
public:
    SamplePath(Partition partition, PathMatrix values)
        : partition_(std::move(partition)), values_(std::move(values)) {
        detail::require(static_cast<std::size_t>(values_.rows()) == partition_.size(),
                        "sample path rows must match the partition");
        detail::require(values_.cols() >= 1, "sample path needs at least one component");
    }

    [[nodiscard]] const Partition& partition() const noexcept { return partition_; }
    [[nodiscard]] const PathMatrix& values() const noexcept { return values_; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.cols()); }
    [[nodiscard]] std::size_t points() const noexcept { return partition_.size(); }
    [[nodiscard]] std::size_t intervals() const noexcept { return partition_.intervals(); }

    [[nodiscard]] Eigen::VectorXd at(std::size_t i) const { return values_.row(i).transpose(); }
    [[nodiscard]] Eigen::VectorXd increment(std::size_t i, std::size_t j) const {
        return (values_.row(j) - values_.row(i)).transpose();
    }

    /// Keep every `factor`-th grid point (same randomness, coarser grid).
    [[nodiscard]] SamplePath coarsen(std::size_t factor) const {
        Partition coarse = partition_.coarsen(factor);
        PathMatrix v(coarse.size(), values_.cols());
        for (std::size_t i = 0; i < coarse.size(); ++i) v.row(i) = values_.row(i * factor);
        return {std::move(coarse), std::move(v)};
    }

    /// Multiply every value by `a`.
    [[nodiscard]] SamplePath scaled(double a) const { return {partition_, values_ * a}; }

private:
    Partition partition_;
    PathMatrix values_;
};

/// gamma(k) = E[(B((i+1)h) - B(ih)) (B((i+k+1)h) - B((i+k)h))].
[[nodiscard]] inline double increment_autocovariance(const ModelParams& p, double step,
                                                     std::int64_t lag) {
    detail::require(step > 0.0, "increment_autocovariance: step must be positive");
    detail::require(lag >= 0, "increment_autocovariance: lag must be nonnegative");
    const double k = static_cast<double>(lag);
    return 0.5 * (variance(p, (k + 1.0) * step) + variance(p, std::abs(k - 1.0) * step) -
                  2.0 * variance(p, k * step));
}

enum class SimulationMethod { circulant, cholesky };

struct SimulationMeta {
    SimulationMethod method = SimulationMethod::circulant;
    bool fell_back = false;        // circulant embedding failed; Cholesky used instead
    std::size_t embedding_size = 0;
    double min_eigenvalue = 0.0;   // before clipping, relative to the largest one
    double clipped_mass = 0.0;     // sum of clipped negative eigenvalues, relative to the trace
    std::string warning;
};

struct PathBatch {
    std::vector<SamplePath> paths;
    SimulationMeta meta;
};

namespace detail {

class FftwBuffer {
public:
    explicit FftwBuffer(std::size_t n)
        : data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))), n_(n) {
        if (data_ == nullptr) throw std::bad_alloc();
    }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    ~FftwBuffer() { fftw_free(data_); }

    [[nodiscard]] fftw_complex* get() noexcept { return data_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    fftw_complex* data_;
    std::size_t n_;
};

/// Forward in-place complex DFT of fixed length.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : buffer_(n) {
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_.get(), buffer_.get(), FFTW_FORWARD,
                                 FFTW_ESTIMATE);
        if (plan_ == nullptr) throw SimulationError("FFTW plan creation failed");
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    ~FftPlan() { fftw_destroy_plan(plan_); }

    [[nodiscard]] fftw_complex* data() noexcept { return buffer_.get(); }
    [[nodiscard]] std::size_t size() const noexcept { return buffer_.size(); }
    void execute() { fftw_execute(plan_); }

private:
    FftwBuffer buffer_;
    fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// Circulant embedding of the increment autocovariance of a uniform grid.
///
/// Starts at size 2N and doubles (up to 16N) while an eigenvalue falls below
/// -1e-10 of the largest. Eigenvalues in [-1e-10 max, 0) are clipped to zero.
class CirculantEmbedding {
public:
    static constexpr double kNegativeTolerance = 1e-10;
    static constexpr double kClippedMassLimit = 1e-8;
    static constexpr std::size_t kMaxPadding = 16;

    CirculantEmbedding(const ModelParams& p, std::size_t n_steps)
        : n_steps_(n_steps), step_(p.horizon / static_cast<double>(n_steps)) {
        detail::require(n_steps >= 1, "n_steps must be at least 1");
        std::vector<double> gamma;
        for (std::size_t m = 2 * n_steps; m <= kMaxPadding * n_steps; m *= 2) {
            const std::size_t half = m / 2;
            while (gamma.size() <= half)
                gamma.push_back(increment_autocovariance(p, step_, static_cast<std::int64_t>(gamma.size())));
            if (try_embed(gamma, m)) return;
        }
        valid_ = false;
    }

    [[nodiscard]] bool valid() const noexcept { return valid_; }
    [[nodiscard]] std::size_t size() const noexcept { return eigenvalues_.size(); }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] double min_relative_eigenvalue() const noexcept { return min_relative_; }
    [[nodiscard]] double clipped_mass() const noexcept { return clipped_mass_; }

    /// sqrt(max(ev, 0) / M), the spectral weights used to colour white noise.
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

private:
    bool try_embed(const std::vector<double>& gamma, std::size_t m) {
        detail::FftPlan fft(m);
        auto* c = fft.data();
        for (std::size_t j = 0; j < m; ++j) {
            c[j][0] = gamma[std::min(j, m - j)];
            c[j][1] = 0.0;
        }
        fft.execute();
        eigenvalues_.assign(m, 0.0);
        double max_ev = 0.0;
        double trace = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            eigenvalues_[j] = c[j][0];
            max_ev = std::max(max_ev, c[j][0]);
            trace += std::abs(c[j][0]);
        }
        double min_ev = *std::min_element(eigenvalues_.begin(), eigenvalues_.end());
        min_relative_ = max_ev > 0.0 ? min_ev / max_ev : -1.0;
        if (min_relative_ < -kNegativeTolerance) return false;

        double clipped = 0.0;
        weights_.assign(m, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (eigenvalues_[j] < 0.0) clipped -= eigenvalues_[j];
            weights_[j] = std::sqrt(std::max(eigenvalues_[j], 0.0) / static_cast<double>(m));
        }
        clipped_mass_ = trace > 0.0 ? clipped / trace : 0.0;
        valid_ = clipped_mass_ <= kClippedMassLimit;
        return valid_;
    }

    std::size_t n_steps_;
    double step_;
    bool valid_ = false;
    std::vector<double> eigenvalues_;
    std::vector<double> weights_;
    double min_relative_ = 0.0;
    double clipped_mass_ = 0.0;
};

/// Draws paths from a valid embedding. Holds an FFT workspace, so one sampler per thread.
class CirculantSampler {
public:
    CirculantSampler(const ModelParams& p, std::shared_ptr<const CirculantEmbedding> embedding)
        : params_(p), embedding_(std::move(embedding)), fft_(embedding_->size()) {
        detail::require(embedding_->valid(), "circulant embedding is not valid");
    }

    CirculantSampler(const ModelParams& p, std::size_t n_steps)
        : CirculantSampler(p, std::make_shared<const CirculantEmbedding>(p, n_steps)) {}

    [[nodiscard]] const CirculantEmbedding& embedding() const noexcept { return *embedding_; }

    [[nodiscard]] SamplePath sample(const RngSpec& rng) {
        const std::size_t n = embedding_->n_steps();
        const std::size_t m = embedding_->size();
        const auto& w = embedding_->weights();
        NormalStream normal(rng);
        PathMatrix values = PathMatrix::Zero(n + 1, params_.dim);
        auto* buf = fft_.data();
        for (int comp = 0; comp < params_.dim; comp += 2) {
            for (std::size_t j = 0; j < m; ++j) {
                const double re = normal();
                const double im = normal();
                buf[j][0] = w[j] * re;
                buf[j][1] = w[j] * im;
            }
            fft_.execute();
            const bool pair = comp + 1 < params_.dim;
            for (std::size_t i = 0; i < n; ++i) {
                values(i + 1, comp) = values(i, comp) + buf[i][0];
                if (pair) values(i + 1, comp + 1) = values(i, comp + 1) + buf[i][1];
            }
        }
        return {Partition::uniform(params_.horizon, n), std::move(values)};
    }

private:
    ModelParams params_;
    std::shared_ptr<const CirculantEmbedding> embedding_;
    detail::FftPlan fft_;
};

/// Gram matrix [R(t_i, t_j)] over the nonzero grid points.
[[nodiscard]] inline Eigen::MatrixXd path_gram_matrix(const ModelParams& p, const Partition& grid) {
    const std::size_t n = grid.intervals();
    std::vector<double> var(n + 1);
    for (std::size_t i = 0; i <= n; ++i) var[i] = variance(p, grid[i]);
    Eigen::MatrixXd g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            g(i, j) = g(j, i) =
                0.5 * (var[i + 1] + var[j + 1] - variance(p, grid[j + 1] - grid[i + 1]));
    return g;
}

/// Lower Cholesky factor of the path Gram matrix, with up to three jitter retries.
class CholeskySampler {
public:
    CholeskySampler(const ModelParams& p, Partition grid) : params_(p), grid_(std::move(grid)) {
        const Eigen::MatrixXd gram = path_gram_matrix(p, grid_);
        const double scale = gram.diagonal().mean();
        double jitter = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            Eigen::MatrixXd a = gram;
            a.diagonal().array() += jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() == Eigen::Success) {
                factor_ = llt.matrixL();
                jitter_ = jitter;
                return;
            }
            jitter = jitter == 0.0 ? 1e-14 * scale : jitter * 100.0;
        }
        throw SimulationError("Cholesky factorisation failed: Gram matrix is not positive definite");
    }

    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] const Partition& grid() const noexcept { return grid_; }

    [[nodiscard]] SamplePath sample(const RngSpec& rng) const {
        const std::size_t n = grid_.intervals();
        NormalStream normal(rng);
        PathMatrix values = PathMatrix::Zero(n + 1, params_.dim);
        Eigen::VectorXd z(n);
        for (int comp = 0; comp < params_.dim; ++comp) {
            for (std::size_t i = 0; i < n; ++i) z[i] = normal();
            values.col(comp).tail(n) = factor_.triangularView<Eigen::Lower>() * z;
        }
        return {grid_, std::move(values)};
    }

private:
    ModelParams params_;
    Partition grid_;
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

/// O(N^2) per path; intended for N up to about 1024.
[[nodiscard]] inline PathBatch simulate_paths_cholesky(const ModelParams& p, const Partition& grid,
                                                       std::size_t n_paths, const RngSpec& rng) {
    p.validate();
    detail::require(n_paths >= 1, "n_paths must be at least 1");
    detail::require(std::abs(grid.horizon() - p.horizon) <= 1e-12 * p.horizon,
                    "grid must end at the model horizon");
    CholeskySampler sampler(p, grid);
    PathBatch batch;
    batch.meta.method = SimulationMethod::cholesky;
    batch.paths.reserve(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) batch.paths.push_back(sampler.sample(rng.substream(k)));
    return batch;
}

[[nodiscard]] inline PathBatch simulate_paths_cholesky(const ModelParams& p, std::size_t n_steps,
                                                       std::size_t n_paths, const RngSpec& rng) {
    detail::require(n_steps >= 1, "n_steps must be at least 1");
    return simulate_paths_cholesky(p, Partition::uniform(p.horizon, n_steps), n_paths, rng);
}

/// Uniform-grid sampler: circulant embedding when valid, Cholesky otherwise.
class UniformPathGenerator {
public:
    UniformPathGenerator(const ModelParams& p, std::size_t n_steps) {
        p.validate();
        detail::require(n_steps >= 1, "n_steps must be at least 1");
        auto embedding = std::make_shared<const CirculantEmbedding>(p, n_steps);
        meta_.embedding_size = embedding->size();
        meta_.min_eigenvalue = embedding->min_relative_eigenvalue();
        meta_.clipped_mass = embedding->clipped_mass();
        if (embedding->valid()) {
            circulant_.emplace(p, std::move(embedding));
        } else {
            cholesky_.emplace(p, Partition::uniform(p.horizon, n_steps));
            meta_.method = SimulationMethod::cholesky;
            meta_.fell_back = true;
            meta_.warning = "circulant embedding invalid after maximal padding; used Cholesky";
        }
    }

    [[nodiscard]] const SimulationMeta& meta() const noexcept { return meta_; }

    [[nodiscard]] SamplePath sample(const RngSpec& rng) {
        return circulant_ ? circulant_->sample(rng) : cholesky_->sample(rng);
    }

private:
    SimulationMeta meta_;
    std::optional<CirculantSampler> circulant_;
    std::optional<CholeskySampler> cholesky_;
};

/// Exact simulation on the uniform grid with n_steps intervals over [0, horizon].
/// Path k uses rng.substream(k).
[[nodiscard]] inline PathBatch simulate_paths(const ModelParams& p, std::size_t n_steps,
                                              std::size_t n_paths, const RngSpec& rng) {
    detail::require(n_paths >= 1, "n_paths must be at least 1");
    UniformPathGenerator gen(p, n_steps);
    PathBatch batch;
    batch.meta = gen.meta();
    batch.paths.reserve(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) batch.paths.push_back(gen.sample(rng.substream(k)));
    return batch;
}

/// CSV with header `t,comp0,comp1,...`, one row per grid point.
inline void write_path_csv(std::ostream& os, const SamplePath& path) {
    os << "t";
    for (int k = 0; k < path.dim(); ++k) os << ",comp" << k;
    os << '\n';
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < path.points(); ++i) {
        os << path.partition()[i];
        for (int k = 0; k < path.dim(); ++k) os << ',' << path.values()(i, k);
        os << '\n';
    }
    os.precision(old_precision);
}

/// Raw little-endian float64, row-major, (N+1) x dim values only (no header).
inline void write_path_binary(std::ostream& os, const SamplePath& path) {
    static_assert(std::endian::native == std::endian::little, "binary dump assumes little-endian");
    const auto& v = path.values();
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}

}  // namespace tfbm
