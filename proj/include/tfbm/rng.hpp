#pragma once

#include <cstdint>
#include <random>

namespace tfbm {

/// Seed plus substream index. Path k of a batch drawn with RngSpec{seed, s}
/// uses substream s + k, so batches can be split without changing any path.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    [[nodiscard]] RngSpec substream(std::uint64_t offset) const { return {seed, stream + offset}; }
};

/// Gaussian source for one substream.
class NormalStream {
public:
    explicit NormalStream(const RngSpec& spec) : engine_(make_engine(spec)) {}

    double operator()() { return normal_(engine_); }

private:
    static std::mt19937_64 make_engine(const RngSpec& spec) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                          static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(spec.stream),
                          static_cast<std::uint32_t>(spec.stream >> 32), 0x7466626du};
        return std::mt19937_64(seq);
    }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tfbm
