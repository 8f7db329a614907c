#ifndef RACLORA_RANDOM_HPP
#define RACLORA_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace raclora {

// Seeded random source owned by exactly one sampler at a time.
//
// Child streams are derived from (seed, keys...) through std::seed_seq, so a
// run can hand out independent, reproducible streams per round or client
// without touching the parent's state.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, {}) {}

    RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) : seed_(seed) {
        std::seed_seq seq = seed_sequence(seed, keys);
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }

    double normal() { return normal_(engine_); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double rademacher() { return (engine_() & 1u) ? 1.0 : -1.0; }

    // Uniform random permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(i)]);
        return p;
    }

    // k distinct values from 0..n-1, in draw order (partial Fisher-Yates).
    std::vector<std::size_t> choose(std::size_t n, std::size_t k) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) std::swap(p[i], p[i + index(n - i)]);
        p.resize(k);
        return p;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    static std::seed_seq seed_sequence(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                         static_cast<std::uint32_t>(seed >> 32),
                                         static_cast<std::uint32_t>(keys.size())};
        for (auto k : keys) {
            words.push_back(static_cast<std::uint32_t>(k));
            words.push_back(static_cast<std::uint32_t>(k >> 32));
        }
        return std::seed_seq(words.begin(), words.end());
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Tags that keep derived streams for different purposes apart.
namespace stream_tag {
inline constexpr std::uint64_t permutation = 0x7065726dULL;  // "perm"
inline constexpr std::uint64_t cohort = 0x636f6872ULL;       // "cohr"
inline constexpr std::uint64_t sampler = 0x73616d70ULL;      // "samp"
}  // namespace stream_tag

}  // namespace raclora

#endif  // RACLORA_RANDOM_HPP
