#ifndef FPLAB_RNG_HPP
#define FPLAB_RNG_HPP

#include <cstdint>
#include <vector>

namespace fplab {

// Deterministic PRNG (xoshiro256** seeded via splitmix64). We avoid
// std::*_distribution because their outputs are implementation-defined;
// every draw here is reproducible across compilers and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Unbiased (Lemire's method).
    uint64_t uniform_int(uint64_t n) {
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            const uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform() * (b - a); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn without replacement from [0, n).
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(uniform_int(static_cast<uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// Sampler for Binomial(n, p) via an inverse-CDF table built once per (n, p).
// The table is computed mode-out so the recurrence never underflows near the
// mass of the distribution.
class BinomialSampler {
public:
    BinomialSampler(int n, double p);
    int sample(Rng& rng) const;
    double pmf(int k) const { return (k >= 0 && k <= n_) ? pmf_[static_cast<size_t>(k)] : 0.0; }

private:
    int n_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

}  // namespace fplab

#endif
