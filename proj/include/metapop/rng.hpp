#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace metapop {

// Counter-based random stream: every draw is a pure function of (key, counter),
// so replicated computations are bit-identical under any parallel schedule.
// The generator is the splitmix64 output function applied to key + k*phi.
class CounterRng {
  public:
    CounterRng() = default;
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    // Builds a stream keyed by a tuple of ids (seed, replicate, patch, ...).
    static CounterRng keyed(std::initializer_list<std::uint64_t> ids) {
        std::uint64_t k = 0x9e3779b97f4a7c15ull;
        for (std::uint64_t id : ids) k = mix64(k ^ mix64(id + 0x7f4a7c15ull));
        return CounterRng(k);
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ull * counter_++); }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace metapop
