#pragma once

#include <cstdint>

namespace reachcert {

/// splitmix64 finalizer (Vigna 2015, public domain). Full-avalanche mix used
/// as the core of the counter-based generator below.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based, splittable random stream. A stream is just a 64-bit key;
/// `split(s)` derives an independent child stream and `uniform(c)` reads the
/// value at counter c without mutating anything. Because every draw is
/// addressed by (key, counter), parallel workers can evaluate any sample in
/// any order and still produce the exact sequence a serial run would.
class StreamRng {
  public:
    explicit StreamRng(std::uint64_t seed) : key_(mix64(seed)) {}

    StreamRng split(std::uint64_t stream) const {
        return StreamRng(FromKey{}, mix64(key_ ^ mix64(stream ^ 0xa5a5a5a5a5a5a5a5ull)));
    }

    std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ (counter * 0xd1342543de82ef95ull)); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform(std::uint64_t counter) const { return double(bits(counter) >> 11) * 0x1.0p-53; }

    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + uniform(counter) * (hi - lo);
    }

    std::uint64_t key() const { return key_; }

  private:
    struct FromKey {};
    StreamRng(FromKey, std::uint64_t key) : key_(key) {}
    std::uint64_t key_;
};

}  // namespace reachcert
