#pragma once

#include <cstdint>

namespace sfalpha {

/// Counter-based splittable random stream. A stream is a value type fully
/// determined by (master_seed, path of child indices); distinct paths give
/// statistically independent substreams, and draws do not depend on which
/// thread performs them.
class SeededStream {
public:
    explicit SeededStream(std::uint64_t master_seed)
        : key_(mix(master_seed ^ 0x5851F42D4C957F2DULL)) {}

    /// Derive the substream identified by appending `index` to this
    /// stream's path.
    [[nodiscard]] SeededStream child(std::uint64_t index) const {
        return SeededStream(mix(key_ ^ mix(index + 0x9E3779B97F4A7C15ULL)), 0);
    }

    std::uint64_t next_u64() {
        return mix(key_ ^ mix(counter_++ + 0xD1B54A32D192ED03ULL));
    }

    /// Uniform draw in the open interval (0,1).
    double next_uniform() {
        const std::uint64_t z = next_u64() >> 11;
        const double u = static_cast<double>(z) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

private:
    SeededStream(std::uint64_t key, int) : key_(key) {}

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace sfalpha
