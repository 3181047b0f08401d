#pragma once
#include <cmath>
#include <cstdint>

namespace pmt {

// splitmix64 (Steele/Lea/Flood reference constants) with Box-Muller normals.
// Chosen over std::mt19937 because <random> distributions are not pinned by the
// standard; this generator produces the same stream on every platform, which the
// reproducibility contract (sidecar re-runs, seed determinism tests) relies on.
// The algorithm name is recorded in artifact metadata as "splitmix64+box-muller".
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform on (0,1]; never 0 so log() below is safe
    double next_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = next_unit();
        double v = next_unit();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // decorrelated substream seed, e.g. per radius or per realization
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed ^ (0x632BE59BD9B4E019ull + 0x9E3779B97F4A7C15ull * stream));
        r.next_u64();
        return r.next_u64();
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pmt
