#ifndef SMORPH_COMMON_HPP
#define SMORPH_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace smorph {

// Error taxonomy mapped to CLI exit codes: usage/config = 1, data = 2,
// numerical failure = 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Quality flags carried through the mask pipeline. Degenerate inputs never
// abort a batch run; they surface here instead.
enum QualityFlag : uint32_t {
    kFlagNone                 = 0,
    kFlagDegenerateThreshold  = 1u << 0,
    kFlagTinyNucleus          = 1u << 1,
    kFlagAmbiguousOrientation = 1u << 2,
    kFlagEmptyAcrosome        = 1u << 3,
    kFlagClippedHierarchy     = 1u << 4,
    kFlagEmptyConfidentSet    = 1u << 5,
    kFlagEmptyValidRegion     = 1u << 6,
    kFlagEmptyTeacherMask     = 1u << 7,
    kFlagReducedClusters      = 1u << 8,
};

std::string flags_to_string(uint32_t flags);
uint32_t flags_from_string(const std::string& text);

// Deterministic RNG. mt19937_64 drives everything; the distributions are
// hand-rolled so results do not depend on the standard library vendor.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    uint64_t uniform_index(uint64_t n) { return n ? next_u64() % n : 0; }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller, one value per call (spare discarded for simplicity)
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * M_PI * u2);
    }

    uint64_t fork(uint64_t stream) {
        // derive an independent seed for a sub-task without disturbing state
        uint64_t z = state_ + 0x632be59bd9b4e019ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

// Runs fn(i) for i in [0,n). Order of execution is unspecified but each index
// runs exactly once; callers that need determinism must write to disjoint
// per-index slots and reduce in index order afterwards.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

int default_thread_count();

}  // namespace smorph

#endif
