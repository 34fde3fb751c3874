#include "mvsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvsde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0,1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

void DrawTally::record(ParticleId id, StepIndex step) {
    std::lock_guard lock(mutex_);
    ++counts_[{id, step}];
}

std::map<std::pair<ParticleId, StepIndex>, std::uint64_t> DrawTally::counts() const {
    std::lock_guard lock(mutex_);
    return counts_;
}

std::uint64_t DrawTally::total() const {
    std::lock_guard lock(mutex_);
    std::uint64_t n = 0;
    for (const auto& [k, c] : counts_) n += c;
    return n;
}

BrownianDriver::BrownianDriver(std::uint64_t master_seed) noexcept
    : seed_(master_seed),
      key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)} {}

// Counter layout: [step lo, step hi, particle id lo, (purpose << 28) | (block << 12) | id hi]
// with 12 bits of id hi, so ids below 2^44 and up to 65536 blocks are distinct.
void BrownianDriver::normals(Purpose purpose, ParticleId id, StepIndex step, std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t block = 0; 2 * block < n; ++block) {
        const Philox4x32::Counter ctr{
            static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
            static_cast<std::uint32_t>(id),
            (static_cast<std::uint32_t>(purpose) << 28) | (static_cast<std::uint32_t>(block & 0xFFFF) << 12) |
                static_cast<std::uint32_t>((id >> 32) & 0xFFF)};
        const auto r = Philox4x32::generate(ctr, key_);
        const double u1 = to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[2 * block] = radius * std::cos(angle);
        if (2 * block + 1 < n) out[2 * block + 1] = radius * std::sin(angle);
    }
}

void BrownianDriver::increment(ParticleId id, StepIndex step, double dt, std::span<double> out) const {
    normals(Purpose::increment, id, step, out);
    const double scale = std::sqrt(dt);
    for (double& v : out) v *= scale;
    if (tally_) tally_->record(id, step);
}

void BrownianDriver::initial_normals(ParticleId id, std::span<double> out) const {
    normals(Purpose::initial, id, 0, out);
}

void BrownianDriver::uniforms(ParticleId id, std::uint32_t block, std::span<double> out) const {
    for (std::size_t i = 0; 2 * i < out.size(); ++i) {
        const Philox4x32::Counter ctr{block, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(id),
                                      (static_cast<std::uint32_t>(Purpose::auxiliary) << 28) |
                                          static_cast<std::uint32_t>((id >> 32) & 0xFFFFFFF)};
        const auto r = Philox4x32::generate(ctr, key_);
        out[2 * i] = to_unit(r[0], r[1]);
        if (2 * i + 1 < out.size()) out[2 * i + 1] = to_unit(r[2], r[3]);
    }
}

} // namespace mvsde
