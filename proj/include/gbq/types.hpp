#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbq {

using Rng = std::mt19937_64;

// Quantized sample: integer features in [0, 2^bits - 1] plus a class id.
struct LabeledPoint {
    std::vector<std::uint32_t> features;
    int label = 0;

    bool operator==(const LabeledPoint&) const = default;
};

// Thrown by readers on malformed input. `position` is a byte offset for
// binary sources and a line number for text sources.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " (at " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// splitmix64, used to derive independent seeds from one base seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                    std::uint64_t salt = 0) noexcept {
    return splitmix64(splitmix64(base ^ splitmix64(tag)) ^ salt);
}

}  // namespace gbq
