#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "gbq/types.hpp"

namespace gbq {

inline constexpr int kMaxFeatureBits = 16;

struct EncodingParams {
    int bits = 8;  // t_a, bits per feature, in [1, 16]
    int dim = 0;   // d

    bool operator==(const EncodingParams&) const = default;
};

// Largest integer encodable with `bits` feature bits: 2^bits - 1.
std::uint32_t max_encodable(int bits);

// Per-dimension rotation angles; each lies in [0, pi/2).
struct AngleState {
    std::vector<double> angles;

    bool operator==(const AngleState&) const = default;
};

// Rotation angle for one feature value: theta = pi * value / 2^(bits+1),
// the closed form of summing pi/2^v over set bits with the most significant
// bit firing v = 2.
double encode_angle(std::uint32_t value, const EncodingParams& params);

// Component-wise encode_angle over a feature vector of length params.dim.
AngleState encode_point(std::span<const std::uint32_t> point,
                        const EncodingParams& params);

// Rounds a real-valued center to the encodable integer grid (clamping to
// [0, 2^bits - 1]) and encodes it.
AngleState encode_center(std::span<const double> center,
                         const EncodingParams& params);

enum class BackendMode { Exact, Sampled };

// Similarity backend configuration. Exact mode evaluates fidelities
// analytically; sampled mode estimates them from `shots` measurement
// outcomes drawn from streams derived off `seed`.
struct SimilarityBackend {
    BackendMode mode = BackendMode::Exact;
    std::uint64_t shots = 4096;
    std::uint64_t seed = 0;

    bool operator==(const SimilarityBackend&) const = default;
};

// Squared inner product of the two product states: prod_j cos^2(a_j - b_j).
double exact_similarity(const AngleState& a, const AngleState& b);

// Finite-shot estimate of exact_similarity: draws `shots` binary outcomes
// with success probability p(1) = 1/2 - 1/2 * fidelity and returns
// clamp(1 - 2 * ones/shots, 0, 1).
double sampled_similarity(const AngleState& a, const AngleState& b,
                          std::uint64_t shots, Rng& rng);

// Measurement-1 probability p(1) = 1/2 - 1/2 * fidelity for the pair under
// the backend; the quantity minimized during index descent. In sampled mode
// the estimate is drawn from the rng stream derived from (seed, stream).
double dissimilarity(const AngleState& a, const AngleState& b,
                     const SimilarityBackend& backend, std::uint64_t stream = 0);

struct ScoredCandidate {
    double dissimilarity = 0.0;
    std::uint32_t index = 0;
};

// Instrumentation sinks shared by concurrent searches.
struct SimCounters {
    std::atomic<std::uint64_t> similarity_evals{0};
    std::atomic<std::uint64_t> comparator_calls{0};
};

struct CounterSnapshot {
    std::uint64_t similarity_evals = 0;
    std::uint64_t comparator_calls = 0;

    CounterSnapshot operator-(const CounterSnapshot& rhs) const {
        return {similarity_evals - rhs.similarity_evals,
                comparator_calls - rhs.comparator_calls};
    }
    bool operator==(const CounterSnapshot&) const = default;
};

CounterSnapshot snapshot(const SimCounters& counters);

// Dissimilarity of every candidate against the query, in input order. Each
// element draws from an independently derived rng stream so results do not
// depend on evaluation scheduling. An empty candidate span yields an empty
// result.
std::vector<ScoredCandidate> similarity_batch(
    std::span<const AngleState* const> candidates, const AngleState& query,
    const SimilarityBackend& backend, std::uint64_t stream = 0,
    SimCounters* counters = nullptr);

std::vector<ScoredCandidate> similarity_batch(
    std::span<const AngleState> candidates, const AngleState& query,
    const SimilarityBackend& backend, std::uint64_t stream = 0,
    SimCounters* counters = nullptr);

// Comparator register width configuration. Quantized mode mirrors the
// sampled pipeline: operands are fixed-point values with `frac_bits`
// fractional bits. Exact mode compares the reals directly.
struct ComparatorConfig {
    bool quantized = false;
    int frac_bits = 16;  // q

    bool operator==(const ComparatorConfig&) const = default;
};

struct CompareResult {
    double smaller = 0.0;
    bool less = false;  // flag c: true iff a < b
};

// Comparison of two finite values: flag c = 1 iff a < b (c = 0 iff a >= b),
// returning the smaller operand (b on ties).
CompareResult quantum_compare(double a, double b,
                              const ComparatorConfig& cfg = {},
                              SimCounters* counters = nullptr);

// Comparator settings matching a similarity backend: quantized registers for
// the sampled backend, plain reals for the exact one.
ComparatorConfig comparator_for(const SimilarityBackend& backend, int cmp_bits);

}  // namespace gbq
