#include "gbq/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gbq {

namespace {

void validate_bits(int bits) {
    if (bits < 1 || bits > kMaxFeatureBits)
        throw std::invalid_argument("feature bits must be in [1, 16]");
}

}  // namespace

std::uint32_t max_encodable(int bits) {
    validate_bits(bits);
    return (1u << bits) - 1u;
}

double encode_angle(std::uint32_t value, const EncodingParams& params) {
    if (value > max_encodable(params.bits))
        throw std::invalid_argument("unencodable value");
    // Closed form of the controlled-rotation schedule: the most significant
    // bit contributes pi/4, each following bit half of the previous.
    return std::numbers::pi * static_cast<double>(value) /
           static_cast<double>(1ull << (params.bits + 1));
}

AngleState encode_point(std::span<const std::uint32_t> point,
                        const EncodingParams& params) {
    if (params.dim != 0 && point.size() != static_cast<std::size_t>(params.dim))
        throw std::invalid_argument("dimension mismatch");
    AngleState state;
    state.angles.reserve(point.size());
    for (std::uint32_t v : point) state.angles.push_back(encode_angle(v, params));
    return state;
}

AngleState encode_center(std::span<const double> center,
                         const EncodingParams& params) {
    const std::uint32_t top = max_encodable(params.bits);
    std::vector<std::uint32_t> quantized;
    quantized.reserve(center.size());
    for (double c : center) {
        long long v = std::llround(c);
        v = std::clamp<long long>(v, 0, top);
        quantized.push_back(static_cast<std::uint32_t>(v));
    }
    return encode_point(quantized, params);
}

double exact_similarity(const AngleState& a, const AngleState& b) {
    if (a.angles.size() != b.angles.size())
        throw std::invalid_argument("dimension mismatch");
    double fidelity = 1.0;
    for (std::size_t j = 0; j < a.angles.size(); ++j) {
        const double c = std::cos(a.angles[j] - b.angles[j]);
        fidelity *= c * c;
    }
    return fidelity;
}

double sampled_similarity(const AngleState& a, const AngleState& b,
                          std::uint64_t shots, Rng& rng) {
    if (shots == 0) throw std::invalid_argument("shots must be positive");
    const double p1 = 0.5 - 0.5 * exact_similarity(a, b);
    // Count of 1-outcomes over `shots` independent measurements.
    std::binomial_distribution<std::uint64_t> ones_of(shots, p1);
    const double ones = static_cast<double>(ones_of(rng));
    const double estimate = 1.0 - 2.0 * ones / static_cast<double>(shots);
    return std::clamp(estimate, 0.0, 1.0);
}

double dissimilarity(const AngleState& a, const AngleState& b,
                     const SimilarityBackend& backend, std::uint64_t stream) {
    if (backend.mode == BackendMode::Exact)
        return 0.5 - 0.5 * exact_similarity(a, b);
    Rng rng(derive_seed(backend.seed, stream));
    return 0.5 - 0.5 * sampled_similarity(a, b, backend.shots, rng);
}

std::vector<ScoredCandidate> similarity_batch(
    std::span<const AngleState* const> candidates, const AngleState& query,
    const SimilarityBackend& backend, std::uint64_t stream,
    SimCounters* counters) {
    std::vector<ScoredCandidate> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::uint64_t element_stream = derive_seed(stream, 0x62617463ull, i);
        scored.push_back({dissimilarity(*candidates[i], query, backend, element_stream),
                          static_cast<std::uint32_t>(i)});
    }
    if (counters)
        counters->similarity_evals.fetch_add(candidates.size(),
                                             std::memory_order_relaxed);
    return scored;
}

std::vector<ScoredCandidate> similarity_batch(
    std::span<const AngleState> candidates, const AngleState& query,
    const SimilarityBackend& backend, std::uint64_t stream,
    SimCounters* counters) {
    std::vector<const AngleState*> ptrs;
    ptrs.reserve(candidates.size());
    for (const auto& c : candidates) ptrs.push_back(&c);
    return similarity_batch(std::span<const AngleState* const>(ptrs), query,
                            backend, stream, counters);
}

CounterSnapshot snapshot(const SimCounters& counters) {
    return {counters.similarity_evals.load(std::memory_order_relaxed),
            counters.comparator_calls.load(std::memory_order_relaxed)};
}

CompareResult quantum_compare(double a, double b, const ComparatorConfig& cfg,
                              SimCounters* counters) {
    if (counters)
        counters->comparator_calls.fetch_add(1, std::memory_order_relaxed);
    bool less;
    if (cfg.quantized) {
        const long long qa = std::llround(std::ldexp(a, cfg.frac_bits));
        const long long qb = std::llround(std::ldexp(b, cfg.frac_bits));
        less = qa < qb;
    } else {
        less = a < b;
    }
    return {less ? a : b, less};
}

ComparatorConfig comparator_for(const SimilarityBackend& backend, int cmp_bits) {
    return {backend.mode == BackendMode::Sampled, cmp_bits};
}

}  // namespace gbq
