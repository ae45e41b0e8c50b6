#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gbq/types.hpp"

namespace gbq {

// Cluster summary covering a subset of the dataset: component-wise mean
// center, mean member distance as radius, majority label and its fraction.
// `members` stay populated while balls are being generated and are dropped
// once an index ingests the result. `seed_member` indexes the member that
// acts as the retained center point during splitting.
struct GranularBall {
    std::vector<double> center;
    double radius = 0.0;
    int label = 0;
    double purity = 1.0;
    std::size_t member_count = 0;
    std::vector<LabeledPoint> members;
    std::size_t seed_member = 0;
};

// Component-wise mean of the feature vectors. Throws on an empty input.
std::vector<double> ball_center(const std::vector<LabeledPoint>& points);

// Mean Euclidean distance of the points to `center`.
double ball_radius(const std::vector<LabeledPoint>& points,
                   const std::vector<double>& center);

// Fraction of points carrying the most common label.
double ball_purity(const std::vector<LabeledPoint>& points);

// Most common label; ties go to the smallest label id.
int majority_label(const std::vector<LabeledPoint>& points);

// Builds a ball around `members`, computing center/radius/purity/label.
GranularBall make_ball(std::vector<LabeledPoint> members, std::size_t seed_member);

// Two-center split of a mixed-label ball. The first child keeps the parent's
// center point; the second centers on the member farthest from it among
// points of a different class. Every member goes to the nearer center point,
// equidistant members to the first; the second center point itself is pinned
// to the second ball. The rng parameter is part of the call contract but
// splitting is fully deterministic.
std::pair<GranularBall, GranularBall> split_ball(const GranularBall& ball, Rng& rng);

struct GenerateResult {
    std::vector<GranularBall> balls;
    std::size_t split_count = 0;
};

// Recursively splits the dataset (FIFO over pending balls) until every ball
// reaches `purity_threshold`. The only random draw is the root center point.
// Requires a threshold in (0.5, 1.0].
GenerateResult generate(const std::vector<LabeledPoint>& dataset,
                        double purity_threshold, Rng& rng);

}  // namespace gbq
