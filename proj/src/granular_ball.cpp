#include "gbq/granular_ball.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace gbq {

namespace {

// Squared distances between quantized points are exact in double for any
// realistic feature width, so comparisons and ties are deterministic.
double squared_distance(const LabeledPoint& a, const LabeledPoint& b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.features.size(); ++j) {
        const double d = static_cast<double>(a.features[j]) -
                         static_cast<double>(b.features[j]);
        sum += d * d;
    }
    return sum;
}

}  // namespace

std::vector<double> ball_center(const std::vector<LabeledPoint>& points) {
    if (points.empty()) throw std::invalid_argument("empty ball");
    const std::size_t dim = points.front().features.size();
    std::vector<double> center(dim, 0.0);
    for (const auto& p : points) {
        if (p.features.size() != dim)
            throw std::invalid_argument("dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j)
            center[j] += static_cast<double>(p.features[j]);
    }
    for (auto& c : center) c /= static_cast<double>(points.size());
    return center;
}

double ball_radius(const std::vector<LabeledPoint>& points,
                   const std::vector<double>& center) {
    if (points.empty()) throw std::invalid_argument("empty ball");
    double total = 0.0;
    for (const auto& p : points) {
        if (p.features.size() != center.size())
            throw std::invalid_argument("dimension mismatch");
        double sum = 0.0;
        for (std::size_t j = 0; j < center.size(); ++j) {
            const double d = static_cast<double>(p.features[j]) - center[j];
            sum += d * d;
        }
        total += std::sqrt(sum);
    }
    return total / static_cast<double>(points.size());
}

double ball_purity(const std::vector<LabeledPoint>& points) {
    if (points.empty()) throw std::invalid_argument("empty ball");
    std::map<int, std::size_t> counts;
    for (const auto& p : points) ++counts[p.label];
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(points.size());
}

int majority_label(const std::vector<LabeledPoint>& points) {
    if (points.empty()) throw std::invalid_argument("empty ball");
    std::map<int, std::size_t> counts;
    for (const auto& p : points) ++counts[p.label];
    int best_label = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {  // map order makes ties keep the lowest label
            best_count = count;
            best_label = label;
        }
    }
    return best_label;
}

GranularBall make_ball(std::vector<LabeledPoint> members, std::size_t seed_member) {
    if (members.empty()) throw std::invalid_argument("empty ball");
    if (seed_member >= members.size())
        throw std::invalid_argument("seed member out of range");
    GranularBall ball;
    ball.center = ball_center(members);
    ball.radius = ball_radius(members, ball.center);
    ball.purity = ball_purity(members);
    ball.label = majority_label(members);
    ball.member_count = members.size();
    ball.seed_member = seed_member;
    ball.members = std::move(members);
    return ball;
}

std::pair<GranularBall, GranularBall> split_ball(const GranularBall& ball, Rng&) {
    const auto& members = ball.members;
    if (members.empty()) throw std::invalid_argument("empty ball");
    const LabeledPoint& first_center = members[ball.seed_member];

    // Second center: farthest member of a different class than the retained
    // center point; ties keep the earliest member.
    std::size_t second = members.size();
    double best = -1.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (members[i].label == first_center.label) continue;
        const double d2 = squared_distance(members[i], first_center);
        if (d2 > best) {
            best = d2;
            second = i;
        }
    }
    if (second == members.size())
        throw std::invalid_argument("cannot split pure ball");
    const LabeledPoint& second_center = members[second];

    std::vector<LabeledPoint> first_members;
    std::vector<LabeledPoint> second_members;
    std::size_t first_seed = 0;
    std::size_t second_seed = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i == second) {  // the second center is pinned to the second ball
            second_seed = second_members.size();
            second_members.push_back(members[i]);
            continue;
        }
        const double da = squared_distance(members[i], first_center);
        const double db = squared_distance(members[i], second_center);
        if (da <= db) {  // equidistant members stay with the first center
            if (i == ball.seed_member) first_seed = first_members.size();
            first_members.push_back(members[i]);
        } else {
            second_members.push_back(members[i]);
        }
    }
    return {make_ball(std::move(first_members), first_seed),
            make_ball(std::move(second_members), second_seed)};
}

GenerateResult generate(const std::vector<LabeledPoint>& dataset,
                        double purity_threshold, Rng& rng) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    if (!(purity_threshold > 0.5) || purity_threshold > 1.0)
        throw std::invalid_argument("invalid threshold");

    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    GenerateResult result;
    std::deque<GranularBall> pending;
    pending.push_back(make_ball(dataset, pick(rng)));

    while (!pending.empty()) {
        GranularBall ball = std::move(pending.front());
        pending.pop_front();
        if (ball.purity >= purity_threshold) {
            result.balls.push_back(std::move(ball));
            continue;
        }
        auto [first, second] = split_ball(ball, rng);
        ++result.split_count;
        pending.push_back(std::move(first));
        pending.push_back(std::move(second));
    }
    return result;
}

}  // namespace gbq
