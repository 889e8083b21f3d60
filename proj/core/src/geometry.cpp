#include "symbio/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symbio {

SemanticVector build_semantic_vector(const FilteredFrame& frame) {
    const size_t n = frame.objects.size();
    if (n < 2)
        throw ValidationError("frame " + std::to_string(frame.frame_id) +
                              ": need at least 2 objects to build a semantic vector");

    std::vector<Point2> centers(n);
    for (size_t i = 0; i < n; ++i) centers[i] = frame.objects[i].bbox.center();

    // Pairwise distances in pixel coordinates; the maximum doubles as the
    // scale so that dividing by it pins max(norm_dists) to exactly 1.
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    double max_dist = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double d = euclidean(centers[i], centers[j]);
            dists.push_back(d);
            max_dist = std::max(max_dist, d);
        }
    if (max_dist == 0.0)
        throw ValidationError("frame " + std::to_string(frame.frame_id) +
                              ": all object centroids coincide, scale is degenerate");

    double min_x = centers[0].x, min_y = centers[0].y;
    for (const Point2& c : centers) {
        min_x = std::min(min_x, c.x);
        min_y = std::min(min_y, c.y);
    }

    SemanticVector vec;
    vec.frame_id = frame.frame_id;
    vec.labels.reserve(n);
    vec.points.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        vec.labels.push_back(frame.objects[i].label);
        double x = (centers[i].x - min_x) / max_dist;
        double y = (centers[i].y - min_y) / max_dist;
        vec.points.push_back({std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)});
    }
    vec.norm_dists.reserve(dists.size());
    for (double d : dists) vec.norm_dists.push_back(d / max_dist);
    std::sort(vec.norm_dists.begin(), vec.norm_dists.end());
    return vec;
}

MatchResult semantic_match(const SemanticVector& current, const SemanticVector& reference,
                           double eps_pos) {
    struct Candidate {
        double dist;
        size_t cur;
        size_t ref;
    };
    std::vector<Candidate> candidates;
    for (size_t i = 0; i < current.labels.size(); ++i)
        for (size_t j = 0; j < reference.labels.size(); ++j) {
            if (current.labels[i] != reference.labels[j]) continue;
            double d = euclidean(current.points[i], reference.points[j]);
            if (d <= eps_pos) candidates.push_back({d, i, j});
        }

    // Nearest-first; ties ordered by the swap-symmetric (min,max) index pair
    // so acceptance does not depend on argument order.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        auto ka = std::minmax(a.cur, a.ref);
        auto kb = std::minmax(b.cur, b.ref);
        if (ka != kb) return ka < kb;
        return a.cur < b.cur;
    });

    MatchResult result;
    std::vector<bool> cur_used(current.labels.size(), false);
    std::vector<bool> ref_used(reference.labels.size(), false);
    for (const Candidate& c : candidates) {
        if (cur_used[c.cur] || ref_used[c.ref]) continue;
        cur_used[c.cur] = true;
        ref_used[c.ref] = true;
        result.matched_pairs.emplace_back(c.cur, c.ref);
    }

    size_t denom = std::max(current.labels.size(), reference.labels.size());
    result.matched_fraction = denom == 0 ? 0.0 : double(result.matched_pairs.size()) / double(denom);
    result.accepted = result.matched_fraction >= kMatchAcceptFraction;
    return result;
}

double hausdorff(std::span<const Point2> a, std::span<const Point2> b) {
    if (a.empty() || b.empty()) throw ValidationError("hausdorff distance of an empty point set");
    auto directed = [](std::span<const Point2> from, std::span<const Point2> to) {
        double worst = 0.0;
        for (const Point2& p : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const Point2& q : to) nearest = std::min(nearest, euclidean(p, q));
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

double temporal_penalty(int64_t i, int64_t j, double beta_s) {
    double delta = double(i) - double(j);
    return 1.0 / std::exp(beta_s * delta * delta);
}

double hausdorff_temporal(std::span<const Point2> a, std::span<const Point2> b, int64_t i,
                          int64_t j, const TemporalParams& params) {
    params.validate();
    return hausdorff(a, b) + params.alpha * temporal_penalty(i, j, params.beta_s);
}

namespace {

// Sorted pairwise distances of a matched subset, re-normalized to its own
// maximum so the comparison stays scale-free.
std::vector<double> restricted_norm_dists(const std::vector<Point2>& points,
                                          const std::vector<size_t>& subset) {
    std::vector<double> dists;
    dists.reserve(subset.size() * (subset.size() - 1) / 2);
    double max_dist = 0.0;
    for (size_t i = 0; i < subset.size(); ++i)
        for (size_t j = i + 1; j < subset.size(); ++j) {
            double d = euclidean(points[subset[i]], points[subset[j]]);
            dists.push_back(d);
            max_dist = std::max(max_dist, d);
        }
    if (max_dist > 0.0)
        for (double& d : dists) d /= max_dist;
    std::sort(dists.begin(), dists.end());
    return dists;
}

}  // namespace

double norm_dist_dissimilarity(const SemanticVector& current, const SemanticVector& reference,
                               const MatchResult& match) {
    if (match.matched_pairs.size() < 2) return 1.0;

    std::vector<size_t> cur_idx, ref_idx;
    cur_idx.reserve(match.matched_pairs.size());
    ref_idx.reserve(match.matched_pairs.size());
    for (const auto& [ci, ri] : match.matched_pairs) {
        cur_idx.push_back(ci);
        ref_idx.push_back(ri);
    }
    auto cur_dists = restricted_norm_dists(current.points, cur_idx);
    auto ref_dists = restricted_norm_dists(reference.points, ref_idx);

    double sum = 0.0;
    for (size_t k = 0; k < cur_dists.size(); ++k) sum += std::abs(cur_dists[k] - ref_dists[k]);
    return sum / double(cur_dists.size());
}

}  // namespace symbio
