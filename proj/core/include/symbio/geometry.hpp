#pragma once

#include <span>
#include <string>
#include <vector>

#include "symbio/filter.hpp"
#include "symbio/types.hpp"

namespace symbio {

// A frame's filtered objects reduced to labels plus scale-normalized 2D
// geometry. Centroids are translated to the set's min corner and divided by
// the maximum pairwise distance, so coordinates live in the unit square and
// the largest pairwise distance is exactly 1.
struct SemanticVector {
    int64_t frame_id = 0;
    std::vector<std::string> labels;
    std::vector<Point2> points;      // normalized centroids, same order as labels
    std::vector<double> norm_dists;  // all pairwise distances, sorted ascending, max == 1
};

struct MatchResult {
    double matched_fraction = 0.0;
    std::vector<std::pair<size_t, size_t>> matched_pairs;  // (current idx, reference idx)
    bool accepted = false;
};

// Weight of the temporal similarity term added to the Hausdorff distance.
struct TemporalParams {
    double alpha = 100.0;
    double beta_s = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 100.0)) throw ValidationError("alpha must be in (0,100]");
        if (!(beta_s > 0.0 && beta_s <= 1.0)) throw ValidationError("beta_s must be in (0,1]");
    }
};

// Fraction of label-and-position agreements required to accept a match; the
// complement is the tolerated rate of misclassified or missing labels.
inline constexpr double kMatchAcceptFraction = 0.6;

// Positional agreement radius on the normalized plane.
inline constexpr double kDefaultMatchEpsilon = 0.15;

SemanticVector build_semantic_vector(const FilteredFrame& frame);

// Greedy injective label+position matching on the normalized plane. Pairs
// with equal labels are accepted nearest-first while their point distance is
// at most eps_pos; the fraction is over the larger object count.
MatchResult semantic_match(const SemanticVector& current, const SemanticVector& reference,
                           double eps_pos = kDefaultMatchEpsilon);

// H(A,B) = max(h(A,B), h(B,A)), h(A,B) = max_a min_b ||a-b||.
double hausdorff(std::span<const Point2> a, std::span<const Point2> b);

// S^t(i,j) = 1 / exp(beta_s * (i-j)^2)
double temporal_penalty(int64_t i, int64_t j, double beta_s);

// H^t(i,j) = H(A,B) + alpha * S^t(i,j)
double hausdorff_temporal(std::span<const Point2> a, std::span<const Point2> b, int64_t i,
                          int64_t j, const TemporalParams& params);

// Mean absolute difference between the two frames' sorted pairwise-distance
// lists, recomputed over the matched objects only (re-normalized per frame).
// Fewer than 2 matched pairs yields the maximum-dissimilarity sentinel 1.
double norm_dist_dissimilarity(const SemanticVector& current, const SemanticVector& reference,
                               const MatchResult& match);

}  // namespace symbio
