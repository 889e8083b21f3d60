#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "symbio/bow.hpp"
#include "symbio/filter.hpp"
#include "symbio/forest.hpp"
#include "symbio/geometry.hpp"
#include "symbio/types.hpp"
#include "symbio/vocabulary.hpp"

namespace symbio {

// The 4-feature fusion vector for one (current, reference) pair, in the
// canonical kFeatureNames order.
struct FeatureRow {
    double matched_labels = 0.0;
    double hausdorff_t = 0.0;
    double norm_dist = 0.0;
    double vbow_score = 0.0;

    std::vector<double> to_row() const { return {matched_labels, hausdorff_t, norm_dist, vbow_score}; }
};

struct Detection {
    int64_t query = 0;
    int64_t reference = 0;
    double prob = 0.0;
    FeatureRow features;
};

struct PipelineConfig {
    FilterPolicy filter;
    TemporalParams temporal;
    double eps_pos = kDefaultMatchEpsilon;
    int insert_period = 5;
    int exclusion_window = 30;
    double threshold = 0.5;  // accept a detection at this vote fraction
    // build_training_table: treat walk pairs missing from ground truth as
    // negatives instead of failing
    bool unlabeled_pairs_negative = false;

    void validate() const;
};

// vBoW similarity source: precomputed table wins over computed scores.
class VbowSource {
public:
    // table path; pairs absent from the table score 0
    explicit VbowSource(PairScoreTable table);
    // computed path: encodes each frame's descriptors against the tree
    VbowSource(const VocabTree& tree, const std::vector<std::vector<Descriptor>>& frame_descriptors,
               const std::vector<FrameObservation>& frames);

    double score(int64_t query_id, int64_t reference_id) const;

private:
    std::optional<PairScoreTable> table_;
    std::map<int64_t, BowVector> encodings_;
};

// Features for one candidate pair. Degenerate (spatially unusable) frames
// yield sentinels: matched 0, hausdorff_t = alpha, norm_dist 1.
FeatureRow assemble_features(const SemanticVector& current, const SemanticVector& reference,
                             double vbow, const TemporalParams& params,
                             double eps_pos = kDefaultMatchEpsilon);

struct LoopRegionReport {
    int64_t first_query = 0;  // earliest ground-truth-positive query in the region
    int64_t last_query = 0;
    std::optional<int64_t> earliest_detection;  // earliest accepted true detection
};

struct RunResult {
    std::vector<Detection> detections;
    size_t frames_processed = 0;
    size_t pairs_scored = 0;
    std::vector<LoopRegionReport> regions;  // filled when ground truth is given
};

// Walks frames in order: filter, build the semantic vector, query the
// vocabulary, assemble features per candidate, predict; emits detections at
// or above the threshold. Deterministic for fixed inputs.
RunResult run_sequence(const std::vector<FrameObservation>& frames, const VbowSource& vbow,
                       const ForestModel& model, const PipelineConfig& config,
                       const LoopLabelSet* ground_truth = nullptr);

struct TrainingTable {
    Dataset dataset;
    std::vector<std::pair<int64_t, int64_t>> pair_of_row;  // (query, reference) per row
    size_t skipped_truth_pairs = 0;   // in ground truth, never produced by the walk
    size_t unlabeled_walk_pairs = 0;  // produced by the walk, missing from ground truth
};

// Same walk as run_sequence, but collects one labeled FeatureRow per
// candidate pair instead of predicting.
TrainingTable build_training_table(const std::vector<FrameObservation>& frames,
                                   const VbowSource& vbow, const LoopLabelSet& ground_truth,
                                   const PipelineConfig& config);

}  // namespace symbio
