#include "symbio/pipeline.hpp"

#include <algorithm>
#include <set>

namespace symbio {

void PipelineConfig::validate() const {
    filter.validate();
    temporal.validate();
    if (!(eps_pos > 0.0)) throw ValidationError("eps_pos must be > 0");
    if (insert_period < 1) throw ValidationError("insert_period must be positive");
    if (exclusion_window < 1) throw ValidationError("exclusion_window must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must be in [0,1]");
}

VbowSource::VbowSource(PairScoreTable table) : table_(std::move(table)) {}

VbowSource::VbowSource(const VocabTree& tree, const std::vector<std::vector<Descriptor>>& frame_descriptors,
                       const std::vector<FrameObservation>& frames) {
    if (frame_descriptors.size() != frames.size())
        throw ValidationError("descriptor record count " + std::to_string(frame_descriptors.size()) +
                              " does not match frame count " + std::to_string(frames.size()));
    for (size_t i = 0; i < frames.size(); ++i)
        encodings_.emplace(frames[i].frame_id, tree.encode(frame_descriptors[i]));
}

double VbowSource::score(int64_t query_id, int64_t reference_id) const {
    if (table_) return table_->lookup(query_id, reference_id).value_or(0.0);
    auto q = encodings_.find(query_id);
    auto r = encodings_.find(reference_id);
    if (q == encodings_.end() || r == encodings_.end()) return 0.0;
    return similarity(q->second, r->second);
}

FeatureRow assemble_features(const SemanticVector& current, const SemanticVector& reference,
                             double vbow, const TemporalParams& params, double eps_pos) {
    MatchResult match = semantic_match(current, reference, eps_pos);

    std::span<const Point2> a(current.points);
    std::span<const Point2> b(reference.points);
    std::vector<Point2> matched_a, matched_b;
    if (match.accepted) {
        matched_a.reserve(match.matched_pairs.size());
        matched_b.reserve(match.matched_pairs.size());
        for (const auto& [ci, ri] : match.matched_pairs) {
            matched_a.push_back(current.points[ci]);
            matched_b.push_back(reference.points[ri]);
        }
        a = matched_a;
        b = matched_b;
    }

    FeatureRow row;
    row.matched_labels = match.matched_fraction;
    row.hausdorff_t = hausdorff_temporal(a, b, current.frame_id, reference.frame_id, params);
    row.norm_dist = norm_dist_dissimilarity(current, reference, match);
    row.vbow_score = vbow;
    return row;
}

namespace {

FeatureRow sentinel_features(double vbow, const TemporalParams& params) {
    FeatureRow row;
    row.matched_labels = 0.0;
    row.hausdorff_t = params.alpha;
    row.norm_dist = 1.0;
    row.vbow_score = vbow;
    return row;
}

void check_model_features(const ForestModel& model) {
    if (model.feature_names != kFeatureNames) {
        std::string have;
        for (const auto& n : model.feature_names) have += (have.empty() ? "" : ",") + n;
        throw ValidationError("model feature order [" + have +
                              "] does not match the pipeline's [matched_labels,hausdorff_t,norm_dist,vbow_score]");
    }
}

// Shared frame walk. visit(query_id, reference_id, features) is called for
// every candidate pair, references in ascending frame order.
template <typename Visit>
void walk_sequence(const std::vector<FrameObservation>& frames, const VbowSource& vbow,
                   const PipelineConfig& config, Visit&& visit) {
    VocabularyDB db(config.insert_period, config.exclusion_window);
    for (const FrameObservation& frame : frames) {
        FilteredFrame filtered = filter_objects(frame, config.filter);
        std::optional<SemanticVector> vec;
        if (filtered.spatially_usable()) vec = build_semantic_vector(filtered);

        for (const SemanticVector& ref : db.query_candidates(frame.frame_id)) {
            double score = vbow.score(frame.frame_id, ref.frame_id);
            FeatureRow features = vec ? assemble_features(*vec, ref, score, config.temporal, config.eps_pos)
                                      : sentinel_features(score, config.temporal);
            visit(frame.frame_id, ref.frame_id, features);
        }
        if (vec) db.maybe_insert(*vec);
    }
}

}  // namespace

RunResult run_sequence(const std::vector<FrameObservation>& frames, const VbowSource& vbow,
                       const ForestModel& model, const PipelineConfig& config,
                       const LoopLabelSet* ground_truth) {
    config.validate();
    check_model_features(model);

    RunResult result;
    result.frames_processed = frames.size();
    walk_sequence(frames, vbow, config, [&](int64_t q, int64_t r, const FeatureRow& features) {
        ++result.pairs_scored;
        Prediction pred = predict(model, features.to_row());
        if (pred.prob >= config.threshold) result.detections.push_back({q, r, pred.prob, features});
    });

    if (ground_truth) {
        // Ground-truth loop regions: runs of positive-labeled query frames,
        // merged while gaps stay within the exclusion window.
        std::vector<int64_t> positive_queries;
        for (const auto& [pair, is_loop] : ground_truth->pairs())
            if (is_loop) positive_queries.push_back(pair.first);
        std::sort(positive_queries.begin(), positive_queries.end());
        positive_queries.erase(std::unique(positive_queries.begin(), positive_queries.end()),
                               positive_queries.end());

        for (int64_t q : positive_queries) {
            if (result.regions.empty() ||
                q - result.regions.back().last_query > config.exclusion_window) {
                result.regions.push_back({q, q, std::nullopt});
            } else {
                result.regions.back().last_query = q;
            }
        }
        for (const Detection& det : result.detections) {
            if (ground_truth->lookup(det.query, det.reference) != std::optional<bool>(true)) continue;
            for (LoopRegionReport& region : result.regions) {
                if (det.query < region.first_query || det.query > region.last_query) continue;
                if (!region.earliest_detection || det.query < *region.earliest_detection)
                    region.earliest_detection = det.query;
            }
        }
    }
    return result;
}

TrainingTable build_training_table(const std::vector<FrameObservation>& frames,
                                   const VbowSource& vbow, const LoopLabelSet& ground_truth,
                                   const PipelineConfig& config) {
    config.validate();

    TrainingTable table;
    table.dataset.feature_names = kFeatureNames;
    walk_sequence(frames, vbow, config, [&](int64_t q, int64_t r, const FeatureRow& features) {
        auto label = ground_truth.lookup(q, r);
        if (!label) {
            if (!config.unlabeled_pairs_negative)
                throw ValidationError("candidate pair (" + std::to_string(q) + "," + std::to_string(r) +
                                      ") has no ground-truth label; annotate it or enable "
                                      "unlabeled-pairs-as-negative");
            ++table.unlabeled_walk_pairs;
            label = false;
        }
        table.dataset.rows.push_back(features.to_row());
        table.dataset.labels.push_back(*label ? 1 : 0);
        table.pair_of_row.emplace_back(q, r);
    });

    // truth rows the walk never produced (e.g. outside the window or below
    // the reference period) are reported so mismatched configs surface
    std::set<std::pair<int64_t, int64_t>> produced(table.pair_of_row.begin(), table.pair_of_row.end());
    for (const auto& [pair, is_loop] : ground_truth.pairs())
        if (!produced.count(pair)) ++table.skipped_truth_pairs;
    return table;
}

}  // namespace symbio
