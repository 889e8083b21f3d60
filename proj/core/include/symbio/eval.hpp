#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symbio/forest.hpp"
#include "symbio/pipeline.hpp"
#include "symbio/types.hpp"

namespace symbio {

// Precision = TP/(TP+FP), Recall = TP/(TP+FN); precision is undefined (not
// zero) when nothing was predicted positive.
struct Metrics {
    size_t tp = 0;
    size_t fp = 0;
    size_t fn = 0;

    std::optional<double> precision() const {
        if (tp + fp == 0) return std::nullopt;
        return double(tp) / double(tp + fp);
    }
    std::optional<double> recall() const {
        if (tp + fn == 0) return std::nullopt;
        return double(tp) / double(tp + fn);
    }
};

struct RunSummary {
    double median = 0.0;
    double mean = 0.0;
    double mad = 0.0;  // median absolute deviation
    size_t defined_runs = 0;
};

struct EvalReport {
    std::string name;
    Metrics totals;                               // from the last (or only) run
    size_t n_test_rows = 0;
    size_t n_test_positives = 0;
    std::vector<std::pair<std::optional<double>, std::optional<double>>> runs;  // (P, R) per run
    RunSummary precision_summary;
    RunSummary recall_summary;
};

// Detections vs. annotated pairs. Every predicted pair must carry a label
// unless missing_is_negative is set; FN counts unpredicted positives.
Metrics precision_recall(const std::vector<Detection>& predictions, const LoopLabelSet& truth,
                         bool missing_is_negative = false);

// Stratified row split: test_fraction of each class, shuffled by the seed.
struct SplitIndices {
    std::vector<uint32_t> train;
    std::vector<uint32_t> test;
};
SplitIndices stratified_split(const Dataset& data, double test_fraction, uint64_t seed);
Dataset take_rows(const Dataset& data, const std::vector<uint32_t>& indices);

// Train on the train rows, score the test rows at the given vote threshold.
Metrics evaluate_split(const Dataset& train_set, const Dataset& test_set,
                       const ForestHyperparams& hp, double threshold, int n_threads = 1);

struct AblationResult {
    EvalReport cnn_only;   // matched_labels, hausdorff_t, norm_dist
    EvalReport vbow_only;  // vbow_score
    EvalReport both;
};

// Three seed-aligned arms over identical splits, so metric gaps are
// attributable to the feature sets alone.
AblationResult ablation(const Dataset& data, const ForestHyperparams& hp, double test_fraction,
                        double threshold, uint64_t split_seed, int n_runs = 1, int n_threads = 1);

// n_runs independent split+train+eval rounds; run r derives its seeds from
// (base_seed, r). Summaries are median / mean / MAD over defined values.
EvalReport repeated_eval(const Dataset& data, const ForestHyperparams& hp, double test_fraction,
                         double threshold, uint64_t base_seed, int n_runs, int n_threads = 1);

RunSummary summarize(const std::vector<std::optional<double>>& values);

// Aligned table for stdout plus a CSV form for --out.
std::string format_report_table(const std::vector<EvalReport>& reports);
std::string format_report_csv(const std::vector<EvalReport>& reports);

}  // namespace symbio
