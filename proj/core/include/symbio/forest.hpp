#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "symbio/errors.hpp"

namespace symbio {

// Canonical fusion feature order; models record their own copy and refuse
// inputs with a different layout.
inline const std::vector<std::string> kFeatureNames = {"matched_labels", "hausdorff_t",
                                                       "norm_dist", "vbow_score"};

// Row-major training table with binary labels.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // 0 or 1

    size_t n_rows() const { return rows.size(); }
    size_t n_features() const { return feature_names.size(); }
    size_t positive_count() const;
    void validate() const;

    // Column subset, preserving row order (ablation arms).
    Dataset project(const std::vector<size_t>& feature_indices) const;
};

struct ForestHyperparams {
    int n_estimators = 100;
    // 0 = floor(sqrt(n_features)) candidate features per split
    int max_features = 0;
    // 0 = unlimited
    int max_depth = 0;
    int min_samples_split = 2;
    uint64_t seed = 0;
    bool bootstrap = true;
    // >1 up-weights the loop class in splits and leaf votes; 1 = off
    double positive_class_weight = 1.0;

    void validate() const;
    int resolved_max_features(size_t n_features) const;
};

struct TreeNode {
    // internal: feature/threshold valid, counts zero
    // leaf: feature == kLeaf, counts valid
    static constexpr uint8_t kLeaf = 0xff;
    uint8_t feature = kLeaf;
    double threshold = 0.0;
    uint32_t left = 0;
    uint32_t right = 0;
    uint32_t count0 = 0;
    uint32_t count1 = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // pre-order, root first

    int vote(const std::vector<double>& row, double positive_class_weight) const;
};

struct ForestModel {
    std::vector<std::string> feature_names;
    ForestHyperparams hyperparams;
    std::vector<DecisionTree> trees;
    std::vector<double> importance;  // mean decrease in impurity, sums to 1
    uint32_t trained_rows = 0;
    uint32_t trained_positives = 0;
};

struct Prediction {
    int label = 0;
    double prob = 0.0;  // fraction of trees voting loop
};

// Bagged Gini trees; per-tree generators are seeded by (seed, tree index) so
// the result is byte-identical for any worker count.
ForestModel train(const Dataset& data, const ForestHyperparams& hp, int n_threads = 1);

Prediction predict(const ForestModel& model, const std::vector<double>& row);

// Tree votes aggregated by majority; ties resolve to 0 (a false loop costs
// more than a late one).
Prediction majority_vote(const std::vector<int>& votes);

const std::vector<double>& feature_importance(const ForestModel& model);

// binary format SBF1 (versioned); round-trips predictions exactly
std::vector<uint8_t> save_model(const ForestModel& model);
ForestModel load_model(const std::vector<uint8_t>& bytes);
void save_model_file(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model_file(const std::filesystem::path& path);

}  // namespace symbio
