#include "symbio/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "symbio/rng.hpp"

namespace symbio {

size_t Dataset::positive_count() const {
    size_t n = 0;
    for (int y : labels) n += size_t(y == 1);
    return n;
}

void Dataset::validate() const {
    if (rows.size() != labels.size()) throw ValidationError("dataset rows and labels differ in length");
    if (feature_names.empty()) throw ValidationError("dataset has no features");
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != feature_names.size())
            throw ValidationError("row " + std::to_string(i) + " has wrong feature count");
        for (double v : rows[i])
            if (!std::isfinite(v)) throw ValidationError("row " + std::to_string(i) + " has a non-finite feature");
        if (labels[i] != 0 && labels[i] != 1)
            throw ValidationError("row " + std::to_string(i) + " has a non-binary label");
    }
}

Dataset Dataset::project(const std::vector<size_t>& feature_indices) const {
    Dataset out;
    for (size_t f : feature_indices) {
        if (f >= feature_names.size()) throw ValidationError("feature index out of range in projection");
        out.feature_names.push_back(feature_names[f]);
    }
    out.rows.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<double> r;
        r.reserve(feature_indices.size());
        for (size_t f : feature_indices) r.push_back(row[f]);
        out.rows.push_back(std::move(r));
    }
    out.labels = labels;
    return out;
}

void ForestHyperparams::validate() const {
    if (n_estimators < 1) throw ValidationError("n_estimators must be >= 1");
    if (max_features < 0) throw ValidationError("max_features must be >= 0 (0 = sqrt rule)");
    if (max_depth < 0) throw ValidationError("max_depth must be >= 0 (0 = unlimited)");
    if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
    if (!(positive_class_weight > 0.0)) throw ValidationError("positive_class_weight must be > 0");
}

int ForestHyperparams::resolved_max_features(size_t n_features) const {
    int m = max_features == 0 ? int(std::floor(std::sqrt(double(n_features)))) : max_features;
    return std::clamp(m, 1, int(n_features));
}

namespace {

struct SplitChoice {
    bool found = false;
    size_t feature = 0;
    double threshold = 0.0;
    double weighted_impurity = 0.0;
    double decrease = 0.0;  // parent impurity minus weighted child impurity
};

double gini(double w0, double w1) {
    double total = w0 + w1;
    if (total <= 0.0) return 0.0;
    double p0 = w0 / total, p1 = w1 / total;
    return 1.0 - (p0 * p0 + p1 * p1);
}

struct TreeBuilder {
    const Dataset& data;
    const ForestHyperparams& hp;
    int max_features;
    double w_pos;
    Rng rng;
    std::vector<TreeNode> nodes;
    std::vector<double> importance_acc;  // per feature, weighted impurity decrease
    double total_weight = 0.0;

    TreeBuilder(const Dataset& d, const ForestHyperparams& h, uint64_t tree_seed)
        : data(d),
          hp(h),
          max_features(h.resolved_max_features(d.n_features())),
          w_pos(h.positive_class_weight),
          rng(tree_seed),
          importance_acc(d.n_features(), 0.0) {}

    double row_weight(size_t row) const { return data.labels[row] == 1 ? w_pos : 1.0; }

    // Best split for one feature: thresholds at midpoints between consecutive
    // distinct sorted values.
    SplitChoice best_split_on_feature(const std::vector<uint32_t>& samples, size_t feature) const {
        std::vector<std::pair<double, uint32_t>> order;
        order.reserve(samples.size());
        for (uint32_t s : samples) order.emplace_back(data.rows[s][feature], s);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double right0 = 0.0, right1 = 0.0;
        for (uint32_t s : samples) (data.labels[s] == 1 ? right1 : right0) += row_weight(s);
        const double total = right0 + right1;
        const double parent_impurity = gini(right0, right1);

        SplitChoice best;
        double left0 = 0.0, left1 = 0.0;
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            uint32_t s = order[i].second;
            double w = row_weight(s);
            if (data.labels[s] == 1)
                left1 += w, right1 -= w;
            else
                left0 += w, right0 -= w;
            if (order[i].first == order[i + 1].first) continue;  // not a boundary
            double threshold = order[i].first + 0.5 * (order[i + 1].first - order[i].first);
            double wl = left0 + left1, wr = right0 + right1;
            double weighted = (wl * gini(left0, left1) + wr * gini(right0, right1)) / total;
            if (!best.found || weighted < best.weighted_impurity ||
                (weighted == best.weighted_impurity && threshold < best.threshold)) {
                best.found = true;
                best.feature = feature;
                best.threshold = threshold;
                best.weighted_impurity = weighted;
                best.decrease = parent_impurity - weighted;
            }
        }
        return best;
    }

    uint32_t build(std::vector<uint32_t>&& samples, int depth) {
        uint32_t id = uint32_t(nodes.size());
        nodes.push_back({});

        uint32_t count0 = 0, count1 = 0;
        for (uint32_t s : samples) (data.labels[s] == 1 ? count1 : count0)++;

        bool pure = count0 == 0 || count1 == 0;
        bool depth_capped = hp.max_depth > 0 && depth >= hp.max_depth;
        bool too_small = samples.size() < size_t(hp.min_samples_split);
        if (!pure && !depth_capped && !too_small) {
            // candidate features without replacement, Fisher-Yates style
            std::vector<size_t> features(data.n_features());
            std::iota(features.begin(), features.end(), size_t(0));
            for (int i = 0; i < max_features; ++i) {
                size_t j = size_t(i) + size_t(rng.next_below(features.size() - size_t(i)));
                std::swap(features[size_t(i)], features[j]);
            }
            features.resize(size_t(max_features));

            SplitChoice best;
            for (size_t f : features) {
                SplitChoice c = best_split_on_feature(samples, f);
                if (!c.found) continue;
                if (!best.found || c.weighted_impurity < best.weighted_impurity ||
                    (c.weighted_impurity == best.weighted_impurity &&
                     (c.feature < best.feature ||
                      (c.feature == best.feature && c.threshold < best.threshold)))) {
                    best = c;
                }
            }

            if (best.found) {
                double node_weight = 0.0;
                for (uint32_t s : samples) node_weight += row_weight(s);
                importance_acc[best.feature] += node_weight * best.decrease;

                std::vector<uint32_t> left, right;
                left.reserve(samples.size());
                right.reserve(samples.size());
                for (uint32_t s : samples)
                    (data.rows[s][best.feature] <= best.threshold ? left : right).push_back(s);
                samples.clear();
                samples.shrink_to_fit();

                nodes[id].feature = uint8_t(best.feature);
                nodes[id].threshold = best.threshold;
                uint32_t l = build(std::move(left), depth + 1);
                uint32_t r = build(std::move(right), depth + 1);
                nodes[id].left = l;
                nodes[id].right = r;
                return id;
            }
        }

        nodes[id].feature = TreeNode::kLeaf;
        nodes[id].count0 = count0;
        nodes[id].count1 = count1;
        return id;
    }
};

void write_u32le(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}
void write_u64le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}
void write_f64le(std::vector<uint8_t>& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64le(out, bits);
}
void write_string(std::vector<uint8_t>& out, const std::string& s) {
    write_u32le(out, uint32_t(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class ModelReader {
public:
    explicit ModelReader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = v << 8 | bytes_[pos_ + size_t(i)];
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = v << 8 | bytes_[pos_ + size_t(i)];
        pos_ += 8;
        return v;
    }
    double f64() {
        uint64_t raw = u64();
        double d;
        std::memcpy(&d, &raw, 8);
        return d;
    }
    uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::string str() {
        uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    void skip(size_t n) { need(n), pos_ += n; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(size_t n) const {
        if (pos_ + n > bytes_.size()) throw ParseError("truncated model file");
    }
    const std::vector<uint8_t>& bytes_;
    size_t pos_ = 0;
};

constexpr uint32_t kModelVersion = 1;

}  // namespace

int DecisionTree::vote(const std::vector<double>& row, double positive_class_weight) const {
    uint32_t node = 0;
    while (nodes[node].feature != TreeNode::kLeaf) {
        const TreeNode& n = nodes[node];
        node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    double w1 = double(nodes[node].count1) * positive_class_weight;
    return w1 > double(nodes[node].count0) ? 1 : 0;  // leaf tie votes no-loop
}

ForestModel train(const Dataset& data, const ForestHyperparams& hp, int n_threads) {
    data.validate();
    hp.validate();
    size_t positives = data.positive_count();
    if (data.n_rows() == 0) throw ValidationError("cannot train on an empty dataset");
    if (positives == 0 || positives == data.n_rows())
        throw ValidationError("training data holds a single class; both loop and non-loop rows are required");

    ForestModel model;
    model.feature_names = data.feature_names;
    model.hyperparams = hp;
    model.trees.resize(size_t(hp.n_estimators));
    model.trained_rows = uint32_t(data.n_rows());
    model.trained_positives = uint32_t(positives);

    std::vector<std::vector<double>> importance_per_tree(size_t(hp.n_estimators));

    auto build_tree = [&](int t) {
        uint64_t tree_seed = derive_seed(hp.seed, "tree", uint64_t(t));
        TreeBuilder builder(data, hp, tree_seed);

        std::vector<uint32_t> samples;
        samples.reserve(data.n_rows());
        if (hp.bootstrap) {
            for (size_t i = 0; i < data.n_rows(); ++i)
                samples.push_back(uint32_t(builder.rng.next_below(data.n_rows())));
        } else {
            samples.resize(data.n_rows());
            std::iota(samples.begin(), samples.end(), 0u);
        }
        builder.build(std::move(samples), 0);
        model.trees[size_t(t)].nodes = std::move(builder.nodes);
        importance_per_tree[size_t(t)] = std::move(builder.importance_acc);
    };

    n_threads = std::max(1, n_threads);
    if (n_threads == 1 || hp.n_estimators == 1) {
        for (int t = 0; t < hp.n_estimators; ++t) build_tree(t);
    } else {
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        for (int w = 0; w < n_threads; ++w)
            workers.emplace_back([&]() {
                for (;;) {
                    int t = next.fetch_add(1);
                    if (t >= hp.n_estimators) return;
                    build_tree(t);
                }
            });
        for (auto& w : workers) w.join();
    }

    // mean decrease in impurity, summed per feature in fixed order so the
    // total is independent of which thread built which tree
    model.importance.assign(data.n_features(), 0.0);
    for (const auto& tree_imp : importance_per_tree)
        for (size_t f = 0; f < tree_imp.size(); ++f) model.importance[f] += tree_imp[f];
    double total = std::accumulate(model.importance.begin(), model.importance.end(), 0.0);
    if (total > 0.0)
        for (double& v : model.importance) v /= total;
    else
        for (double& v : model.importance) v = 1.0 / double(data.n_features());
    return model;
}

Prediction majority_vote(const std::vector<int>& votes) {
    int for_loop = 0;
    for (int v : votes) for_loop += v == 1 ? 1 : 0;
    Prediction p;
    p.prob = votes.empty() ? 0.0 : double(for_loop) / double(votes.size());
    p.label = 2 * for_loop > int(votes.size()) ? 1 : 0;
    return p;
}

Prediction predict(const ForestModel& model, const std::vector<double>& row) {
    if (row.size() != model.feature_names.size())
        throw ValidationError("feature count mismatch: model expects " +
                              std::to_string(model.feature_names.size()) + " features, got " +
                              std::to_string(row.size()));
    for (double v : row)
        if (!std::isfinite(v)) throw ValidationError("prediction input has a non-finite feature");

    std::vector<int> votes;
    votes.reserve(model.trees.size());
    for (const DecisionTree& tree : model.trees)
        votes.push_back(tree.vote(row, model.hyperparams.positive_class_weight));
    return majority_vote(votes);
}

const std::vector<double>& feature_importance(const ForestModel& model) { return model.importance; }

std::vector<uint8_t> save_model(const ForestModel& model) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'B', 'F', '1'});
    write_u32le(out, kModelVersion);

    write_u32le(out, uint32_t(model.feature_names.size()));
    for (const auto& name : model.feature_names) write_string(out, name);

    const ForestHyperparams& hp = model.hyperparams;
    write_u32le(out, uint32_t(hp.n_estimators));
    write_u32le(out, uint32_t(hp.max_features));
    write_u32le(out, uint32_t(hp.max_depth));
    write_u32le(out, uint32_t(hp.min_samples_split));
    write_u64le(out, hp.seed);
    out.push_back(hp.bootstrap ? 1 : 0);
    write_f64le(out, hp.positive_class_weight);
    write_u32le(out, model.trained_rows);
    write_u32le(out, model.trained_positives);

    write_u32le(out, uint32_t(model.trees.size()));
    for (const DecisionTree& tree : model.trees) {
        write_u32le(out, uint32_t(tree.nodes.size()));
        for (const TreeNode& n : tree.nodes) {
            out.push_back(n.feature);
            write_f64le(out, n.threshold);
            write_u32le(out, n.left);
            write_u32le(out, n.right);
            write_u32le(out, n.count0);
            write_u32le(out, n.count1);
        }
    }
    write_u32le(out, uint32_t(model.importance.size()));
    for (double v : model.importance) write_f64le(out, v);
    return out;
}

ForestModel load_model(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SBF1", 4) != 0)
        throw ParseError("bad model magic, expected SBF1");
    ModelReader r(bytes);
    r.skip(4);
    uint32_t version = r.u32();
    if (version != kModelVersion)
        throw ParseError("unsupported model format version " + std::to_string(version) +
                         ", expected " + std::to_string(kModelVersion));

    ForestModel model;
    uint32_t n_features = r.u32();
    for (uint32_t f = 0; f < n_features; ++f) model.feature_names.push_back(r.str());

    ForestHyperparams& hp = model.hyperparams;
    hp.n_estimators = int(r.u32());
    hp.max_features = int(r.u32());
    hp.max_depth = int(r.u32());
    hp.min_samples_split = int(r.u32());
    hp.seed = r.u64();
    hp.bootstrap = r.u8() != 0;
    hp.positive_class_weight = r.f64();
    model.trained_rows = r.u32();
    model.trained_positives = r.u32();

    uint32_t n_trees = r.u32();
    model.trees.resize(n_trees);
    for (uint32_t t = 0; t < n_trees; ++t) {
        uint32_t n_nodes = r.u32();
        auto& nodes = model.trees[t].nodes;
        nodes.resize(n_nodes);
        for (uint32_t i = 0; i < n_nodes; ++i) {
            TreeNode& n = nodes[i];
            n.feature = r.u8();
            n.threshold = r.f64();
            n.left = r.u32();
            n.right = r.u32();
            n.count0 = r.u32();
            n.count1 = r.u32();
            if (n.feature != TreeNode::kLeaf) {
                if (n.feature >= n_features) throw ParseError("model node references a bad feature");
                if (n.left >= n_nodes || n.right >= n_nodes || n.left <= i || n.right <= i)
                    throw ParseError("model node has invalid child offsets");
            }
        }
    }
    uint32_t n_imp = r.u32();
    for (uint32_t i = 0; i < n_imp; ++i) model.importance.push_back(r.f64());
    if (!r.done()) throw ParseError("trailing bytes after model data");
    return model;
}

void save_model_file(const ForestModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    auto bytes = save_model(model);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

ForestModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(bytes);
}

}  // namespace symbio
