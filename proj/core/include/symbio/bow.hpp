#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "symbio/types.hpp"

namespace symbio {

// Sparse L1-normalized bag-of-words histogram; empty for descriptor-less frames.
struct BowVector {
    std::map<uint32_t, double> weights;  // leaf id -> weight, sum == 1 when non-empty

    bool empty() const { return weights.empty(); }
};

/**
 * Minimal vocabulary tree over 256-bit binary descriptors.
 *
 * Hierarchical k-medians under Hamming distance: centers start from a seeded
 * k-means++-style pick and are refined as bitwise majorities. Leaves carry
 * idf weights ln(N / N_leaf) over the training frames. This is plumbing so
 * runs are self-contained; a precomputed pair-score table always wins when
 * one is supplied.
 */
class VocabTree {
public:
    struct Node {
        uint32_t parent = 0;  // root points at itself
        Descriptor center{};
        double idf = 0.0;                // leaves only
        std::vector<uint32_t> children;  // creation order; empty for leaves
    };

    static VocabTree build(const std::vector<std::vector<Descriptor>>& frame_descriptors,
                           int branching = 9, int depth = 3, uint64_t seed = 0);

    BowVector encode(const std::vector<Descriptor>& descriptors) const;

    int branching() const { return branching_; }
    int depth() const { return depth_; }
    const std::vector<Node>& nodes() const { return nodes_; }

    // binary format: magic SBV1, u32 k, u32 L, u32 node count,
    // then per node: u32 parent, 32-byte center, f64 idf (little-endian).
    std::vector<uint8_t> save() const;
    static VocabTree load(const std::vector<uint8_t>& bytes);
    void save_file(const std::filesystem::path& path) const;
    static VocabTree load_file(const std::filesystem::path& path);

private:
    int branching_ = 9;
    int depth_ = 3;
    std::vector<Node> nodes_;
};

// 1 - 0.5 * sum |v1 - v2|; zero when either side is empty.
double similarity(const BowVector& v1, const BowVector& v2);

}  // namespace symbio
