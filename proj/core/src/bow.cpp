#include "symbio/bow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "symbio/rng.hpp"

namespace symbio {

namespace {

struct TaggedDescriptor {
    Descriptor desc;
    uint32_t frame;
};

// k-means++-style seeding: first center uniform, then squared-Hamming
// weighted picks. Degenerate all-zero weights fall back to the first
// unchosen descriptor, which keeps identical-input builds deterministic.
std::vector<Descriptor> init_centers(const std::vector<TaggedDescriptor>& descs,
                                     const std::vector<uint32_t>& members, int k, Rng& rng) {
    std::vector<Descriptor> centers;
    centers.reserve(size_t(k));
    std::vector<double> weight(members.size());
    centers.push_back(descs[members[rng.next_below(members.size())]].desc);
    while (int(centers.size()) < k) {
        double total = 0.0;
        for (size_t i = 0; i < members.size(); ++i) {
            int best = 257;
            for (const Descriptor& c : centers) best = std::min(best, hamming(descs[members[i]].desc, c));
            weight[i] = double(best) * double(best);
            total += weight[i];
        }
        size_t pick = 0;
        if (total == 0.0) {
            pick = centers.size() < members.size() ? centers.size() : 0;
        } else {
            double target = rng.next_double() * total;
            double acc = 0.0;
            for (size_t i = 0; i < members.size(); ++i) {
                acc += weight[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(descs[members[pick]].desc);
    }
    return centers;
}

Descriptor bitwise_majority(const std::vector<TaggedDescriptor>& descs,
                            const std::vector<uint32_t>& members) {
    std::array<int, 256> ones{};
    for (uint32_t m : members)
        for (int w = 0; w < 4; ++w)
            for (int b = 0; b < 64; ++b)
                if (descs[m].desc[w] >> b & 1ull) ++ones[w * 64 + b];
    Descriptor out{};
    const int half = int(members.size());
    for (int bit = 0; bit < 256; ++bit)
        if (2 * ones[bit] >= half) out[bit / 64] |= 1ull << (bit % 64);  // ties set the bit
    return out;
}

void write_u32le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
}

void write_u64le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

class Reader {
public:
    Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}
    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(bytes_[pos_]) | uint32_t(bytes_[pos_ + 1]) << 8 |
                     uint32_t(bytes_[pos_ + 2]) << 16 | uint32_t(bytes_[pos_ + 3]) << 24;
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
    void raw(void* dst, size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(size_t n) const {
        if (pos_ + n > bytes_.size()) throw ParseError("truncated vocabulary file");
    }
    const std::vector<uint8_t>& bytes_;
    size_t pos_ = 0;
};

}  // namespace

VocabTree VocabTree::build(const std::vector<std::vector<Descriptor>>& frame_descriptors,
                           int branching, int depth, uint64_t seed) {
    if (branching < 2) throw ValidationError("vocabulary branching factor must be >= 2");
    if (depth < 1) throw ValidationError("vocabulary depth must be >= 1");

    std::vector<TaggedDescriptor> descs;
    for (uint32_t f = 0; f < frame_descriptors.size(); ++f)
        for (const Descriptor& d : frame_descriptors[f]) descs.push_back({d, f});
    if (descs.size() < size_t(branching))
        throw ValidationError("need at least " + std::to_string(branching) +
                              " descriptors to build a vocabulary, got " + std::to_string(descs.size()));

    VocabTree tree;
    tree.branching_ = branching;
    tree.depth_ = depth;
    tree.nodes_.push_back({});  // root, parent = self

    // Depth-first expansion; node ids are assigned in creation order, which
    // both fixes the encode tie-break and keeps builds reproducible.
    struct Pending {
        uint32_t node;
        std::vector<uint32_t> members;
        int level;
    };
    std::vector<uint32_t> all(descs.size());
    for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<Pending> stack;
    stack.push_back({0, std::move(all), 0});

    std::vector<std::vector<uint32_t>> leaf_members_by_node(1);

    while (!stack.empty()) {
        Pending work = std::move(stack.back());
        stack.pop_back();

        if (work.level == depth || work.members.size() < size_t(branching)) {
            leaf_members_by_node.resize(std::max(leaf_members_by_node.size(), size_t(work.node) + 1));
            leaf_members_by_node[work.node] = std::move(work.members);
            continue;
        }

        Rng rng(derive_seed(seed, "bow-node", work.node));
        std::vector<Descriptor> centers = init_centers(descs, work.members, branching, rng);
        std::vector<int> assign(work.members.size(), 0);

        for (int iter = 0; iter < 8; ++iter) {
            bool moved = false;
            for (size_t i = 0; i < work.members.size(); ++i) {
                int best_c = 0;
                int best_d = hamming(descs[work.members[i]].desc, centers[0]);
                for (int c = 1; c < branching; ++c) {
                    int d = hamming(descs[work.members[i]].desc, centers[size_t(c)]);
                    if (d < best_d) {
                        best_d = d;
                        best_c = c;
                    }
                }
                if (assign[i] != best_c) {
                    assign[i] = best_c;
                    moved = true;
                }
            }
            std::vector<std::vector<uint32_t>> groups(static_cast<size_t>(branching));
            for (size_t i = 0; i < work.members.size(); ++i) groups[size_t(assign[i])].push_back(work.members[i]);
            bool changed = false;
            for (int c = 0; c < branching; ++c) {
                if (groups[size_t(c)].empty()) continue;
                Descriptor next = bitwise_majority(descs, groups[size_t(c)]);
                if (next != centers[size_t(c)]) {
                    centers[size_t(c)] = next;
                    changed = true;
                }
            }
            if (!moved && !changed) break;
        }

        std::vector<std::vector<uint32_t>> groups(static_cast<size_t>(branching));
        for (size_t i = 0; i < work.members.size(); ++i) groups[size_t(assign[i])].push_back(work.members[i]);

        // children appear in center order; empty clusters become empty leaves
        std::vector<Pending> children;
        for (int c = 0; c < branching; ++c) {
            uint32_t id = uint32_t(tree.nodes_.size());
            Node node;
            node.parent = work.node;
            node.center = centers[size_t(c)];
            tree.nodes_.push_back(node);
            tree.nodes_[work.node].children.push_back(id);
            children.push_back({id, std::move(groups[size_t(c)]), work.level + 1});
        }
        // push in reverse so the depth-first order follows center order
        for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
    }

    // idf over training frames
    const double n_frames = double(frame_descriptors.size());
    leaf_members_by_node.resize(tree.nodes_.size());
    for (uint32_t id = 0; id < tree.nodes_.size(); ++id) {
        if (!tree.nodes_[id].children.empty()) continue;
        std::set<uint32_t> frames;
        for (uint32_t m : leaf_members_by_node[id]) frames.insert(descs[m].frame);
        if (!frames.empty() && n_frames > 0.0)
            tree.nodes_[id].idf = std::log(n_frames / double(frames.size()));
    }
    return tree;
}

BowVector VocabTree::encode(const std::vector<Descriptor>& descriptors) const {
    std::map<uint32_t, double> tally;
    for (const Descriptor& d : descriptors) {
        uint32_t node = 0;
        while (!nodes_[node].children.empty()) {
            uint32_t best = nodes_[node].children[0];
            int best_d = hamming(d, nodes_[best].center);
            for (size_t c = 1; c < nodes_[node].children.size(); ++c) {
                uint32_t child = nodes_[node].children[c];
                int dist = hamming(d, nodes_[child].center);
                if (dist < best_d) {  // ties keep the lowest child id
                    best_d = dist;
                    best = child;
                }
            }
            node = best;
        }
        tally[node] += nodes_[node].idf;
    }

    BowVector vec;
    double total = 0.0;
    for (const auto& [leaf, w] : tally) total += w;
    if (total <= 0.0) return vec;
    for (const auto& [leaf, w] : tally)
        if (w > 0.0) vec.weights[leaf] = w / total;
    return vec;
}

double similarity(const BowVector& v1, const BowVector& v2) {
    if (v1.empty() || v2.empty()) return 0.0;
    double l1 = 0.0;
    auto it1 = v1.weights.begin();
    auto it2 = v2.weights.begin();
    while (it1 != v1.weights.end() || it2 != v2.weights.end()) {
        if (it2 == v2.weights.end() || (it1 != v1.weights.end() && it1->first < it2->first)) {
            l1 += it1->second;
            ++it1;
        } else if (it1 == v1.weights.end() || it2->first < it1->first) {
            l1 += it2->second;
            ++it2;
        } else {
            l1 += std::abs(it1->second - it2->second);
            ++it1;
            ++it2;
        }
    }
    double score = 1.0 - 0.5 * l1;
    return std::clamp(score, 0.0, 1.0);
}

std::vector<uint8_t> VocabTree::save() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'B', 'V', '1'});
    write_u32le(out, uint32_t(branching_));
    write_u32le(out, uint32_t(depth_));
    write_u32le(out, uint32_t(nodes_.size()));
    for (const Node& n : nodes_) {
        write_u32le(out, n.parent);
        for (int w = 0; w < 4; ++w) write_u64le(out, n.center[size_t(w)]);
        uint64_t bits;
        std::memcpy(&bits, &n.idf, 8);
        write_u64le(out, bits);
    }
    return out;
}

VocabTree VocabTree::load(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SBV1", 4) != 0)
        throw ParseError("bad vocabulary magic, expected SBV1");
    Reader r(bytes);
    uint32_t magic_skip[1];
    r.raw(magic_skip, 4);

    VocabTree tree;
    tree.branching_ = int(r.u32());
    tree.depth_ = int(r.u32());
    uint32_t count = r.u32();
    tree.nodes_.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        Node& n = tree.nodes_[i];
        n.parent = r.u32();
        for (int w = 0; w < 4; ++w) n.center[size_t(w)] = r.u64();
        n.idf = r.f64();
        if (i > 0) {
            if (n.parent >= i) throw ParseError("vocabulary node " + std::to_string(i) + " has invalid parent");
            tree.nodes_[n.parent].children.push_back(i);
        }
    }
    if (!r.done()) throw ParseError("trailing bytes after vocabulary data");
    return tree;
}

void VocabTree::save_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    auto bytes = save();
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

VocabTree VocabTree::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load(bytes);
}

}  // namespace symbio
