#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symbio/errors.hpp"

namespace symbio {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double euclidean(const Point2& a, const Point2& b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

// One detected object as ingested from an external detector.
struct ObjectInstance {
    std::string label;
    double confidence = 0.0;  // in [0,1]
    BBox bbox;                // pixels, w>0, h>0

    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

// One frame's detections plus the declared image resolution.
struct FrameObservation {
    int64_t frame_id = 0;
    std::optional<double> timestamp;  // seconds, informational
    int width = 0;
    int height = 0;
    std::vector<ObjectInstance> objects;

    friend bool operator==(const FrameObservation&, const FrameObservation&) = default;
};

// Ground-truth loop annotations: (query, reference, is_loop) with
// query > reference and no duplicate pairs.
class LoopLabelSet {
public:
    void add(int64_t query, int64_t reference, bool is_loop) {
        if (query <= reference)
            throw ValidationError("loop pair (" + std::to_string(query) + "," +
                                  std::to_string(reference) + "): query must be > reference");
        auto [it, inserted] = pairs_.emplace(std::make_pair(query, reference), is_loop);
        if (!inserted)
            throw ValidationError("duplicate loop pair (" + std::to_string(query) + "," +
                                  std::to_string(reference) + ")");
    }

    // Order-insensitive lookup.
    std::optional<bool> lookup(int64_t a, int64_t b) const {
        auto q = std::max(a, b);
        auto r = std::min(a, b);
        auto it = pairs_.find({q, r});
        if (it == pairs_.end()) return std::nullopt;
        return it->second;
    }

    size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    size_t positive_count() const {
        size_t n = 0;
        for (const auto& [k, v] : pairs_) n += v ? 1 : 0;
        return n;
    }

    // sorted by (query, reference)
    const std::map<std::pair<int64_t, int64_t>, bool>& pairs() const { return pairs_; }

private:
    std::map<std::pair<int64_t, int64_t>, bool> pairs_;
};

// Precomputed vBoW similarity per frame pair, order-insensitive key.
class PairScoreTable {
public:
    void add(int64_t a, int64_t b, double score) {
        if (!(score >= 0.0 && score <= 1.0))
            throw ValidationError("pair score " + std::to_string(score) + " outside [0,1]");
        auto key = ordered(a, b);
        auto it = scores_.find(key);
        if (it != scores_.end()) {
            if (it->second != score)
                throw ValidationError("conflicting scores for pair (" + std::to_string(a) + "," +
                                      std::to_string(b) + ")");
            return;  // exact duplicate is harmless
        }
        scores_.emplace(key, score);
    }

    std::optional<double> lookup(int64_t a, int64_t b) const {
        auto it = scores_.find(ordered(a, b));
        if (it == scores_.end()) return std::nullopt;
        return it->second;
    }

    size_t size() const { return scores_.size(); }
    const std::map<std::pair<int64_t, int64_t>, double>& entries() const { return scores_; }

private:
    static std::pair<int64_t, int64_t> ordered(int64_t a, int64_t b) {
        return {std::min(a, b), std::max(a, b)};
    }

    std::map<std::pair<int64_t, int64_t>, double> scores_;
};

// 256-bit binary descriptor, 4 little-endian 64-bit words.
using Descriptor = std::array<uint64_t, 4>;

inline int hamming(const Descriptor& a, const Descriptor& b) {
    int d = 0;
    for (int i = 0; i < 4; ++i) d += std::popcount(a[i] ^ b[i]);
    return d;
}

}  // namespace symbio
