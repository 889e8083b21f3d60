#include "symbio/vocabulary.hpp"

#include <algorithm>

namespace symbio {

bool VocabularyDB::maybe_insert(const SemanticVector& vec) {
    if (vec.frame_id % insert_period_ != 0) return false;
    if (!entries_.empty() && entries_.back().frame_id >= vec.frame_id) {
        if (std::any_of(entries_.begin(), entries_.end(),
                        [&](const SemanticVector& e) { return e.frame_id == vec.frame_id; }))
            throw ValidationError("vocabulary already holds frame " + std::to_string(vec.frame_id));
        // out-of-order insert: keep entries sorted
        auto pos = std::lower_bound(entries_.begin(), entries_.end(), vec.frame_id,
                                    [](const SemanticVector& e, int64_t id) { return e.frame_id < id; });
        entries_.insert(pos, vec);
        return true;
    }
    entries_.push_back(vec);
    return true;
}

std::span<const SemanticVector> VocabularyDB::query_candidates(int64_t query_frame_id) const {
    int64_t cutoff = query_frame_id - exclusion_window_;
    auto end = std::upper_bound(entries_.begin(), entries_.end(), cutoff,
                                [](int64_t id, const SemanticVector& e) { return id < e.frame_id; });
    return {entries_.data(), size_t(end - entries_.begin())};
}

}  // namespace symbio
