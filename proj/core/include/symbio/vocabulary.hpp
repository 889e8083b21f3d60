#pragma once

#include <span>
#include <vector>

#include "symbio/geometry.hpp"

namespace symbio {

/**
 * Online vocabulary of reference semantic vectors.
 *
 * Vectors are admitted every `insert_period` frames; candidate queries only
 * see entries at least `exclusion_window` frames older than the query, which
 * keeps trivially-adjacent frames out of the candidate set (the soft
 * temporal penalty handles the rest).
 */
class VocabularyDB {
public:
    explicit VocabularyDB(int insert_period = 5, int exclusion_window = 30)
        : insert_period_(insert_period), exclusion_window_(exclusion_window) {
        if (insert_period_ <= 0) throw ValidationError("insert_period must be positive");
        if (exclusion_window_ <= 0) throw ValidationError("exclusion_window must be positive");
    }

    // Admits the vector iff its frame_id falls on the insert period.
    // Sequential frame order is assumed; duplicate frame ids are rejected.
    bool maybe_insert(const SemanticVector& vec);

    // All entries with frame_id <= query_frame_id - exclusion_window,
    // ascending by frame_id.
    std::span<const SemanticVector> query_candidates(int64_t query_frame_id) const;

    const std::vector<SemanticVector>& entries() const { return entries_; }
    int insert_period() const { return insert_period_; }
    int exclusion_window() const { return exclusion_window_; }

private:
    int insert_period_;
    int exclusion_window_;
    std::vector<SemanticVector> entries_;  // sorted by frame_id
};

}  // namespace symbio
