#pragma once

#include <cstdint>
#include <vector>

#include "symbio/types.hpp"

namespace symbio {

// One re-traversal: frames [revisit_start, revisit_start+length) re-observe
// the scenes first seen at [origin_start, origin_start+length).
struct RevisitSpec {
    int64_t revisit_start = 0;
    int64_t origin_start = 0;
    int64_t length = 0;
};

/**
 * Synthetic sequence with known loop structure.
 *
 * Each first-visit frame gets an independent scene of static objects; revisit
 * frames re-render their origin scene with per-traversal scale drift plus
 * per-frame label/position noise. Descriptors are drawn per scene from a
 * shared bank and flipped per bit on rendering, so true loop pairs score high
 * under any reasonable BoW scheme while unrelated pairs stay apart.
 *
 * The default sizing reproduces the reference training scale: ~2453 labeled
 * candidate pairs with ~300 positives under the default vocabulary walk
 * (reference period 5, minimum separation 30).
 */
struct SyntheticConfig {
    int64_t n_frames = 184;
    int n_object_classes = 12;
    int objects_per_frame_min = 4;
    int objects_per_frame_max = 7;
    std::vector<RevisitSpec> loop_revisits;  // empty = use default_revisits(n_frames)
    double label_noise_rate = 0.1;           // per object per rendering
    double position_noise_sigma = 5.0;       // pixels
    double scale_drift = 0.02;               // per re-traversal shrink toward image center
    double descriptor_flip_rate = 0.05;      // per bit per rendering
    double object_dropout_rate = 0.03;       // per object per rendering, floor of 3 kept
    // fraction of revisit renderings with a scrambled layout: the place looks
    // the same (labels, descriptors) but object geometry is lost, as under a
    // strong viewpoint change
    double viewpoint_break_rate = 0.08;
    double moving_object_rate = 0.15;        // chance of one moving-class distractor per frame
    double oversized_object_rate = 0.05;     // chance of one over-half-image distractor
    double low_confidence_rate = 0.05;       // chance of one under-threshold distractor
    int image_width = 640;
    int image_height = 480;
    int descriptors_per_frame = 32;
    int descriptor_bank_size = 48;
    // ground-truth emission: label every (query, reference) with
    // reference on this period and query-reference >= min_separation
    int gt_reference_period = 5;
    int gt_min_separation = 30;
    uint64_t seed = 42;

    void validate() const;

    // Laps of 8 frames over the opening scene block, then a short partial
    // revisit; tuned so the default walk yields ~2453 pairs / ~300 positives.
    static std::vector<RevisitSpec> default_revisits(int64_t n_frames);
};

struct SyntheticDataset {
    std::vector<FrameObservation> frames;
    std::vector<std::vector<Descriptor>> descriptors;  // aligned with frames
    LoopLabelSet truth;
    std::vector<int64_t> place_of_frame;  // scene identity, first-visit frame id
    size_t n_pairs = 0;
    size_t n_positive = 0;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace symbio
