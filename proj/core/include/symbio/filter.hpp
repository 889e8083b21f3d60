#pragma once

#include <set>
#include <string>
#include <vector>

#include "symbio/types.hpp"

namespace symbio {

// Which detections survive into the spatial/semantic stages.
struct FilterPolicy {
    std::set<std::string> moving_labels = {"person", "bicycle", "car",     "motorcycle", "bus",
                                           "truck",  "scooter", "bird",    "cat",        "dog"};
    double max_area_fraction = 0.5;  // of image area; catches e.g. a table covering the scene
    int max_objects = 8;             // keep only the N largest survivors
    double min_confidence = 0.7;

    void validate() const;
};

struct FilteredObject {
    std::string label;
    double confidence = 0.0;
    BBox bbox;
    size_t original_index = 0;  // position in FrameObservation::objects
};

struct FilteredFrame {
    int64_t frame_id = 0;
    int width = 0;
    int height = 0;
    std::vector<FilteredObject> objects;  // sorted by area descending

    // Frames with fewer than 2 surviving objects carry no usable geometry;
    // downstream features fall back to sentinels and vBoW.
    bool spatially_usable() const { return objects.size() >= 2; }
};

FilteredFrame filter_objects(const FrameObservation& frame, const FilterPolicy& policy);

}  // namespace symbio
