#include "symbio/filter.hpp"

#include <algorithm>

namespace symbio {

void FilterPolicy::validate() const {
    if (max_objects < 2) throw ValidationError("max_objects must be >= 2 (pairwise distances need two objects)");
    if (!(max_area_fraction > 0.0 && max_area_fraction <= 1.0))
        throw ValidationError("max_area_fraction must be in (0,1]");
    if (!(min_confidence >= 0.0 && min_confidence <= 1.0))
        throw ValidationError("min_confidence must be in [0,1]");
}

FilteredFrame filter_objects(const FrameObservation& frame, const FilterPolicy& policy) {
    policy.validate();

    FilteredFrame out;
    out.frame_id = frame.frame_id;
    out.width = frame.width;
    out.height = frame.height;

    const double max_area = policy.max_area_fraction * double(frame.width) * double(frame.height);
    for (size_t i = 0; i < frame.objects.size(); ++i) {
        const ObjectInstance& obj = frame.objects[i];
        if (policy.moving_labels.count(obj.label)) continue;
        if (obj.bbox.area() > max_area) continue;
        if (obj.confidence < policy.min_confidence) continue;
        out.objects.push_back({obj.label, obj.confidence, obj.bbox, i});
    }

    // Largest first; equal areas ordered by (label, original index) so the
    // truncation below is reproducible.
    std::stable_sort(out.objects.begin(), out.objects.end(),
                     [](const FilteredObject& a, const FilteredObject& b) {
                         double aa = a.bbox.area(), ab = b.bbox.area();
                         if (aa != ab) return aa > ab;
                         if (a.label != b.label) return a.label < b.label;
                         return a.original_index < b.original_index;
                     });
    if (out.objects.size() > size_t(policy.max_objects)) out.objects.resize(size_t(policy.max_objects));
    return out;
}

}  // namespace symbio
