#include "symbio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "symbio/rng.hpp"

namespace symbio {

namespace {

const std::vector<std::string> kStaticLabels = {
    "chair", "couch",    "potted plant", "tv",    "laptop", "book",  "cup",        "bottle",
    "keyboard", "mouse", "clock",        "vase",  "bowl",   "remote", "teddy bear", "microwave"};

const std::vector<std::string> kMovingLabels = {"person", "bicycle", "dog", "cat", "car"};

struct SceneObject {
    int label_idx;
    double cx, cy;  // center, pixels
    double w, h;
};

struct Scene {
    std::vector<SceneObject> objects;
    std::vector<Descriptor> prototype;
};

Descriptor random_descriptor(Rng& rng) {
    return {rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64()};
}

// Independent layout per scene: well-separated centers, distinct sizes.
Scene make_scene(const SyntheticConfig& cfg, const std::vector<Descriptor>& bank, uint64_t scene_seed) {
    Rng rng(scene_seed);
    Scene scene;
    const double margin = 60.0;
    const int count = rng.next_int(cfg.objects_per_frame_min, cfg.objects_per_frame_max);
    for (int i = 0; i < count; ++i) {
        SceneObject obj;
        obj.label_idx = rng.next_int(0, cfg.n_object_classes - 1);
        for (int attempt = 0; attempt < 64; ++attempt) {
            obj.cx = rng.uniform(margin, double(cfg.image_width) - margin);
            obj.cy = rng.uniform(margin, double(cfg.image_height) - margin);
            bool clear = true;
            for (const SceneObject& other : scene.objects) {
                double dx = obj.cx - other.cx, dy = obj.cy - other.cy;
                if (dx * dx + dy * dy < 30.0 * 30.0) clear = false;
            }
            if (clear) break;
        }
        obj.w = rng.uniform(40.0, 110.0);
        obj.h = rng.uniform(40.0, 110.0);
        scene.objects.push_back(obj);
    }
    scene.prototype.reserve(size_t(cfg.descriptors_per_frame));
    for (int i = 0; i < cfg.descriptors_per_frame; ++i)
        scene.prototype.push_back(bank[rng.next_below(bank.size())]);
    return scene;
}

BBox clamped_bbox(double cx, double cy, double w, double h, int img_w, int img_h) {
    w = std::min(w, double(img_w) - 2.0);
    h = std::min(h, double(img_h) - 2.0);
    double x = std::clamp(cx - 0.5 * w, 0.0, double(img_w) - w);
    double y = std::clamp(cy - 0.5 * h, 0.0, double(img_h) - h);
    return {x, y, w, h};
}

}  // namespace

void SyntheticConfig::validate() const {
    if (n_frames < 1) throw ValidationError("n_frames must be positive");
    if (n_object_classes < 2 || n_object_classes > int(kStaticLabels.size()))
        throw ValidationError("n_object_classes must be in [2," + std::to_string(kStaticLabels.size()) + "]");
    if (objects_per_frame_min < 2 || objects_per_frame_max < objects_per_frame_min)
        throw ValidationError("objects_per_frame range must satisfy 2 <= min <= max");
    for (double rate : {label_noise_rate, descriptor_flip_rate, object_dropout_rate, viewpoint_break_rate,
                        moving_object_rate, oversized_object_rate, low_confidence_rate})
        if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("noise rates must be in [0,1]");
    if (position_noise_sigma < 0.0) throw ValidationError("position_noise_sigma must be >= 0");
    if (scale_drift < 0.0) throw ValidationError("scale_drift must be >= 0");
    if (image_width < 200 || image_height < 200) throw ValidationError("image must be at least 200x200");
    if (descriptors_per_frame < 1) throw ValidationError("descriptors_per_frame must be positive");
    if (descriptor_bank_size < 2) throw ValidationError("descriptor_bank_size must be >= 2");
    if (gt_reference_period < 1) throw ValidationError("gt_reference_period must be positive");
    if (gt_min_separation < 1) throw ValidationError("gt_min_separation must be positive");

    auto revisits = loop_revisits.empty() ? default_revisits(n_frames) : loop_revisits;
    std::sort(revisits.begin(), revisits.end(),
              [](const RevisitSpec& a, const RevisitSpec& b) { return a.revisit_start < b.revisit_start; });
    int64_t prev_end = -1;
    for (const RevisitSpec& r : revisits) {
        if (r.length < 1) throw ValidationError("revisit length must be positive");
        if (r.origin_start < 0) throw ValidationError("revisit origin_start must be >= 0");
        if (r.origin_start + r.length > r.revisit_start)
            throw ValidationError("infeasible revisit at frame " + std::to_string(r.revisit_start) +
                                  ": longer than the span back to its origin");
        if (r.revisit_start + r.length > n_frames)
            throw ValidationError("revisit at frame " + std::to_string(r.revisit_start) +
                                  " runs past the end of the sequence");
        if (r.revisit_start <= prev_end)
            throw ValidationError("revisit intervals overlap at frame " + std::to_string(r.revisit_start));
        prev_end = r.revisit_start + r.length - 1;
    }
}

std::vector<RevisitSpec> SyntheticConfig::default_revisits(int64_t n_frames) {
    std::vector<RevisitSpec> revisits;
    const int64_t lap = 8;
    int64_t lap_block = std::min<int64_t>(176, (n_frames / lap) * lap);
    for (int64_t start = lap; start + lap <= lap_block; start += lap)
        revisits.push_back({start, 0, lap});
    if (lap_block >= 176 && n_frames >= 181) revisits.push_back({176, 0, 5});
    return revisits;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const auto revisits =
        cfg.loop_revisits.empty() ? SyntheticConfig::default_revisits(cfg.n_frames) : cfg.loop_revisits;

    // place identity: first-visit frame id, resolved through chained revisits
    std::vector<int64_t> place(size_t(cfg.n_frames));
    for (int64_t f = 0; f < cfg.n_frames; ++f) place[size_t(f)] = f;
    for (const RevisitSpec& r : revisits)
        for (int64_t t = 0; t < r.length; ++t)
            place[size_t(r.revisit_start + t)] = place[size_t(r.origin_start + t)];

    // traversal index per frame: how many times the place was seen before
    std::vector<int> traversal(size_t(cfg.n_frames), 0);
    {
        std::map<int64_t, int> seen;
        for (int64_t f = 0; f < cfg.n_frames; ++f) traversal[size_t(f)] = seen[place[size_t(f)]]++;
    }

    std::vector<Descriptor> bank;
    {
        Rng bank_rng(derive_seed(cfg.seed, "descriptor-bank"));
        bank.reserve(size_t(cfg.descriptor_bank_size));
        for (int i = 0; i < cfg.descriptor_bank_size; ++i) bank.push_back(random_descriptor(bank_rng));
    }

    std::map<int64_t, Scene> scenes;
    for (int64_t f = 0; f < cfg.n_frames; ++f) {
        int64_t p = place[size_t(f)];
        if (!scenes.count(p)) scenes.emplace(p, make_scene(cfg, bank, derive_seed(cfg.seed, "scene", uint64_t(p))));
    }

    SyntheticDataset out;
    out.place_of_frame = place;
    out.frames.reserve(size_t(cfg.n_frames));
    out.descriptors.reserve(size_t(cfg.n_frames));

    const double img_cx = 0.5 * cfg.image_width;
    const double img_cy = 0.5 * cfg.image_height;

    for (int64_t f = 0; f < cfg.n_frames; ++f) {
        const Scene& scene = scenes.at(place[size_t(f)]);
        Rng rng(derive_seed(cfg.seed, "frame", uint64_t(f)));

        FrameObservation frame;
        frame.frame_id = f;
        frame.timestamp = double(f) / 30.0;
        frame.width = cfg.image_width;
        frame.height = cfg.image_height;

        // re-traversals shrink toward the image center: same scene, new scale
        const double scale = 1.0 / (1.0 + cfg.scale_drift * double(traversal[size_t(f)]));

        int kept = 0;
        const int total = int(scene.objects.size());
        for (int i = 0; i < total; ++i) {
            const SceneObject& obj = scene.objects[size_t(i)];
            // dropout simulates missed detections but never starves a frame
            // below 3 static objects
            bool droppable = kept + (total - i - 1) >= 3;
            if (cfg.object_dropout_rate > 0.0 && rng.bernoulli(cfg.object_dropout_rate) && droppable)
                continue;
            ++kept;

            double cx = img_cx + (obj.cx - img_cx) * scale;
            double cy = img_cy + (obj.cy - img_cy) * scale;
            if (cfg.position_noise_sigma > 0.0) {
                cx += rng.normal(0.0, cfg.position_noise_sigma);
                cy += rng.normal(0.0, cfg.position_noise_sigma);
            }
            int label_idx = obj.label_idx;
            if (cfg.label_noise_rate > 0.0 && rng.bernoulli(cfg.label_noise_rate)) {
                int other = rng.next_int(0, cfg.n_object_classes - 2);
                label_idx = other >= label_idx ? other + 1 : other;
            }
            ObjectInstance inst;
            inst.label = kStaticLabels[size_t(label_idx)];
            inst.confidence = rng.uniform(0.75, 0.99);
            inst.bbox = clamped_bbox(cx, cy, obj.w * scale, obj.h * scale, cfg.image_width, cfg.image_height);
            frame.objects.push_back(std::move(inst));
        }

        // distractors the object filter is expected to remove
        if (rng.bernoulli(cfg.moving_object_rate)) {
            ObjectInstance inst;
            inst.label = kMovingLabels[rng.next_below(kMovingLabels.size())];
            inst.confidence = rng.uniform(0.75, 0.99);
            inst.bbox = clamped_bbox(rng.uniform(80, cfg.image_width - 80.0),
                                     rng.uniform(80, cfg.image_height - 80.0), rng.uniform(40, 160),
                                     rng.uniform(80, 200), cfg.image_width, cfg.image_height);
            frame.objects.push_back(std::move(inst));
        }
        if (rng.bernoulli(cfg.oversized_object_rate)) {
            ObjectInstance inst;
            inst.label = "dining table";
            inst.confidence = rng.uniform(0.75, 0.99);
            inst.bbox = clamped_bbox(img_cx, img_cy, 0.92 * cfg.image_width, 0.80 * cfg.image_height,
                                     cfg.image_width, cfg.image_height);
            frame.objects.push_back(std::move(inst));
        }
        if (rng.bernoulli(cfg.low_confidence_rate)) {
            ObjectInstance inst;
            inst.label = kStaticLabels[rng.next_below(size_t(cfg.n_object_classes))];
            inst.confidence = rng.uniform(0.2, 0.6);
            inst.bbox = clamped_bbox(rng.uniform(80, cfg.image_width - 80.0),
                                     rng.uniform(80, cfg.image_height - 80.0), rng.uniform(40, 110),
                                     rng.uniform(40, 110), cfg.image_width, cfg.image_height);
            frame.objects.push_back(std::move(inst));
        }

        std::vector<Descriptor> descs = scene.prototype;
        if (cfg.descriptor_flip_rate > 0.0) {
            for (Descriptor& d : descs)
                for (int w = 0; w < 4; ++w)
                    for (int b = 0; b < 64; ++b)
                        if (rng.bernoulli(cfg.descriptor_flip_rate)) d[size_t(w)] ^= 1ull << b;
        }

        out.frames.push_back(std::move(frame));
        out.descriptors.push_back(std::move(descs));
    }

    // labeled candidate pairs for the default vocabulary walk
    for (int64_t q = 0; q < cfg.n_frames; ++q) {
        for (int64_t r = 0; r <= q - cfg.gt_min_separation; r += cfg.gt_reference_period) {
            bool is_loop = place[size_t(q)] == place[size_t(r)];
            out.truth.add(q, r, is_loop);
            ++out.n_pairs;
            if (is_loop) ++out.n_positive;
        }
    }
    return out;
}

}  // namespace symbio
