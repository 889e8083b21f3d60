#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "symbio/types.hpp"

namespace symbio {

// --- frames: one JSON record per line ---------------------------------------
// {"frame_id":N,"timestamp":T,"width":W,"height":H,"objects":[...]}
std::vector<FrameObservation> parse_frames(std::istream& in);
std::string serialize_frames(const std::vector<FrameObservation>& frames);

// --- ground truth: CSV `query,reference,is_loop` ----------------------------
LoopLabelSet parse_ground_truth(std::istream& in);
std::string serialize_ground_truth(const LoopLabelSet& labels);

// --- pair scores: CSV `query,reference,score` --------------------------------
PairScoreTable parse_pair_scores(std::istream& in);
std::string serialize_pair_scores(const PairScoreTable& table);

// --- binary descriptors ------------------------------------------------------
// One record per frame, in frame order: magic "SBD1", u32 count,
// count x 32 bytes. A stream may hold any number of records.
std::vector<std::vector<Descriptor>> parse_descriptors(std::istream& in);
void serialize_descriptors(std::ostream& out, const std::vector<std::vector<Descriptor>>& sets);

// --- file helpers ------------------------------------------------------------
std::vector<FrameObservation> load_frames(const std::filesystem::path& path);
LoopLabelSet load_ground_truth(const std::filesystem::path& path);
PairScoreTable load_pair_scores(const std::filesystem::path& path);
std::vector<std::vector<Descriptor>> load_descriptors(const std::filesystem::path& path);
void save_text(const std::filesystem::path& path, const std::string& contents);
void save_descriptors(const std::filesystem::path& path,
                      const std::vector<std::vector<Descriptor>>& sets);

// Shortest decimal form that parses back to the same double ("0.73", "1", ...).
std::string format_double(double v);

}  // namespace symbio
