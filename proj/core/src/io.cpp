#include "symbio/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace symbio {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

int64_t parse_int_field(const std::string& field, const char* name, size_t line_no) {
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError(line_no, std::string("invalid integer in column '") + name + "': '" + field + "'");
    return value;
}

double parse_double_field(const std::string& field, const char* name, size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError(line_no, std::string("invalid number in column '") + name + "': '" + field + "'");
    return value;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

void expect_header(std::istream& in, const char* expected) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, std::string("missing header, expected '") + expected + "'");
    if (strip_cr(line) != expected)
        throw ParseError(1, "bad header '" + line + "', expected '" + expected + "'");
}

void validate_object(const ObjectInstance& obj, int width, int height, size_t line_no) {
    if (obj.label.empty()) throw ParseError(line_no, "object label is empty");
    if (!(obj.confidence >= 0.0 && obj.confidence <= 1.0))
        throw ParseError(line_no, "field 'confidence' = " + format_double(obj.confidence) +
                                      " outside [0,1] for label '" + obj.label + "'");
    if (!(obj.bbox.w > 0.0) || !(obj.bbox.h > 0.0))
        throw ParseError(line_no, "field 'bbox' has non-positive size for label '" + obj.label + "'");
    if (obj.bbox.x < 0.0 || obj.bbox.y < 0.0 || obj.bbox.x + obj.bbox.w > double(width) ||
        obj.bbox.y + obj.bbox.h > double(height))
        throw ParseError(line_no, "field 'bbox' outside image bounds for label '" + obj.label + "'");
}

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed, size_t line_no) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ParseError(line_no, "unknown field '" + key + "'");
    }
}

uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(std::string("truncated descriptor stream (") + what + ")");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// --- frames ------------------------------------------------------------------

std::vector<FrameObservation> parse_frames(std::istream& in) {
    std::vector<FrameObservation> frames;
    std::set<int64_t> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;

        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed record: ") + e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not an object");
        check_keys(j, {"frame_id", "timestamp", "width", "height", "objects"}, line_no);

        FrameObservation frame;
        if (!j.contains("frame_id") || !j["frame_id"].is_number_integer())
            throw ParseError(line_no, "field 'frame_id' missing or not an integer");
        frame.frame_id = j["frame_id"].get<int64_t>();
        if (frame.frame_id < 0) throw ParseError(line_no, "field 'frame_id' is negative");
        if (j.contains("timestamp")) {
            if (!j["timestamp"].is_number()) throw ParseError(line_no, "field 'timestamp' is not a number");
            frame.timestamp = j["timestamp"].get<double>();
        }
        if (!j.contains("width") || !j["width"].is_number_integer() || j["width"].get<int64_t>() <= 0)
            throw ParseError(line_no, "field 'width' missing or not a positive integer");
        if (!j.contains("height") || !j["height"].is_number_integer() || j["height"].get<int64_t>() <= 0)
            throw ParseError(line_no, "field 'height' missing or not a positive integer");
        frame.width = j["width"].get<int>();
        frame.height = j["height"].get<int>();
        if (!j.contains("objects") || !j["objects"].is_array())
            throw ParseError(line_no, "field 'objects' missing or not an array");

        for (const auto& jo : j["objects"]) {
            if (!jo.is_object()) throw ParseError(line_no, "object entry is not an object");
            check_keys(jo, {"label", "confidence", "bbox"}, line_no);
            ObjectInstance obj;
            if (!jo.contains("label") || !jo["label"].is_string())
                throw ParseError(line_no, "field 'label' missing or not a string");
            obj.label = jo["label"].get<std::string>();
            if (!jo.contains("confidence") || !jo["confidence"].is_number())
                throw ParseError(line_no, "field 'confidence' missing or not a number");
            obj.confidence = jo["confidence"].get<double>();
            if (!jo.contains("bbox") || !jo["bbox"].is_array() || jo["bbox"].size() != 4)
                throw ParseError(line_no, "field 'bbox' must be an array [x,y,w,h]");
            for (const auto& c : jo["bbox"])
                if (!c.is_number()) throw ParseError(line_no, "field 'bbox' has a non-numeric entry");
            obj.bbox = {jo["bbox"][0].get<double>(), jo["bbox"][1].get<double>(),
                        jo["bbox"][2].get<double>(), jo["bbox"][3].get<double>()};
            validate_object(obj, frame.width, frame.height, line_no);
            frame.objects.push_back(std::move(obj));
        }

        if (!seen_ids.insert(frame.frame_id).second)
            throw ParseError(line_no, "duplicate frame_id " + std::to_string(frame.frame_id));
        frames.push_back(std::move(frame));
    }
    std::sort(frames.begin(), frames.end(),
              [](const FrameObservation& a, const FrameObservation& b) { return a.frame_id < b.frame_id; });
    return frames;
}

std::string serialize_frames(const std::vector<FrameObservation>& frames) {
    std::string out;
    for (const auto& frame : frames) {
        ordered_json j;
        j["frame_id"] = frame.frame_id;
        if (frame.timestamp) j["timestamp"] = *frame.timestamp;
        j["width"] = frame.width;
        j["height"] = frame.height;
        j["objects"] = ordered_json::array();
        for (const auto& obj : frame.objects) {
            ordered_json jo;
            jo["label"] = obj.label;
            jo["confidence"] = obj.confidence;
            jo["bbox"] = {obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h};
            j["objects"].push_back(std::move(jo));
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

// --- ground truth ------------------------------------------------------------

LoopLabelSet parse_ground_truth(std::istream& in) {
    expect_header(in, "query,reference,is_loop");
    LoopLabelSet labels;
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 3) throw ParseError(line_no, "expected 3 columns, got " + std::to_string(fields.size()));
        int64_t query = parse_int_field(fields[0], "query", line_no);
        int64_t reference = parse_int_field(fields[1], "reference", line_no);
        bool is_loop;
        if (fields[2] == "1")
            is_loop = true;
        else if (fields[2] == "0")
            is_loop = false;
        else
            throw ParseError(line_no, "column 'is_loop' must be 0 or 1, got '" + fields[2] + "'");
        try {
            labels.add(query, reference, is_loop);
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return labels;
}

std::string serialize_ground_truth(const LoopLabelSet& labels) {
    std::string out = "query,reference,is_loop\n";
    for (const auto& [pair, is_loop] : labels.pairs()) {
        out += std::to_string(pair.first);
        out += ',';
        out += std::to_string(pair.second);
        out += ',';
        out += is_loop ? '1' : '0';
        out += '\n';
    }
    return out;
}

// --- pair scores ---------------------------------------------------------------

PairScoreTable parse_pair_scores(std::istream& in) {
    expect_header(in, "query,reference,score");
    PairScoreTable table;
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 3) throw ParseError(line_no, "expected 3 columns, got " + std::to_string(fields.size()));
        int64_t query = parse_int_field(fields[0], "query", line_no);
        int64_t reference = parse_int_field(fields[1], "reference", line_no);
        double score = parse_double_field(fields[2], "score", line_no);
        try {
            table.add(query, reference, score);
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return table;
}

std::string serialize_pair_scores(const PairScoreTable& table) {
    std::string out = "query,reference,score\n";
    for (const auto& [pair, score] : table.entries()) {
        out += std::to_string(pair.second);  // larger id first: query column
        out += ',';
        out += std::to_string(pair.first);
        out += ',';
        out += format_double(score);
        out += '\n';
    }
    return out;
}

// --- descriptors ----------------------------------------------------------------

std::vector<std::vector<Descriptor>> parse_descriptors(std::istream& in) {
    std::vector<std::vector<Descriptor>> sets;
    char magic[4];
    while (in.read(magic, 4)) {
        if (std::memcmp(magic, "SBD1", 4) != 0) throw ParseError("bad descriptor magic, expected SBD1");
        uint32_t count = read_u32(in, "count");
        std::vector<Descriptor> set(count);
        for (uint32_t i = 0; i < count; ++i) {
            unsigned char raw[32];
            if (!in.read(reinterpret_cast<char*>(raw), 32))
                throw ParseError("truncated descriptor stream (descriptor data)");
            for (int w = 0; w < 4; ++w) {
                uint64_t word = 0;
                for (int b = 7; b >= 0; --b) word = word << 8 | raw[w * 8 + b];
                set[i][w] = word;
            }
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

void serialize_descriptors(std::ostream& out, const std::vector<std::vector<Descriptor>>& sets) {
    for (const auto& set : sets) {
        out.write("SBD1", 4);
        write_u32(out, uint32_t(set.size()));
        for (const auto& desc : set) {
            unsigned char raw[32];
            for (int w = 0; w < 4; ++w)
                for (int b = 0; b < 8; ++b) raw[w * 8 + b] = static_cast<unsigned char>(desc[w] >> (8 * b));
            out.write(reinterpret_cast<const char*>(raw), 32);
        }
    }
}

// --- file helpers ----------------------------------------------------------------

namespace {
std::ifstream open_input(const std::filesystem::path& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}
}  // namespace

std::vector<FrameObservation> load_frames(const std::filesystem::path& path) {
    auto in = open_input(path, false);
    return parse_frames(in);
}

LoopLabelSet load_ground_truth(const std::filesystem::path& path) {
    auto in = open_input(path, false);
    return parse_ground_truth(in);
}

PairScoreTable load_pair_scores(const std::filesystem::path& path) {
    auto in = open_input(path, false);
    return parse_pair_scores(in);
}

std::vector<std::vector<Descriptor>> load_descriptors(const std::filesystem::path& path) {
    auto in = open_input(path, true);
    return parse_descriptors(in);
}

void save_text(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);  // binary: keep LF endings as-is
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), std::streamsize(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void save_descriptors(const std::filesystem::path& path,
                      const std::vector<std::vector<Descriptor>>& sets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    serialize_descriptors(out, sets);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace symbio
