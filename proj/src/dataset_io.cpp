#include "sdtrack/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sdtrack/errors.hpp"
#include "sdtrack/image_io.hpp"

namespace sdt {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        std::string_view line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = pos + 1;
    }
    return lines;
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

double parse_double(std::string_view field, const std::string& where) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw IoError(where + ": bad number '" + std::string(field) + "'");
    }
    return v;
}

int parse_int(std::string_view field, const std::string& where) {
    int v = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw IoError(where + ": bad integer '" + std::string(field) + "'");
    return v;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

bool near(double a, double b) { return std::abs(a - b) <= kGtConsistencyTolerance; }
bool near(const Point2& a, const Point2& b) { return near(a.x, b.x) && near(a.y, b.y); }

}  // namespace

std::string frame_file_name(int frame) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d.png", frame);
    return buf;
}

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw ValidationError("cannot format number");
    return {buf.data(), ptr};
}

std::string gt_csv_text(const SequenceAnnotation& ann) {
    std::string out = kGtHeader;
    out += '\n';
    for (int f = 0; f < ann.frame_count(); ++f) {
        for (const AnnotatedObject& o : ann.frames[static_cast<std::size_t>(f)]) {
            const double fields[] = {o.endpoints.left.x, o.endpoints.left.y, o.endpoints.right.x,
                                     o.endpoints.right.y, o.state.center.x,  o.state.center.y,
                                     o.state.length,      o.state.width,      o.state.angle,
                                     o.state.speed,       o.bbox.x_min,       o.bbox.y_min,
                                     o.bbox.width(),      o.bbox.height()};
            out += std::to_string(f + 1);
            out += ',';
            out += std::to_string(o.track_id);
            for (double v : fields) {
                out += ',';
                out += format_number(v);
            }
            out += '\n';
        }
    }
    return out;
}

SequenceAnnotation parse_gt_csv(const std::string& text, int frame_count, int width, int height) {
    SequenceAnnotation ann;
    ann.width = width;
    ann.height = height;
    ann.frames.resize(static_cast<std::size_t>(std::max(frame_count, 0)));

    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && blank(lines[first])) ++first;
    if (first == lines.size()) return ann;
    if (lines[first] != kGtHeader) throw IoError("gt.csv: unexpected header '" + std::string(lines[first]) + "'");

    std::set<std::pair<int, int>> seen;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (blank(lines[i])) continue;
        const std::string where = "gt.csv line " + std::to_string(i + 1);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 16) {
            throw IoError(where + ": expected 16 fields, found " + std::to_string(fields.size()));
        }
        const int frame = parse_int(fields[0], where);
        const int track = parse_int(fields[1], where);
        const std::string who = where + " (frame " + std::to_string(frame) + ", track " + std::to_string(track) + ")";
        double v[14];
        for (int k = 0; k < 14; ++k) v[k] = parse_double(fields[static_cast<std::size_t>(k + 2)], who);

        if (frame < 1 || frame > frame_count) {
            throw IoError(who + ": frame outside 1.." + std::to_string(frame_count));
        }
        if (track < 1) throw IoError(who + ": track id must be positive");
        if (!seen.insert({frame, track}).second) throw IoError(who + ": duplicate row");

        AnnotatedObject o;
        o.track_id = track;
        o.endpoints = {{v[0], v[1]}, {v[2], v[3]}};
        o.state = {{v[4], v[5]}, v[6], v[7], v[8], v[9]};
        try {
            o.state.validate();
        } catch (const ValidationError& e) {
            throw IoError(who + ": " + e.what());
        }
        const double span = o.endpoints.length();
        if (!near(span, o.state.length)) {
            throw IoError(who + ": length " + format_number(o.state.length) + " does not match endpoint distance " +
                          format_number(span));
        }
        const EndpointPair expected = endpoints_from_state(o.state);
        if (!near(expected.left, o.endpoints.left) || !near(expected.right, o.endpoints.right)) {
            throw IoError(who + ": endpoints inconsistent with center, length and angle");
        }
        o.bbox = bbox_from_state(o.state);
        if (!near(o.bbox.x_min, v[10]) || !near(o.bbox.y_min, v[11]) || !near(o.bbox.width(), v[12]) ||
            !near(o.bbox.height(), v[13])) {
            throw IoError(who + ": bounding box is not the hull of the rotated rectangle");
        }
        ann.frames[static_cast<std::size_t>(frame - 1)].push_back(o);
    }
    return ann;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_sequence(const fs::path& dir, const std::vector<Grid2D>& frames, const SequenceAnnotation& ann,
                    const std::string& meta_json) {
    if (static_cast<int>(frames.size()) != ann.frame_count()) {
        throw ValidationError("frame count does not match annotation");
    }
    if (!ann.masks.empty() && ann.masks.size() != frames.size()) {
        throw ValidationError("mask count does not match frame count");
    }
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        write_png_gray8(dir / "frames" / frame_file_name(static_cast<int>(t) + 1), frames[t]);
    }
    if (!ann.masks.empty()) {
        fs::create_directories(dir / "masks", ec);
        if (ec) throw IoError("cannot create " + (dir / "masks").string() + ": " + ec.message());
        for (std::size_t t = 0; t < ann.masks.size(); ++t) {
            Grid2D m = ann.masks[t];
            for (double& v : m.values()) v = v > 0.0 ? 255.0 : 0.0;
            write_png_gray8(dir / "masks" / frame_file_name(static_cast<int>(t) + 1), m);
        }
    }
    write_text_file(dir / "gt.csv", gt_csv_text(ann));
    write_text_file(dir / "meta.json", meta_json);
}

int count_frames(const fs::path& dir) {
    const fs::path frames_dir = dir / "frames";
    if (!fs::is_directory(frames_dir)) throw IoError("missing frames directory in " + dir.string());
    std::vector<int> indices;
    for (const auto& entry : fs::directory_iterator(frames_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() != 10 || name.substr(6) != ".png") continue;
        int idx = 0;
        const auto [ptr, ec] = std::from_chars(name.data(), name.data() + 6, idx);
        if (ec != std::errc() || ptr != name.data() + 6) continue;
        indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] != static_cast<int>(i) + 1) {
            throw IoError("missing frame " + frame_file_name(static_cast<int>(i) + 1) + " in " + frames_dir.string());
        }
    }
    return static_cast<int>(indices.size());
}

SequenceAnnotation read_annotation(const fs::path& dir) {
    const int frames = count_frames(dir);
    int width = 0;
    int height = 0;
    if (frames > 0) {
        const Grid2D first = read_png_gray(dir / "frames" / frame_file_name(1));
        width = first.width();
        height = first.height();
    }
    try {
        return parse_gt_csv(read_text_file(dir / "gt.csv"), frames, width, height);
    } catch (const IoError& e) {
        throw IoError(dir.string() + ": " + e.what());
    }
}

LoadedSequence read_sequence(const fs::path& dir) {
    LoadedSequence seq;
    const int frames = count_frames(dir);
    for (int t = 1; t <= frames; ++t) seq.frames.push_back(read_png_gray(dir / "frames" / frame_file_name(t)));
    const int w = frames > 0 ? seq.frames.front().width() : 0;
    const int h = frames > 0 ? seq.frames.front().height() : 0;
    for (const Grid2D& f : seq.frames) {
        if (f.width() != w || f.height() != h) throw IoError(dir.string() + ": frames differ in size");
    }
    try {
        seq.annotation = parse_gt_csv(read_text_file(dir / "gt.csv"), frames, w, h);
    } catch (const IoError& e) {
        throw IoError(dir.string() + ": " + e.what());
    }
    if (fs::is_directory(dir / "masks")) {
        for (int t = 1; t <= frames; ++t) {
            const fs::path p = dir / "masks" / frame_file_name(t);
            if (!fs::exists(p)) throw IoError("missing mask " + p.string());
            Grid2D m = read_png_gray(p);
            for (double& v : m.values()) v = v > 0.0 ? 1.0 : 0.0;
            seq.annotation.masks.push_back(std::move(m));
        }
    }
    if (fs::exists(dir / "meta.json")) seq.meta_json = read_text_file(dir / "meta.json");
    return seq;
}

std::vector<std::string> list_sequences(const fs::path& split_dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(split_dir)) throw IoError("not a directory: " + split_dir.string());
    for (const auto& entry : fs::directory_iterator(split_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "gt.csv")) out.push_back(entry.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string tensor_map_bytes(const Grid2D& grid) {
    std::string out = "SDTM";
    put_u32(out, static_cast<std::uint32_t>(grid.width()));
    put_u32(out, static_cast<std::uint32_t>(grid.height()));
    put_u32(out, static_cast<std::uint32_t>(grid.channels()));
    put_u32(out, 1);
    out.reserve(out.size() + grid.size() * 4);
    for (double v : grid.values()) {
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) throw ValidationError("tensor map values must be finite in float32");
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

Grid2D parse_tensor_map(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "SDTM") != 0) throw IoError("bad magic");
    if (bytes.size() < 20) throw IoError("truncated header");
    const std::uint32_t w = get_u32(bytes, 4);
    const std::uint32_t h = get_u32(bytes, 8);
    const std::uint32_t c = get_u32(bytes, 12);
    const std::uint32_t dtype = get_u32(bytes, 16);
    if (dtype != 1) throw IoError("unsupported dtype " + std::to_string(dtype));
    if (c == 0 || w > (1u << 20) || h > (1u << 20) || c > (1u << 16)) throw IoError("implausible dimensions");
    const std::uint64_t count = static_cast<std::uint64_t>(w) * h * c;
    if (bytes.size() - 20 != count * 4) throw IoError("payload length mismatch");

    Grid2D grid(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    for (std::uint64_t i = 0; i < count; ++i) {
        const float f = std::bit_cast<float>(get_u32(bytes, 20 + i * 4));
        if (!std::isfinite(f)) {
            const std::uint64_t pixel = i / c;
            throw IoError("non-finite value at (" + std::to_string(pixel % w) + "," + std::to_string(pixel / w) + "," +
                          std::to_string(i % c) + ")");
        }
        grid.values()[i] = f;
    }
    return grid;
}

void write_tensor_map(const Grid2D& grid, const fs::path& path) {
    write_text_file(path, tensor_map_bytes(grid));
}

Grid2D read_tensor_map(const fs::path& path) {
    try {
        return parse_tensor_map(read_text_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::string tracks_csv_text(const std::vector<Track>& tracks) {
    struct Row {
        int frame;
        int id;
        const Detection* det;
    };
    std::vector<Row> rows;
    for (const Track& t : tracks)
        for (const TrackEntry& e : t.entries) rows.push_back({e.frame, t.id, &e.detection});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });

    std::string out = kPredHeader;
    out += '\n';
    for (const Row& r : rows) {
        const EndpointPair& e = r.det->endpoints;
        const BBox b = bbox_from_endpoints(e);
        const double fields[] = {e.left.x, e.left.y, e.right.x, e.right.y, b.x_min, b.y_min, b.width(), b.height(),
                                 r.det->score};
        out += std::to_string(r.frame);
        out += ',';
        out += std::to_string(r.id);
        for (double v : fields) {
            out += ',';
            out += format_number(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<Track> parse_tracks_csv(const std::string& text) {
    const auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && blank(lines[first])) ++first;
    if (first == lines.size()) return {};
    if (lines[first] != kPredHeader) throw IoError("prediction csv: unexpected header '" + std::string(lines[first]) + "'");

    std::map<int, Track> by_id;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (blank(lines[i])) continue;
        const std::string where = "prediction csv line " + std::to_string(i + 1);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 11) throw IoError(where + ": expected 11 fields, found " + std::to_string(fields.size()));
        const int frame = parse_int(fields[0], where);
        const int id = parse_int(fields[1], where);
        if (frame < 1) throw IoError(where + ": frame must be positive");
        if (id < 1) throw IoError(where + ": track id must be positive");
        Detection d;
        d.endpoints = {{parse_double(fields[2], where), parse_double(fields[3], where)},
                       {parse_double(fields[4], where), parse_double(fields[5], where)}};
        d.score = parse_double(fields[10], where);
        if (d.score < 0.0 || d.score > 1.0) throw IoError(where + ": score outside [0,1]");
        const BBox b = bbox_from_endpoints(d.endpoints);
        const double box[] = {b.x_min, b.y_min, b.width(), b.height()};
        for (int k = 0; k < 4; ++k) {
            if (!near(box[k], parse_double(fields[static_cast<std::size_t>(6 + k)], where))) {
                throw IoError(where + ": bounding box is not the hull of the endpoints");
            }
        }
        Track& t = by_id[id];
        t.id = id;
        if (!t.entries.empty() && t.entries.back().frame >= frame) {
            throw IoError(where + ": track " + std::to_string(id) + " frames must be strictly increasing");
        }
        t.entries.push_back({frame, std::move(d)});
    }
    std::vector<Track> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) out.push_back(std::move(t));
    return out;
}

void write_tracks_csv(const fs::path& path, const std::vector<Track>& tracks) {
    write_text_file(path, tracks_csv_text(tracks));
}

std::vector<Track> read_tracks_csv(const fs::path& path) {
    try {
        return parse_tracks_csv(read_text_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace sdt
