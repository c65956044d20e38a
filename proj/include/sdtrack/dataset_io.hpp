#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdtrack/domain.hpp"
#include "sdtrack/grid.hpp"

namespace sdt {

/// Sequence directory layout:
///
///   <dir>/frames/000001.png ...   8-bit grayscale frames, contiguous from 1
///   <dir>/masks/000001.png ...    optional binary masks (0 / 255)
///   <dir>/gt.csv                  one GtRow per (frame, track_id)
///   <dir>/meta.json               generator provenance
///
/// Byte-level details are in docs/FORMATS.md.
inline constexpr const char* kGtHeader =
    "frame,track_id,x_left,y_left,x_right,y_right,cx,cy,length,width,angle_rad,speed,bb_x,bb_y,bb_w,bb_h";
inline constexpr const char* kPredHeader = "frame,track_id,x_left,y_left,x_right,y_right,bb_x,bb_y,bb_w,bb_h,score";

/// Tolerance for endpoint/center/length/bbox consistency checks on read.
inline constexpr double kGtConsistencyTolerance = 1e-6;

std::string frame_file_name(int frame);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

std::string gt_csv_text(const SequenceAnnotation& ann);

/// Parses gt.csv text for a sequence with `frame_count` frames. Every row
/// is checked against its own state; errors name the line, frame and track.
SequenceAnnotation parse_gt_csv(const std::string& text, int frame_count, int width, int height);

void write_sequence(const std::filesystem::path& dir, const std::vector<Grid2D>& frames,
                    const SequenceAnnotation& ann, const std::string& meta_json);

struct LoadedSequence {
    std::vector<Grid2D> frames;
    SequenceAnnotation annotation;
    std::string meta_json;
};

/// Reads frames, masks (when present), gt.csv and meta.json.
LoadedSequence read_sequence(const std::filesystem::path& dir);

/// Reads only gt.csv, using the frame listing for the frame count and the
/// first frame for the image size.
SequenceAnnotation read_annotation(const std::filesystem::path& dir);

/// Number of contiguous frames/%06d.png files; throws IoError on gaps.
int count_frames(const std::filesystem::path& dir);

/// Sorted names of sequence directories (those containing gt.csv).
std::vector<std::string> list_sequences(const std::filesystem::path& split_dir);

/// Tensor map container: 20-byte little-endian header
/// ("SDTM", uint32 width, height, channels, dtype = 1 for float32) followed
/// by width*height*channels float32 values in Grid2D order.
void write_tensor_map(const Grid2D& grid, const std::filesystem::path& path);
Grid2D read_tensor_map(const std::filesystem::path& path);
std::string tensor_map_bytes(const Grid2D& grid);
Grid2D parse_tensor_map(const std::string& bytes);

/// Result CSV with kPredHeader columns; the bbox is the endpoint hull.
std::string tracks_csv_text(const std::vector<Track>& tracks);
std::vector<Track> parse_tracks_csv(const std::string& text);
void write_tracks_csv(const std::filesystem::path& path, const std::vector<Track>& tracks);
std::vector<Track> read_tracks_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sdt
