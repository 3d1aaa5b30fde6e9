#pragma once

#include "pvd/eval.hpp"
#include "pvd/geometry.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pvd {

// On-disk layout of a dataset root:
//
//   splits/{train,val,test}.txt       one sequence id per line
//   camera.txt                        optional calibration (see read_camera)
//   sequences/<id>/tags.txt           "<tag> <frame|none>" lines
//   sequences/<id>/annotations/*.txt  one file per frame
//
// Annotation file, fields in this order:
//   frame <index>
//   image <path relative to the sequence directory>
//   depth <path>                      optional
//   keypoint <x> <y> <vehicle_id> <direct|indirect>   zero or more
//
// Tag names: first_annotation, human_reaction, direct_sight, production_detection.

enum class Split { Train, Val, Test };
inline constexpr std::array<Split, 3> kAllSplits{Split::Train, Split::Val, Split::Test};
const char* to_string(Split s);
Split parse_split(const std::string& s);

struct FrameAnnotation {
    int index = 0;
    std::string image;                 ///< relative to the sequence directory
    std::optional<std::string> depth;  ///< relative to the sequence directory
    std::vector<Keypoint> keypoints;

    bool operator==(const FrameAnnotation&) const = default;
};

struct Sequence {
    std::string id;
    std::filesystem::path dir;
    std::vector<FrameAnnotation> frames;  ///< strictly increasing index
    SequenceTags tags;

    std::filesystem::path image_path(const FrameAnnotation& f) const { return dir / f.image; }
    /// Position of the frame with this index, or empty.
    std::optional<std::size_t> position_of(int frame_index) const;
};

struct Dataset {
    std::filesystem::path root;
    std::vector<Sequence> sequences;
    std::array<std::vector<std::string>, 3> splits;  ///< indexed by Split
    std::optional<CameraModel> camera;

    const Sequence* find(const std::string& id) const;
    std::vector<const Sequence*> split(Split s) const;
};

std::string format_annotation(const FrameAnnotation& a);
FrameAnnotation parse_annotation(const std::string& text, const std::string& origin);
std::string format_tags(const SequenceTags& tags);
SequenceTags parse_tags(const std::string& text, const std::string& origin);

/// Loads and validates a dataset. Problems are reported as InputError with the
/// offending file (and line) in the message.
Dataset load_dataset(const std::filesystem::path& root);

/// Writes manifests, tags, annotations and camera (not images) under `root`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

/// Annotation file name for a frame index.
std::string annotation_filename(int frame_index);

}  // namespace pvd
