#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gesgpt/dictionary.hpp"
#include "gesgpt/motion.hpp"

namespace gesgpt {

struct SegmentationParams {
  int smoothing_window_frames = 5;  // odd
  double rest_speed_fraction = 0.05;  // of the 95th percentile of smoothed speed
  double min_rest_s = 0.3;
  double min_unit_s = 0.8;
  double stroke_fraction = 0.5;  // of the unit's peak speed
  double min_hold_s = 0.2;

  void validate() const;
  static SegmentationParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// values[t]: mean joint displacement between frames t and t+1, smoothed by a
// centered moving average truncated at the edges. Frame units, no fps scaling.
struct SpeedSeries {
  double fps = 0.0;
  std::vector<double> values;
};

struct Detection {
  FrameInterval span;  // clip frames, flanking rest frames included
  StageMap stages;     // frames relative to span.first
};

struct SegmentationResult {
  SpeedSeries speed;
  double rest_threshold = 0.0;
  std::vector<Detection> units;
};

SpeedSeries compute_speed(const MotionClip& clip, int smoothing_window_frames = 5);

// Linear interpolation between order statistics (rank q * (n - 1)).
double percentile(std::vector<double> values, double q);

SegmentationResult segment_units(const MotionClip& clip, const SegmentationParams& params = {});
std::vector<Detection> detect_units(const MotionClip& clip, const SegmentationParams& params = {});

// Writes one clip file per detection plus "manifest_fragment.json" into
// out_dir and returns the fragment. Units are labelled "UNLABELED".
nlohmann::json export_units(const MotionClip& clip, const std::vector<Detection>& detections,
                            const std::string& out_dir);

inline constexpr const char* kUnlabeledIntent = "UNLABELED";
inline constexpr const char* kFragmentFileName = "manifest_fragment.json";

// Merges an exported fragment with human labels
// ({"<unit id>": {"intent": .., "semantic_tag"?: .., "duration_variant_s"?: ..}})
// into a manifest; unlabelled units are left out and listed in `skipped`.
nlohmann::json build_manifest(const nlohmann::json& fragment, const nlohmann::json& labels,
                              const std::string& rest_pose_file, std::vector<std::string>* skipped = nullptr);

}  // namespace gesgpt
