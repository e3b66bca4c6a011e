#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesgpt/motion.hpp"
#include "gesgpt/script.hpp"

namespace gesgpt {

// Inclusive frame range.
struct FrameInterval {
  int first = 0;
  int last = 0;

  int length() const { return last - first + 1; }
  bool contains(int f) const { return f >= first && f <= last; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

// Kendon phase annotation of a gesture unit, in unit-local frames.
struct StageMap {
  std::optional<FrameInterval> preparation;
  FrameInterval stroke;
  int stroke_apex = 0;
  std::optional<FrameInterval> hold;
  std::optional<FrameInterval> retraction;

  friend bool operator==(const StageMap&, const StageMap&) = default;
};

std::vector<std::string> stage_problems(const StageMap& stages, std::size_t frame_count);
nlohmann::json stages_to_json(const StageMap& stages);
StageMap stages_from_json(const nlohmann::json& j);

// Durations (seconds) of the four retiming segments of a unit: everything
// before the stroke, the stroke itself, stroke end to hold end, and the rest.
struct StageTimes {
  double pre = 0.0;
  double stroke = 0.0;
  double hold = 0.0;
  double post = 0.0;
  double apex_in_stroke = 0.0;

  double total() const { return pre + stroke + hold + post; }
  double apex() const { return pre + apex_in_stroke; }
};

struct GestureUnit {
  std::string id;
  IntentLabel intent = IntentLabel::Description;
  std::optional<std::string> semantic_tag;
  int duration_variant_s = 3;
  MotionClip clip;
  StageMap stages;
  std::string rest_pose_ref;
  std::string file;  // manifest-relative clip path

  StageTimes stage_times() const;
  double apex_time_s() const { return stages.stroke_apex / clip.fps(); }
};

inline constexpr std::array<int, 3> kDurationVariants = {3, 6, 9};

class Dictionary {
 public:
  Dictionary(Pose rest_pose, std::string rest_pose_file, std::vector<GestureUnit> units);

  const Pose& rest_pose() const { return rest_pose_; }
  const std::string& rest_pose_file() const { return rest_pose_file_; }
  const std::vector<GestureUnit>& units() const { return units_; }
  const GestureUnit* find(const std::string& id) const;
  // Units of one (intent, duration bucket), in manifest order.
  std::vector<const GestureUnit*> bucket(IntentLabel intent, int variant_s) const;

 private:
  Pose rest_pose_;
  std::string rest_pose_file_;
  std::vector<GestureUnit> units_;
  std::map<std::pair<IntentLabel, int>, std::vector<std::size_t>> index_;
};

struct DictionaryLoadOptions {
  // Max mean per-joint distance between a unit's first/last frame and the
  // rest pose.
  double eps_rest = 0.02;
};

double mean_joint_distance(std::span<const double> a, std::span<const double> b);

Dictionary load_dictionary(const std::string& manifest_path, const DictionaryLoadOptions& options = {});
nlohmann::json manifest_to_json(const Dictionary& dict);
std::string serialize_manifest(const Dictionary& dict);

struct UnitChoice {
  const GestureUnit* unit = nullptr;
  bool needs_compression = false;
};

// Largest duration bucket not exceeding the slot (else the smallest bucket,
// flagged for compression); seeded uniform pick among that bucket's units.
UnitChoice select_unit(const Dictionary& dict, IntentLabel intent, const std::optional<std::string>& semantic_tag,
                       double slot_duration_s, std::uint64_t seed);

}  // namespace gesgpt
