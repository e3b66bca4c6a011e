#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gesgpt/dictionary.hpp"
#include "gesgpt/motion.hpp"
#include "gesgpt/schedule.hpp"
#include "gesgpt/script.hpp"

namespace gesgpt {

struct BaseGestureSpec {
  enum class Kind { RestPose, ProceduralSway, File };

  Kind kind = Kind::RestPose;
  double sway_amplitude = 0.01;
  double sway_frequency_hz = 0.15;
  std::vector<std::string> sway_joints;  // empty: every joint
  std::string path;
  bool strict = false;  // file base must cover the whole timeline

  // "rest" | "sway" | "file:PATH"
  static BaseGestureSpec parse(std::string_view text);
  static BaseGestureSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SynthesisConfig {
  double fps = 25.0;
  double ramp_s = 0.2;
  ScheduleMode mode = ScheduleMode::Stroke;
  std::uint64_t seed = 0;
  double min_gesture_s = kDefaultMinGestureS;
  ApexAnchor anchor = ApexAnchor::Midpoint;

  void validate() const;
  // Reads the service's "options" object; missing keys keep their defaults.
  static SynthesisConfig from_json(const nlohmann::json& j);
};

// Length of the timeline used for a script with no scheduled gesture.
inline constexpr double kEmptyTimelineS = 1.0;

MotionClip make_base(const BaseGestureSpec& spec, double duration_s, double fps, const Pose& rest_pose);

// Warped unit minus the rest pose, sampled at `fps`.
MotionClip unit_to_offsets(const GestureUnit& unit, const Retime& retime, double fps, const Pose& rest_pose);

struct ApexRecord {
  int sentence_index = 0;
  std::string unit_id;
  double target_s = 0.0;
  double realized_s = 0.0;
  bool clamped = false;
  bool compressed = false;

  double error_s() const { return realized_s - target_s; }
};

struct SynthesisReport {
  ScheduleMode mode = ScheduleMode::Stroke;
  std::uint64_t seed = 0;
  std::size_t sentence_count = 0;
  std::size_t scheduled_count = 0;
  std::vector<ScheduleEvent> events;
  std::vector<ApexRecord> apex;
  // Over entries that were neither clamped nor compressed.
  std::optional<double> max_abs_apex_error_s;
  std::optional<double> mean_abs_apex_error_s;

  std::size_t count(std::string_view kind) const;
};

struct SynthesisResult {
  MotionClip motion;
  Schedule schedule;
  SynthesisReport report;
};

SynthesisResult synthesize(const GestureScript& script, const Dictionary& dict, const BaseGestureSpec& base,
                           const SynthesisConfig& config);

nlohmann::json report_to_json(const SynthesisReport& report);
std::string render_report(const SynthesisReport& report);
// {"motion":..,"schedule":..,"report":..}
nlohmann::json result_to_json(const SynthesisResult& result);

}  // namespace gesgpt
