#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesgpt/dictionary.hpp"
#include "gesgpt/motion.hpp"
#include "gesgpt/script.hpp"

namespace gesgpt {

enum class WarpKind { Identity, Uniform, StageAware };
std::string_view to_string(WarpKind kind);

// Retiming of one unit, described by the durations of its four segments
// (pre-stroke, stroke, hold, post) in the source clip and in the output.
struct Retime {
  WarpKind kind = WarpKind::Identity;
  StageTimes source;
  StageTimes target;

  double source_duration_s() const { return source.total(); }
  double target_duration_s() const { return target.total(); }

  // Knots (output seconds, source seconds).
  std::vector<std::pair<double, double>> knots() const;
  TimeWarp normalized() const;
  double source_time(double output_s) const;
  // Earliest output time at which source time `source_s` is shown.
  double output_time(double source_s) const;
  // Output time of the stroke apex.
  double apex_offset_s() const;
};

inline constexpr double kDefaultMinGestureS = 1.5;

Retime identity_retime(const StageTimes& source);
Retime uniform_retime(const StageTimes& source, double target_duration_s);

// Keeps the stroke's duration while the hold absorbs stretch or compression
// first, then pre-stroke and post segments proportionally. Falls back to a
// uniform warp when the unit is stroke-only or the target is shorter than
// the stroke. `note`, when given, receives a description of any fallback.
Retime stage_aware_warp(const StageTimes& source, double target_duration_s,
                        double min_duration_s = kDefaultMinGestureS, std::string* note = nullptr);

// Shortens the hold and then the post segment by `amount_s`; stroke and
// pre-stroke timing stay put. Returns nullopt when they cannot absorb it.
std::optional<Retime> shrink_tail(const Retime& retime, double amount_s);

enum class ScheduleMode { Onset, Stroke };
enum class ApexAnchor { Midpoint, Onset };
std::string_view to_string(ScheduleMode mode);

struct ScheduleOptions {
  double fps = 25.0;
  double min_gesture_s = kDefaultMinGestureS;
  ApexAnchor anchor = ApexAnchor::Midpoint;
};

struct ScheduleEntry {
  int sentence_index = 0;
  std::string unit_id;
  double sentence_start_s = 0.0;
  double sentence_end_s = 0.0;
  double onset_s = 0.0;
  Retime retime;
  std::optional<double> apex_target_s;
  bool clamped = false;     // placement moved off its ideal onset
  bool compressed = false;  // shortened to fit its sentence or to resolve an overlap

  double end_s() const { return onset_s + retime.target_duration_s(); }
  double realized_apex_s() const { return onset_s + retime.apex_offset_s(); }
  std::optional<double> apex_error_s() const;
};

struct ScheduleEvent {
  int sentence_index = 0;
  std::string kind;  // skip | fallback | compress | shift | drop | uniform
  std::string detail;
};

struct Schedule {
  double fps = 25.0;
  double total_duration_s = 0.0;
  std::vector<ScheduleEntry> entries;
  std::vector<ScheduleEvent> events;
};

// `selections[i]` is the unit chosen for script sentence i, or nullptr.
Schedule schedule_onset(const GestureScript& script, const std::vector<const GestureUnit*>& selections,
                        const ScheduleOptions& options = {});
Schedule schedule_stroke_aligned(const GestureScript& script, const std::vector<const GestureUnit*>& selections,
                                 const ScheduleOptions& options = {});
Schedule resolve_overlaps(Schedule schedule, const ScheduleOptions& options = {});

nlohmann::json schedule_to_json(const Schedule& schedule, ScheduleMode mode);

}  // namespace gesgpt
