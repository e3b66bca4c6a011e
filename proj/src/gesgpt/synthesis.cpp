#include "gesgpt/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "gesgpt/error.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

namespace {

std::size_t timeline_frames(double duration_s, double fps) {
  return static_cast<std::size_t>(std::llround(duration_s * fps)) + 1;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

BaseGestureSpec BaseGestureSpec::parse(std::string_view text) {
  BaseGestureSpec spec;
  if (text == "rest") return spec;
  if (text == "sway") {
    spec.kind = Kind::ProceduralSway;
    return spec;
  }
  if (text.starts_with("file:") && text.size() > 5) {
    spec.kind = Kind::File;
    spec.path = std::string(text.substr(5));
    return spec;
  }
  fail(ErrorCode::InvalidArgument, "base must be rest, sway or file:PATH, got '" + std::string(text) + "'");
}

BaseGestureSpec BaseGestureSpec::from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "base must be a string or an object");
  BaseGestureSpec spec;
  try {
    const std::string kind = j.value("kind", std::string("rest"));
    if (kind == "rest" || kind == "rest_pose") {
      spec.kind = Kind::RestPose;
    } else if (kind == "sway" || kind == "procedural_sway") {
      spec.kind = Kind::ProceduralSway;
    } else if (kind == "file") {
      spec.kind = Kind::File;
      spec.path = j.at("path").get<std::string>();
    } else {
      fail(ErrorCode::InvalidArgument, "unknown base kind '" + kind + "'");
    }
    spec.sway_amplitude = j.value("amplitude", spec.sway_amplitude);
    spec.sway_frequency_hz = j.value("frequency_hz", spec.sway_frequency_hz);
    spec.sway_joints = j.value("joints", spec.sway_joints);
    spec.strict = j.value("strict", spec.strict);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed base: ") + e.what());
  }
  return spec;
}

nlohmann::json BaseGestureSpec::to_json() const {
  switch (kind) {
    case Kind::RestPose: return {{"kind", "rest_pose"}};
    case Kind::ProceduralSway:
      return {{"kind", "procedural_sway"}, {"amplitude", sway_amplitude}, {"frequency_hz", sway_frequency_hz},
              {"joints", sway_joints}};
    case Kind::File: return {{"kind", "file"}, {"path", path}, {"strict", strict}};
  }
  return {};
}

void SynthesisConfig::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) fail(ErrorCode::InvalidArgument, "fps must be positive");
  if (!(ramp_s >= 0.0)) fail(ErrorCode::InvalidArgument, "ramp_s must be non-negative");
  if (!(min_gesture_s > 0.0)) fail(ErrorCode::InvalidArgument, "min_gesture_s must be positive");
}

SynthesisConfig SynthesisConfig::from_json(const nlohmann::json& j) {
  SynthesisConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "options must be an object");
  try {
    c.fps = j.value("fps", c.fps);
    c.ramp_s = j.value("ramp_s", c.ramp_s);
    c.seed = j.value("seed", c.seed);
    c.min_gesture_s = j.value("min_gesture_s", c.min_gesture_s);
    const std::string mode = j.value("mode", std::string("stroke"));
    if (mode == "onset") {
      c.mode = ScheduleMode::Onset;
    } else if (mode != "stroke") {
      fail(ErrorCode::InvalidArgument, "mode must be onset or stroke");
    }
    const std::string anchor = j.value("anchor", std::string("midpoint"));
    if (anchor == "onset") {
      c.anchor = ApexAnchor::Onset;
    } else if (anchor != "midpoint") {
      fail(ErrorCode::InvalidArgument, "anchor must be midpoint or onset");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed options: ") + e.what());
  }
  c.validate();
  return c;
}

MotionClip make_base(const BaseGestureSpec& spec, double duration_s, double fps, const Pose& rest_pose) {
  if (!(duration_s > 0.0)) fail(ErrorCode::InvalidArgument, "base duration must be positive");
  if (!(fps > 0.0)) fail(ErrorCode::InvalidArgument, "base fps must be positive");
  const std::size_t frames = timeline_frames(duration_s, fps);
  switch (spec.kind) {
    case BaseGestureSpec::Kind::RestPose:
      return MotionClip::constant(rest_pose, frames, fps);

    case BaseGestureSpec::Kind::ProceduralSway: {
      std::vector<bool> moves(rest_pose.joint_count(), spec.sway_joints.empty());
      for (const std::string& name : spec.sway_joints) {
        const auto& names = rest_pose.joint_names();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) fail(ErrorCode::InvalidArgument, "sway joint '" + name + "' is not in the skeleton");
        moves[static_cast<std::size_t>(it - names.begin())] = true;
      }
      const auto rest = rest_pose.positions();
      std::vector<double> data;
      data.reserve(frames * rest.size());
      for (std::size_t f = 0; f < frames; ++f) {
        const double dx =
            spec.sway_amplitude * std::sin(2.0 * std::numbers::pi * spec.sway_frequency_hz * static_cast<double>(f) / fps);
        for (std::size_t j = 0; j < rest_pose.joint_count(); ++j) {
          data.push_back(rest[3 * j] + (moves[j] ? dx : 0.0));
          data.push_back(rest[3 * j + 1]);
          data.push_back(rest[3 * j + 2]);
        }
      }
      return MotionClip(fps, rest_pose.joint_names(), std::move(data));
    }

    case BaseGestureSpec::Kind::File: {
      const MotionClip source = resample(load_clip(spec.path), fps);
      if (source.joint_names() != rest_pose.joint_names()) {
        fail(ErrorCode::IncompatibleClips, spec.path + ": base joints differ from the dictionary skeleton");
      }
      if (source.frame_count() < frames && spec.strict) {
        fail(ErrorCode::Coverage, spec.path + " covers " + fixed(source.duration_s(), 3) + " s of a " +
                                      fixed(duration_s, 3) + " s timeline");
      }
      std::vector<double> data;
      data.reserve(frames * source.values_per_frame());
      for (std::size_t f = 0; f < frames; ++f) {
        const auto src = source.frame(std::min(f, source.frame_count() - 1));
        data.insert(data.end(), src.begin(), src.end());
      }
      return MotionClip(fps, source.joint_names(), std::move(data));
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown base kind");
}

MotionClip unit_to_offsets(const GestureUnit& unit, const Retime& retime, double fps, const Pose& rest_pose) {
  if (unit.clip.joint_names() != rest_pose.joint_names()) {
    fail(ErrorCode::IncompatibleClips, "unit " + unit.id + " joints differ from the rest pose");
  }
  const MotionClip warped = time_warp(unit.clip, retime.normalized(), retime.target_duration_s(), fps);
  const auto rest = rest_pose.positions();
  std::vector<double> data(warped.data().begin(), warped.data().end());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] -= rest[i % rest.size()];
  return MotionClip(fps, warped.joint_names(), std::move(data));
}

std::size_t SynthesisReport::count(std::string_view kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [&](const ScheduleEvent& e) { return e.kind == kind; }));
}

SynthesisResult synthesize(const GestureScript& script, const Dictionary& dict, const BaseGestureSpec& base,
                           const SynthesisConfig& config) {
  config.validate();
  validate_script(script);

  std::vector<const GestureUnit*> selections(script.sentences.size(), nullptr);
  std::map<int, std::string> skip_reasons;
  for (std::size_t i = 0; i < script.sentences.size(); ++i) {
    const SentenceEntry& s = script.sentences[i];
    if (s.gesture_id) {
      selections[i] = dict.find(*s.gesture_id);
      if (selections[i] == nullptr) skip_reasons[s.index] = "gesture_id '" + *s.gesture_id + "' is not in the dictionary";
      continue;
    }
    try {
      const std::uint64_t seed = splitmix64(config.seed + static_cast<std::uint64_t>(s.index));
      selections[i] = select_unit(dict, s.intent, s.semantic_tag, s.duration_s(), seed).unit;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoGestureAvailable) throw;
      skip_reasons[s.index] = e.what();
    }
  }

  const ScheduleOptions options{config.fps, config.min_gesture_s, config.anchor};
  Schedule schedule = config.mode == ScheduleMode::Onset ? schedule_onset(script, selections, options)
                                                         : schedule_stroke_aligned(script, selections, options);
  for (ScheduleEvent& ev : schedule.events) {
    if (ev.kind == "skip") {
      if (const auto it = skip_reasons.find(ev.sentence_index); it != skip_reasons.end()) ev.detail = it->second;
    }
  }
  if (schedule.total_duration_s <= 0.0) schedule.total_duration_s = kEmptyTimelineS;

  const MotionClip base_clip = make_base(base, schedule.total_duration_s, config.fps, dict.rest_pose());
  std::vector<OffsetLayer> layers;
  layers.reserve(schedule.entries.size());
  for (const ScheduleEntry& e : schedule.entries) {
    const GestureUnit* unit = dict.find(e.unit_id);
    layers.push_back({std::lround(e.onset_s * config.fps), unit_to_offsets(*unit, e.retime, config.fps, dict.rest_pose())});
  }

  SynthesisResult result{additive_blend(base_clip, layers, config.ramp_s), std::move(schedule), {}};
  SynthesisReport& report = result.report;
  report.mode = config.mode;
  report.seed = config.seed;
  report.sentence_count = script.sentences.size();
  report.scheduled_count = result.schedule.entries.size();
  report.events = result.schedule.events;
  double sum = 0.0;
  std::size_t aligned = 0;
  for (const ScheduleEntry& e : result.schedule.entries) {
    if (!e.apex_target_s) continue;
    report.apex.push_back({e.sentence_index, e.unit_id, *e.apex_target_s, e.realized_apex_s(), e.clamped, e.compressed});
    if (e.clamped || e.compressed) continue;
    const double err = std::abs(*e.apex_error_s());
    report.max_abs_apex_error_s = std::max(report.max_abs_apex_error_s.value_or(0.0), err);
    sum += err;
    ++aligned;
  }
  if (aligned > 0) report.mean_abs_apex_error_s = sum / static_cast<double>(aligned);
  return result;
}

nlohmann::json report_to_json(const SynthesisReport& report) {
  nlohmann::json events = nlohmann::json::array();
  for (const ScheduleEvent& ev : report.events) {
    events.push_back({{"sentence_index", ev.sentence_index}, {"kind", ev.kind}, {"detail", ev.detail}});
  }
  nlohmann::json apex = nlohmann::json::array();
  for (const ApexRecord& a : report.apex) {
    apex.push_back({{"sentence_index", a.sentence_index},
                    {"unit_id", a.unit_id},
                    {"target_s", a.target_s},
                    {"realized_s", a.realized_s},
                    {"error_s", a.error_s()},
                    {"clamped", a.clamped},
                    {"compressed", a.compressed}});
  }
  nlohmann::json counts = nlohmann::json::object();
  for (const char* kind : {"skip", "fallback", "compress", "shift", "drop", "uniform"}) counts[kind] = report.count(kind);
  nlohmann::json stats = nlohmann::json::object();
  if (report.max_abs_apex_error_s) stats["max_abs_s"] = *report.max_abs_apex_error_s;
  if (report.mean_abs_apex_error_s) stats["mean_abs_s"] = *report.mean_abs_apex_error_s;
  return {{"mode", to_string(report.mode)},
          {"seed", report.seed},
          {"sentences", report.sentence_count},
          {"scheduled", report.scheduled_count},
          {"counts", std::move(counts)},
          {"events", std::move(events)},
          {"apex", std::move(apex)},
          {"apex_error", std::move(stats)}};
}

std::string render_report(const SynthesisReport& report) {
  std::ostringstream os;
  os << "mode " << to_string(report.mode) << ", seed " << report.seed << "\n";
  os << report.scheduled_count << " of " << report.sentence_count << " sentences scheduled\n";
  os << "skips " << report.count("skip") << ", fallbacks " << report.count("fallback") << ", drops "
     << report.count("drop") << ", shifts " << report.count("shift") << ", compressions " << report.count("compress")
     << "\n";
  for (const ScheduleEvent& ev : report.events) {
    os << "  [" << ev.kind << "] sentence " << ev.sentence_index << ": " << ev.detail << "\n";
  }
  if (!report.apex.empty()) {
    os << "apex alignment (seconds):\n";
    for (const ApexRecord& a : report.apex) {
      os << "  sentence " << a.sentence_index << " " << a.unit_id << " target " << fixed(a.target_s, 3) << " realized "
         << fixed(a.realized_s, 3) << " error " << fixed(a.error_s(), 3);
      if (a.clamped) os << " (clamped)";
      if (a.compressed) os << " (compressed)";
      os << "\n";
    }
  }
  if (report.max_abs_apex_error_s) {
    os << "apex error max " << fixed(*report.max_abs_apex_error_s, 4) << " s, mean "
       << fixed(*report.mean_abs_apex_error_s, 4) << " s\n";
  }
  return os.str();
}

nlohmann::json result_to_json(const SynthesisResult& result) {
  return {{"motion", clip_to_json(result.motion)},
          {"schedule", schedule_to_json(result.schedule, result.report.mode)},
          {"report", report_to_json(result.report)}};
}

}  // namespace gesgpt
