#include "gesgpt/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "gesgpt/error.hpp"

namespace gesgpt {

namespace {

constexpr double kEps = 1e-9;

double& segment(StageTimes& t, int i) {
  switch (i) {
    case 0: return t.pre;
    case 1: return t.stroke;
    case 2: return t.hold;
    default: return t.post;
  }
}

double segment(const StageTimes& t, int i) { return segment(const_cast<StageTimes&>(t), i); }

// Keeps the apex at the same relative position inside a (possibly rescaled)
// stroke.
void sync_apex(const StageTimes& source, StageTimes& target) {
  target.apex_in_stroke = source.stroke > 0.0 ? source.apex_in_stroke * (target.stroke / source.stroke) : 0.0;
}

double snap(double t, double fps) { return std::round(t * fps) / fps; }

}  // namespace

std::string_view to_string(WarpKind kind) {
  switch (kind) {
    case WarpKind::Identity: return "identity";
    case WarpKind::Uniform: return "uniform";
    case WarpKind::StageAware: return "stage-aware";
  }
  return "unknown";
}

std::string_view to_string(ScheduleMode mode) { return mode == ScheduleMode::Onset ? "onset" : "stroke"; }

std::vector<std::pair<double, double>> Retime::knots() const {
  std::vector<std::pair<double, double>> out{{0.0, 0.0}};
  double out_t = 0.0;
  double src_t = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (segment(target, i) == 0.0 && segment(source, i) == 0.0) continue;
    out_t += segment(target, i);
    src_t += segment(source, i);
    out.emplace_back(out_t, src_t);
  }
  out.back() = {target_duration_s(), source_duration_s()};
  return out;
}

TimeWarp Retime::normalized() const {
  const double out_total = target_duration_s();
  const double src_total = source_duration_s();
  if (!(out_total > 0.0) || !(src_total > 0.0)) fail(ErrorCode::InvalidArgument, "retime needs positive durations");
  std::vector<TimeWarp::Knot> k;
  for (const auto& [o, s] : knots()) k.emplace_back(std::clamp(o / out_total, 0.0, 1.0), std::clamp(s / src_total, 0.0, 1.0));
  k.front() = {0.0, 0.0};
  k.back() = {1.0, 1.0};
  return TimeWarp(std::move(k));
}

double Retime::source_time(double output_s) const {
  const auto k = knots();
  if (output_s <= 0.0) return 0.0;
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (output_s <= k[i].first) {
      const double width = k[i].first - k[i - 1].first;
      if (width <= 0.0) return k[i].second;
      return k[i - 1].second + (output_s - k[i - 1].first) / width * (k[i].second - k[i - 1].second);
    }
  }
  return source_duration_s();
}

double Retime::output_time(double source_s) const {
  double out_t = 0.0;
  double src_t = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double src_len = segment(source, i);
    const double out_len = segment(target, i);
    if (src_len > 0.0 && source_s <= src_t + src_len) {
      return out_t + std::max(0.0, source_s - src_t) / src_len * out_len;
    }
    out_t += out_len;
    src_t += src_len;
  }
  return target_duration_s();
}

double Retime::apex_offset_s() const { return target.apex(); }

Retime identity_retime(const StageTimes& source) { return {WarpKind::Identity, source, source}; }

Retime uniform_retime(const StageTimes& source, double target_duration_s) {
  if (!(target_duration_s > 0.0)) fail(ErrorCode::InvalidArgument, "target duration must be positive");
  const double factor = target_duration_s / source.total();
  StageTimes target = source;
  for (int i = 0; i < 4; ++i) segment(target, i) *= factor;
  sync_apex(source, target);
  return {WarpKind::Uniform, source, target};
}

Retime stage_aware_warp(const StageTimes& source, double target_duration_s, double min_duration_s, std::string* note) {
  if (!(target_duration_s >= min_duration_s - kEps)) {
    fail(ErrorCode::InvalidArgument, "target duration " + std::to_string(target_duration_s) + " s is below the " +
                                         std::to_string(min_duration_s) + " s minimum");
  }
  const double total = source.total();
  if (std::abs(target_duration_s - total) <= kEps) return identity_retime(source);
  if (target_duration_s < source.stroke) {
    if (note != nullptr) *note = "target shorter than the stroke; compressed uniformly";
    return uniform_retime(source, target_duration_s);
  }
  StageTimes target = source;
  const double flexible = source.pre + source.hold + source.post;
  double delta = target_duration_s - total;
  if (flexible <= 0.0) {
    // Stroke spans the whole clip; the extra time holds the final pose.
    target.post += delta;
  } else if (delta > 0.0) {
    if (source.hold > 0.0) {
      target.hold += delta;
    } else {
      const double share = source.pre + source.post;
      target.pre += delta * source.pre / share;
      target.post += delta * source.post / share;
    }
  } else {
    double need = -delta;
    const double from_hold = std::min(need, source.hold);
    target.hold -= from_hold;
    need -= from_hold;
    if (need > 0.0) {
      const double share = source.pre + source.post;
      target.pre = std::max(0.0, source.pre - need * source.pre / share);
      target.post = std::max(0.0, source.post - need * source.post / share);
    }
  }
  target.post = std::max(0.0, target_duration_s - target.pre - target.stroke - target.hold);
  sync_apex(source, target);
  return {WarpKind::StageAware, source, target};
}

std::optional<Retime> shrink_tail(const Retime& retime, double amount_s) {
  if (amount_s <= 0.0) return retime;
  if (amount_s > retime.target.hold + retime.target.post + kEps) return std::nullopt;
  Retime out = retime;
  const double from_hold = std::min(amount_s, out.target.hold);
  out.target.hold -= from_hold;
  out.target.post = std::max(0.0, out.target.post - (amount_s - from_hold));
  out.kind = WarpKind::StageAware;
  return out;
}

std::optional<double> ScheduleEntry::apex_error_s() const {
  if (!apex_target_s) return std::nullopt;
  return realized_apex_s() - *apex_target_s;
}

namespace {

Schedule build_schedule(const GestureScript& script, const std::vector<const GestureUnit*>& selections,
                        const ScheduleOptions& options, ScheduleMode mode) {
  if (!(options.fps > 0.0)) fail(ErrorCode::InvalidArgument, "schedule fps must be positive");
  if (selections.size() != script.sentences.size()) {
    fail(ErrorCode::InvalidArgument, "one selection slot per sentence is required");
  }
  const double fps = options.fps;
  Schedule schedule;
  schedule.fps = fps;
  for (std::size_t i = 0; i < script.sentences.size(); ++i) {
    const SentenceEntry& s = script.sentences[i];
    const GestureUnit* unit = selections[i];
    if (unit == nullptr) {
      schedule.events.push_back({s.index, "skip", "no gesture unit selected"});
      continue;
    }
    const StageTimes source = unit->stage_times();
    const double span = s.duration_s();
    double target = source.total();
    if (target > span + kEps) {
      target = std::floor(span * fps + kEps) / fps;
      if (target < options.min_gesture_s - kEps) {
        schedule.events.push_back({s.index, "skip", "sentence lasts " + std::to_string(span) + " s, below the " +
                                                        std::to_string(options.min_gesture_s) +
                                                        " s minimum gesture duration"});
        continue;
      }
    }
    const bool compress = target < source.total() - kEps;

    ScheduleEntry e;
    e.sentence_index = s.index;
    e.unit_id = unit->id;
    e.sentence_start_s = s.start_s;
    e.sentence_end_s = s.end_s;
    e.compressed = compress;
    if (compress) {
      schedule.events.push_back({s.index, "compress", "unit " + unit->id + " (" + std::to_string(source.total()) +
                                                          " s) compressed to " + std::to_string(target) + " s"});
    }
    if (mode == ScheduleMode::Stroke && s.keyword) {
      std::string note;
      e.retime = compress ? stage_aware_warp(source, target, options.min_gesture_s, &note) : identity_retime(source);
      if (!note.empty()) schedule.events.push_back({s.index, "uniform", note});
      const double apex_target = options.anchor == ApexAnchor::Midpoint ? s.keyword->midpoint() : s.keyword->start_s;
      e.apex_target_s = apex_target;
      e.onset_s = snap(apex_target - e.retime.apex_offset_s(), fps);
      if (e.onset_s < 0.0) {
        e.onset_s = 0.0;
        e.clamped = true;
      }
    } else {
      if (mode == ScheduleMode::Stroke) {
        schedule.events.push_back({s.index, "fallback", "sentence has no keyword; placed at sentence onset"});
      }
      e.retime = compress ? uniform_retime(source, target) : identity_retime(source);
      e.onset_s = snap(s.start_s, fps);
    }
    schedule.entries.push_back(std::move(e));
  }
  std::stable_sort(schedule.entries.begin(), schedule.entries.end(),
                   [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.onset_s < b.onset_s; });
  schedule = resolve_overlaps(std::move(schedule), options);

  double total = script.sentences.empty() ? 0.0 : script.sentences.back().end_s;
  for (const ScheduleEntry& e : schedule.entries) total = std::max(total, e.end_s());
  schedule.total_duration_s = std::ceil(total * fps - kEps) / fps;
  return schedule;
}

}  // namespace

Schedule schedule_onset(const GestureScript& script, const std::vector<const GestureUnit*>& selections,
                        const ScheduleOptions& options) {
  return build_schedule(script, selections, options, ScheduleMode::Onset);
}

Schedule schedule_stroke_aligned(const GestureScript& script, const std::vector<const GestureUnit*>& selections,
                                 const ScheduleOptions& options) {
  return build_schedule(script, selections, options, ScheduleMode::Stroke);
}

Schedule resolve_overlaps(Schedule schedule, const ScheduleOptions& options) {
  const double fps = schedule.fps > 0.0 ? schedule.fps : options.fps;
  std::vector<ScheduleEntry> kept;
  for (ScheduleEntry& e : schedule.entries) {
    if (kept.empty() || kept.back().end_s() <= e.onset_s + kEps) {
      kept.push_back(std::move(e));
      continue;
    }
    ScheduleEntry& prev = kept.back();
    const double overlap = std::ceil((prev.end_s() - e.onset_s) * fps - 1e-6) / fps;
    if (prev.retime.target_duration_s() - overlap >= options.min_gesture_s - kEps) {
      if (auto shorter = shrink_tail(prev.retime, overlap)) {
        prev.retime = *shorter;
        prev.compressed = true;
        schedule.events.push_back({prev.sentence_index, "compress",
                                   "hold/retraction shortened by " + std::to_string(overlap) + " s to make room for sentence " +
                                       std::to_string(e.sentence_index)});
        kept.push_back(std::move(e));
        continue;
      }
    }
    const double shifted = prev.end_s();
    if (shifted <= e.sentence_end_s + kEps) {
      schedule.events.push_back({e.sentence_index, "shift",
                                 "onset moved from " + std::to_string(e.onset_s) + " s to " + std::to_string(shifted) + " s"});
      e.onset_s = shifted;
      e.clamped = true;
      kept.push_back(std::move(e));
      continue;
    }
    schedule.events.push_back({e.sentence_index, "drop",
                               "unit " + e.unit_id + " collides with sentence " + std::to_string(prev.sentence_index) +
                                   " and cannot move inside its sentence"});
  }
  schedule.entries = std::move(kept);
  return schedule;
}

nlohmann::json schedule_to_json(const Schedule& schedule, ScheduleMode mode) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ScheduleEntry& e : schedule.entries) {
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& [o, s] : e.retime.knots()) knots.push_back({o, s});
    nlohmann::json j = {
        {"sentence_index", e.sentence_index},
        {"unit_id", e.unit_id},
        {"onset_s", e.onset_s},
        {"end_s", e.end_s()},
        {"start_frame", std::lround(e.onset_s * schedule.fps)},
        {"retime",
         {{"kind", to_string(e.retime.kind)},
          {"source_duration_s", e.retime.source_duration_s()},
          {"target_duration_s", e.retime.target_duration_s()},
          {"knots", std::move(knots)}}},
        {"realized_apex_s", e.realized_apex_s()},
        {"clamped", e.clamped},
        {"compressed", e.compressed},
    };
    if (e.apex_target_s) {
      j["apex_target_s"] = *e.apex_target_s;
      j["apex_error_s"] = *e.apex_error_s();
    }
    entries.push_back(std::move(j));
  }
  nlohmann::json events = nlohmann::json::array();
  for (const ScheduleEvent& ev : schedule.events) {
    events.push_back({{"sentence_index", ev.sentence_index}, {"kind", ev.kind}, {"detail", ev.detail}});
  }
  return {{"version", 1},
          {"mode", to_string(mode)},
          {"fps", schedule.fps},
          {"total_duration_s", schedule.total_duration_s},
          {"entries", std::move(entries)},
          {"events", std::move(events)}};
}

}  // namespace gesgpt
