#include "gesgpt/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gesgpt/error.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

namespace {

struct Run {
  int first;
  int last;
};

// Maximal runs of consecutive indices in [from, to] whose speed is below tau.
std::vector<Run> quiet_runs(const std::vector<double>& speed, double tau, int from, int to) {
  std::vector<Run> runs;
  int t = from;
  while (t <= to) {
    if (!(speed[static_cast<std::size_t>(t)] < tau)) {
      ++t;
      continue;
    }
    const int start = t;
    while (t + 1 <= to && speed[static_cast<std::size_t>(t + 1)] < tau) ++t;
    runs.push_back({start, t});
    ++t;
  }
  return runs;
}

bool long_enough(const Run& r, double seconds, double fps) {
  return static_cast<double>(r.last - r.first + 1) >= seconds * fps - 1e-9;
}

StageMap annotate(const std::vector<double>& speed, double tau, int u0, int u1, const SegmentationParams& p,
                  double fps) {
  const auto at = [&](int t) { return speed[static_cast<std::size_t>(t)]; };
  int apex = u0;
  for (int t = u0; t <= u1; ++t) {
    if (at(t) > at(apex)) apex = t;
  }
  const double band = p.stroke_fraction * at(apex);
  int s0 = apex;
  int s1 = apex;
  while (s0 - 1 >= u0 && at(s0 - 1) >= band) --s0;
  while (s1 + 1 <= u1 && at(s1 + 1) >= band) ++s1;

  StageMap stages;
  stages.stroke = {s0 - u0, s1 - u0};
  stages.stroke_apex = apex - u0;
  if (s0 > u0) stages.preparation = FrameInterval{0, s0 - 1 - u0};
  int tail_start = s1 + 1;
  for (const Run& r : quiet_runs(speed, tau, s1 + 1, u1 - 1)) {
    if (long_enough(r, p.min_hold_s, fps)) {
      stages.hold = FrameInterval{r.first - u0, r.last - u0};
      tail_start = r.last + 1;
      break;
    }
  }
  if (tail_start <= u1) stages.retraction = FrameInterval{tail_start - u0, u1 - u0};
  return stages;
}

int nearest_variant(double duration_s) {
  int best = kDurationVariants.front();
  for (int v : kDurationVariants) {
    if (std::abs(v - duration_s) < std::abs(best - duration_s)) best = v;
  }
  return best;
}

}  // namespace

void SegmentationParams::validate() const {
  if (smoothing_window_frames < 1 || smoothing_window_frames % 2 == 0) {
    fail(ErrorCode::InvalidArgument, "smoothing_window_frames must be a positive odd integer");
  }
  auto fraction = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::InvalidArgument, std::string(name) + " must lie in (0, 1)");
  };
  fraction(rest_speed_fraction, "rest_speed_fraction");
  fraction(stroke_fraction, "stroke_fraction");
  if (!(min_rest_s > 0.0) || !(min_unit_s > 0.0) || !(min_hold_s > 0.0)) {
    fail(ErrorCode::InvalidArgument, "min_rest_s, min_unit_s and min_hold_s must be positive");
  }
}

SegmentationParams SegmentationParams::from_json(const nlohmann::json& j) {
  SegmentationParams p;
  try {
    p.smoothing_window_frames = j.value("smoothing_window_frames", p.smoothing_window_frames);
    p.rest_speed_fraction = j.value("rest_speed_fraction", p.rest_speed_fraction);
    p.min_rest_s = j.value("min_rest_s", p.min_rest_s);
    p.min_unit_s = j.value("min_unit_s", p.min_unit_s);
    p.stroke_fraction = j.value("stroke_fraction", p.stroke_fraction);
    p.min_hold_s = j.value("min_hold_s", p.min_hold_s);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed segmentation parameters: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json SegmentationParams::to_json() const {
  return {{"smoothing_window_frames", smoothing_window_frames}, {"rest_speed_fraction", rest_speed_fraction},
          {"min_rest_s", min_rest_s}, {"min_unit_s", min_unit_s}, {"stroke_fraction", stroke_fraction},
          {"min_hold_s", min_hold_s}};
}

SpeedSeries compute_speed(const MotionClip& clip, int smoothing_window_frames) {
  if (clip.frame_count() < 2) fail(ErrorCode::InvalidArgument, "speed needs at least two frames");
  if (smoothing_window_frames < 1 || smoothing_window_frames % 2 == 0) {
    fail(ErrorCode::InvalidArgument, "smoothing window must be a positive odd number of frames");
  }
  const std::size_t n = clip.frame_count() - 1;
  std::vector<double> raw(n);
  for (std::size_t t = 0; t < n; ++t) raw[t] = mean_joint_distance(clip.frame(t + 1), clip.frame(t));

  SpeedSeries out{clip.fps(), std::vector<double>(n)};
  const auto half = static_cast<std::ptrdiff_t>(smoothing_window_frames / 2);
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n); ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, t + half);
    double sum = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) sum += raw[static_cast<std::size_t>(k)];
    out.values[static_cast<std::size_t>(t)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "percentile of an empty series");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SegmentationResult segment_units(const MotionClip& clip, const SegmentationParams& params) {
  params.validate();
  if (clip.frame_count() < 3) fail(ErrorCode::InvalidArgument, "segmentation needs at least three frames");
  SegmentationResult result;
  result.speed = compute_speed(clip, params.smoothing_window_frames);
  const std::vector<double>& speed = result.speed.values;
  const double p95 = percentile(speed, 0.95);
  result.rest_threshold = params.rest_speed_fraction * p95;
  if (!(p95 > 0.0)) return result;

  std::vector<Run> rests;
  for (const Run& r : quiet_runs(speed, result.rest_threshold, 0, static_cast<int>(speed.size()) - 1)) {
    if (long_enough(r, params.min_rest_s, clip.fps())) rests.push_back(r);
  }
  for (std::size_t k = 0; k + 1 < rests.size(); ++k) {
    const int u0 = rests[k].last;
    const int u1 = rests[k + 1].first;
    if (static_cast<double>(u1 - u0) / clip.fps() < params.min_unit_s - 1e-9) continue;
    result.units.push_back({{u0, u1}, annotate(speed, result.rest_threshold, u0, u1, params, clip.fps())});
  }
  return result;
}

std::vector<Detection> detect_units(const MotionClip& clip, const SegmentationParams& params) {
  return segment_units(clip, params).units;
}

nlohmann::json export_units(const MotionClip& clip, const std::vector<Detection>& detections,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  const std::string source_hash = sha256_hex(dump_clip(clip)).substr(0, 8);
  nlohmann::json units = nlohmann::json::array();
  for (std::size_t k = 0; k < detections.size(); ++k) {
    const Detection& d = detections[k];
    if (d.span.first < 0 || d.span.last >= static_cast<int>(clip.frame_count()) || d.span.first > d.span.last) {
      fail(ErrorCode::InvalidArgument, "detection " + std::to_string(k) + " lies outside the clip");
    }
    const std::string id = "unit_" + source_hash + "_" + std::to_string(k);
    const std::string file = id + ".json";
    const MotionClip unit = clip.slice(static_cast<std::size_t>(d.span.first), static_cast<std::size_t>(d.span.last));
    save_clip(unit, (fs::path(out_dir) / file).string());
    units.push_back({
        {"id", id},
        {"intent", kUnlabeledIntent},
        {"duration_variant_s", nearest_variant(unit.duration_s())},
        {"file", file},
        {"stages", stages_to_json(d.stages)},
        {"source_span", {d.span.first, d.span.last}},
    });
  }
  nlohmann::json fragment = {{"version", 1}, {"source_hash", source_hash}, {"units", std::move(units)}};
  write_file((fs::path(out_dir) / kFragmentFileName).string(), fragment.dump(2));
  return fragment;
}

nlohmann::json build_manifest(const nlohmann::json& fragment, const nlohmann::json& labels,
                              const std::string& rest_pose_file, std::vector<std::string>* skipped) {
  if (!labels.is_object()) fail(ErrorCode::Format, "labels must be an object keyed by unit id");
  nlohmann::json units = nlohmann::json::array();
  try {
    for (const auto& u : fragment.at("units")) {
      const std::string id = u.at("id").get<std::string>();
      if (!labels.contains(id)) {
        if (skipped != nullptr) skipped->push_back(id);
        continue;
      }
      const auto& label = labels[id];
      const std::string intent = label.at("intent").get<std::string>();
      if (!intent_from_string(intent)) fail(ErrorCode::Validation, "label for " + id + ": unknown intent '" + intent + "'");
      nlohmann::json entry = {
          {"id", id},
          {"intent", intent},
          {"duration_variant_s", label.value("duration_variant_s", u.at("duration_variant_s").get<int>())},
          {"file", u.at("file")},
          {"stages", u.at("stages")},
      };
      if (label.contains("semantic_tag")) entry["semantic_tag"] = label["semantic_tag"];
      units.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed fragment or labels: ") + e.what());
  }
  return {{"version", 1}, {"rest_pose", rest_pose_file}, {"units", std::move(units)}};
}

}  // namespace gesgpt
