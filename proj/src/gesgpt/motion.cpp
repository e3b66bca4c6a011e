#include "gesgpt/motion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gesgpt/error.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

namespace {

// Fractional frame positions this close to an integer are treated as exact,
// so identity resampling and warping reproduce frames bit-for-bit.
constexpr double kSnap = 1e-9;

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(what) + " contains a non-finite value");
  }
}

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

// Linearly interpolated frame at fractional index `pos` in [0, F-1].
void sample_into(const MotionClip& clip, double pos, std::vector<double>& out) {
  const std::size_t last = clip.frame_count() - 1;
  pos = std::clamp(pos, 0.0, static_cast<double>(last));
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) <= kSnap) pos = nearest;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  const auto a = clip.frame(lo);
  if (frac == 0.0 || lo == last) {
    out.insert(out.end(), a.begin(), a.end());
    return;
  }
  const auto b = clip.frame(lo + 1);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] + frac * (b[i] - a[i]));
}

double mean_abs_diff(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

}  // namespace

Pose::Pose(std::vector<std::string> joint_names, std::vector<double> positions)
    : joint_names_(std::move(joint_names)), positions_(std::move(positions)) {
  if (joint_names_.empty()) fail(ErrorCode::InvalidArgument, "pose must have at least one joint");
  if (positions_.size() != 3 * joint_names_.size()) {
    fail(ErrorCode::InvalidArgument, "pose needs exactly 3 coordinates per joint");
  }
  check_finite(positions_, "pose");
}

MotionClip::MotionClip(double fps, std::vector<std::string> joint_names, std::vector<double> data)
    : fps_(fps), joint_names_(std::move(joint_names)), data_(std::move(data)) {
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) fail(ErrorCode::InvalidArgument, "fps must be positive");
  if (joint_names_.empty()) fail(ErrorCode::InvalidArgument, "clip must have at least one joint");
  if (data_.empty() || data_.size() % values_per_frame() != 0) {
    fail(ErrorCode::InvalidArgument, "clip data must hold a whole number (>= 1) of frames of J x 3 values");
  }
  check_finite(data_, "clip");
}

MotionClip MotionClip::constant(const Pose& pose, std::size_t frames, double fps) {
  if (frames == 0) fail(ErrorCode::InvalidArgument, "constant clip needs at least one frame");
  std::vector<double> data;
  data.reserve(frames * pose.positions().size());
  for (std::size_t f = 0; f < frames; ++f) data.insert(data.end(), pose.positions().begin(), pose.positions().end());
  return MotionClip(fps, pose.joint_names(), std::move(data));
}

Pose MotionClip::pose(std::size_t f) const {
  const auto fr = frame(f);
  return Pose(joint_names_, std::vector<double>(fr.begin(), fr.end()));
}

MotionClip MotionClip::slice(std::size_t first, std::size_t last) const {
  if (first > last || last >= frame_count()) fail(ErrorCode::InvalidArgument, "slice out of range");
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * values_per_frame());
  const auto end = data_.begin() + static_cast<std::ptrdiff_t>((last + 1) * values_per_frame());
  return MotionClip(fps_, joint_names_, std::vector<double>(begin, end));
}

TimeWarp TimeWarp::identity() { return TimeWarp({{0.0, 0.0}, {1.0, 1.0}}); }

TimeWarp::TimeWarp(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) fail(ErrorCode::InvalidArgument, "warp needs at least two knots");
  if (knots_.front() != Knot{0.0, 0.0} || knots_.back() != Knot{1.0, 1.0}) {
    fail(ErrorCode::InvalidArgument, "warp must map 0 to 0 and 1 to 1");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const auto [u0, v0] = knots_[i - 1];
    const auto [u1, v1] = knots_[i];
    if (!std::isfinite(u1) || !std::isfinite(v1) || u1 < u0 || v1 < v0) {
      fail(ErrorCode::InvalidArgument, "warp is not monotone nondecreasing");
    }
  }
}

double TimeWarp::operator()(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  // First segment whose right end reaches u; zero-width segments (jumps) are
  // stepped over so the later knot wins.
  auto it = std::upper_bound(knots_.begin(), knots_.end(), u,
                             [](double x, const Knot& k) { return x < k.first; });
  const Knot& hi = *it;
  const Knot& lo = *std::prev(it);
  const double width = hi.first - lo.first;
  if (width <= 0.0) return hi.second;
  return lo.second + (u - lo.first) / width * (hi.second - lo.second);
}

bool TimeWarp::is_identity() const {
  return std::all_of(knots_.begin(), knots_.end(), [](const Knot& k) { return k.first == k.second; });
}

MotionClip resample(const MotionClip& clip, double target_fps) {
  if (!(target_fps > 0.0) || !std::isfinite(target_fps)) {
    fail(ErrorCode::InvalidArgument, "target fps must be positive");
  }
  if (target_fps == clip.fps()) return clip;
  const auto frames = static_cast<std::size_t>(std::llround(clip.duration_s() * target_fps)) + 1;
  const double ratio = clip.fps() / target_fps;
  std::vector<double> data;
  data.reserve(frames * clip.values_per_frame());
  for (std::size_t k = 0; k < frames; ++k) sample_into(clip, static_cast<double>(k) * ratio, data);
  return MotionClip(target_fps, clip.joint_names(), std::move(data));
}

MotionClip derivative(const MotionClip& clip) {
  const std::size_t frames = clip.frame_count();
  if (frames < 2) fail(ErrorCode::InvalidArgument, "derivative needs at least two frames");
  const std::size_t n = clip.values_per_frame();
  const auto src = clip.data();
  std::vector<double> data((frames - 1) * n);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = src[i + n] - src[i];
  return MotionClip(clip.fps(), clip.joint_names(), std::move(data));
}

LossReport trajectory_l1_loss(const MotionClip& ground_truth, const MotionClip& predicted) {
  if (!same_rate(ground_truth.fps(), predicted.fps()) || !ground_truth.same_skeleton(predicted) ||
      ground_truth.frame_count() != predicted.frame_count()) {
    fail(ErrorCode::IncompatibleClips, "loss inputs must share fps, joints and frame count");
  }
  if (ground_truth.frame_count() < 3) {
    fail(ErrorCode::IncompatibleClips, "loss needs at least three frames for the acceleration term");
  }
  LossReport r;
  r.position_l1 = mean_abs_diff(ground_truth.data(), predicted.data());
  const MotionClip gt_vel = derivative(ground_truth);
  const MotionClip pr_vel = derivative(predicted);
  r.velocity_l1 = mean_abs_diff(gt_vel.data(), pr_vel.data());
  r.acceleration_l1 = mean_abs_diff(derivative(gt_vel).data(), derivative(pr_vel).data());
  r.total = r.position_l1 + r.velocity_l1 + r.acceleration_l1;
  return r;
}

MotionClip time_warp(const MotionClip& clip, const TimeWarp& warp, double target_duration_s,
                     double output_fps) {
  if (!(target_duration_s > 0.0)) fail(ErrorCode::InvalidArgument, "target duration must be positive");
  const double fps = output_fps > 0.0 ? output_fps : clip.fps();
  const auto frames = static_cast<std::size_t>(std::llround(target_duration_s * fps)) + 1;
  const double last_src = static_cast<double>(clip.frame_count() - 1);
  std::vector<double> data;
  data.reserve(frames * clip.values_per_frame());
  for (std::size_t k = 0; k < frames; ++k) {
    const double u = frames == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(frames - 1);
    sample_into(clip, warp(u) * last_src, data);
  }
  return MotionClip(fps, clip.joint_names(), std::move(data));
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

MotionClip additive_blend(const MotionClip& base, std::span<const OffsetLayer> layers, double ramp_s) {
  if (ramp_s < 0.0) fail(ErrorCode::InvalidArgument, "ramp must be non-negative");
  std::vector<double> out(base.data().begin(), base.data().end());
  const long base_frames = static_cast<long>(base.frame_count());
  const std::size_t n = base.values_per_frame();
  const double ramp_frames = ramp_s * base.fps();
  for (const OffsetLayer& layer : layers) {
    if (!same_rate(layer.offsets.fps(), base.fps()) || !layer.offsets.same_skeleton(base)) {
      fail(ErrorCode::IncompatibleClips, "offset layer must share fps and joints with the base");
    }
    const long len = static_cast<long>(layer.offsets.frame_count());
    for (long i = 0; i < len; ++i) {
      const long t = layer.start_frame + i;
      if (t < 0 || t >= base_frames) continue;
      double w = 1.0;
      if (ramp_frames > 0.0) {
        const double head = smoothstep(static_cast<double>(i) / ramp_frames);
        const double tail = smoothstep(static_cast<double>(len - 1 - i) / ramp_frames);
        w = std::min(head, tail);
      }
      if (w == 0.0) continue;
      const auto off = layer.offsets.frame(static_cast<std::size_t>(i));
      double* dst = out.data() + static_cast<std::size_t>(t) * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] += w * off[c];
    }
  }
  return MotionClip(base.fps(), base.joint_names(), std::move(out));
}

nlohmann::json clip_to_json(const MotionClip& clip) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t f = 0; f < clip.frame_count(); ++f) {
    nlohmann::json joints = nlohmann::json::array();
    for (std::size_t j = 0; j < clip.joint_count(); ++j) {
      joints.push_back({clip.at(f, j, 0), clip.at(f, j, 1), clip.at(f, j, 2)});
    }
    frames.push_back(std::move(joints));
  }
  return {{"version", 1}, {"fps", clip.fps()}, {"joints", clip.joint_names()}, {"frames", std::move(frames)}};
}

MotionClip clip_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) fail(ErrorCode::Format, "motion clip must be a JSON object");
    if (j.at("version").get<int>() != 1) fail(ErrorCode::Format, "unsupported motion clip version");
    const double fps = j.at("fps").get<double>();
    auto joints = j.at("joints").get<std::vector<std::string>>();
    const auto& frames = j.at("frames");
    if (!frames.is_array()) fail(ErrorCode::Format, "\"frames\" must be an array");
    std::vector<double> data;
    data.reserve(frames.size() * joints.size() * 3);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const auto& fr = frames[f];
      if (!fr.is_array() || fr.size() != joints.size()) {
        fail(ErrorCode::Format, "frame " + std::to_string(f) + " does not have one entry per joint");
      }
      for (const auto& p : fr) {
        if (!p.is_array() || p.size() != 3) {
          fail(ErrorCode::Format, "frame " + std::to_string(f) + " has a position that is not [x,y,z]");
        }
        for (const auto& c : p) data.push_back(c.get<double>());
      }
    }
    return MotionClip(fps, std::move(joints), std::move(data));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed motion clip: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::Format, std::string("invalid motion clip: ") + e.what());
    throw;
  }
}

std::string dump_clip(const MotionClip& clip) { return clip_to_json(clip).dump(); }

MotionClip parse_clip(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::Format, "motion clip is not valid JSON");
  return clip_from_json(j);
}

MotionClip load_clip(const std::string& path) {
  try {
    return parse_clip(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    fail(e.code(), path + ": " + e.what());
  }
}

void save_clip(const MotionClip& clip, const std::string& path) { write_file(path, dump_clip(clip)); }

std::string clip_to_csv(const MotionClip& clip) {
  std::ostringstream os;
  os.precision(17);
  os << "frame,joint,x,y,z\n";
  for (std::size_t f = 0; f < clip.frame_count(); ++f) {
    for (std::size_t j = 0; j < clip.joint_count(); ++j) {
      os << f << ',' << clip.joint_names()[j] << ',' << clip.at(f, j, 0) << ',' << clip.at(f, j, 1) << ','
         << clip.at(f, j, 2) << '\n';
    }
  }
  return os.str();
}

}  // namespace gesgpt
