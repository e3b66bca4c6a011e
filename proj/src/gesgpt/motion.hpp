#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gesgpt {

// A single skeleton posture: J joints, 3 coordinates each.
class Pose {
 public:
  Pose() = default;
  Pose(std::vector<std::string> joint_names, std::vector<double> positions);

  std::size_t joint_count() const { return joint_names_.size(); }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  std::span<const double> positions() const { return positions_; }
  double at(std::size_t joint, std::size_t axis) const { return positions_[joint * 3 + axis]; }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  std::vector<std::string> joint_names_;
  std::vector<double> positions_;
};

// Fixed-rate sequence of skeleton poses stored frame-major as F x J x 3.
//
// Construction validates every invariant (F >= 1, J >= 1, positive fps,
// finite values), so a MotionClip that exists is always well formed.
class MotionClip {
 public:
  MotionClip(double fps, std::vector<std::string> joint_names, std::vector<double> data);

  // Repeats one pose for `frames` frames.
  static MotionClip constant(const Pose& pose, std::size_t frames, double fps);

  double fps() const { return fps_; }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  std::size_t frame_count() const { return data_.size() / (3 * joint_names_.size()); }
  std::size_t joint_count() const { return joint_names_.size(); }
  std::size_t values_per_frame() const { return 3 * joint_names_.size(); }
  double duration_s() const { return static_cast<double>(frame_count() - 1) / fps_; }

  std::span<const double> data() const { return data_; }
  std::span<const double> frame(std::size_t f) const {
    return std::span<const double>(data_).subspan(f * values_per_frame(), values_per_frame());
  }
  double at(std::size_t f, std::size_t joint, std::size_t axis) const {
    return data_[f * values_per_frame() + joint * 3 + axis];
  }

  Pose pose(std::size_t f) const;
  // Frames [first, last] inclusive.
  MotionClip slice(std::size_t first, std::size_t last) const;

  bool same_skeleton(const MotionClip& other) const { return joint_names_ == other.joint_names_; }

  friend bool operator==(const MotionClip&, const MotionClip&) = default;

 private:
  double fps_;
  std::vector<std::string> joint_names_;
  std::vector<double> data_;
};

// L1 trajectory loss terms. Derivatives are forward frame
// differences with no fps scaling, and every term is a mean over all
// frame/joint/axis entries of its series.
struct LossReport {
  double position_l1 = 0.0;
  double velocity_l1 = 0.0;
  double acceleration_l1 = 0.0;
  double total = 0.0;
};

// Monotone piecewise-linear map [0,1] -> [0,1] given by its knots.
class TimeWarp {
 public:
  using Knot = std::pair<double, double>;

  static TimeWarp identity();
  // Knots must start at (0,0), end at (1,1), have nondecreasing inputs and
  // outputs. Throws InvalidArgument otherwise.
  explicit TimeWarp(std::vector<Knot> knots);

  double operator()(double u) const;
  const std::vector<Knot>& knots() const { return knots_; }
  bool is_identity() const;

 private:
  std::vector<Knot> knots_;
};

struct OffsetLayer {
  long start_frame = 0;
  MotionClip offsets;
};

MotionClip resample(const MotionClip& clip, double target_fps);
MotionClip derivative(const MotionClip& clip);
LossReport trajectory_l1_loss(const MotionClip& ground_truth, const MotionClip& predicted);

// Samples `clip` over `target_duration_s` at `output_fps` (the clip's own rate
// when omitted). Output sample k sits at normalized time u = k / (F' - 1) and
// takes the source value at normalized time warp(u).
MotionClip time_warp(const MotionClip& clip, const TimeWarp& warp, double target_duration_s,
                     double output_fps = 0.0);

// out[t] = base[t] + sum_i w_i(t) * layer_i[t - start_i]; w ramps in and out
// with a smoothstep over ramp_s seconds at each layer end.
MotionClip additive_blend(const MotionClip& base, std::span<const OffsetLayer> layers,
                          double ramp_s);

double smoothstep(double u);

// File format: {"version":1,"fps":..,"joints":[..],"frames":[[[x,y,z],..],..]}
nlohmann::json clip_to_json(const MotionClip& clip);
MotionClip clip_from_json(const nlohmann::json& j);
std::string dump_clip(const MotionClip& clip);
MotionClip parse_clip(const std::string& text);
MotionClip load_clip(const std::string& path);
void save_clip(const MotionClip& clip, const std::string& path);

// frame,joint,x,y,z rows with a header line.
std::string clip_to_csv(const MotionClip& clip);

}  // namespace gesgpt
