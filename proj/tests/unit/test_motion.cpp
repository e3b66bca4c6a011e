#include <doctest.h>

#include <cmath>
#include <random>

#include "gesgpt/error.hpp"
#include "gesgpt/motion.hpp"
#include "helpers.hpp"
#include "oracles/loss_oracle.hpp"

using namespace gesgpt;
using testing::line_clip;
using testing::random_clip;

namespace {

std::vector<double> xs(const MotionClip& c) {
  std::vector<double> out;
  for (std::size_t f = 0; f < c.frame_count(); ++f) out.push_back(c.at(f, 0, 0));
  return out;
}

oracle::Frames nested(const MotionClip& c) {
  oracle::Frames out(c.frame_count());
  for (std::size_t f = 0; f < c.frame_count(); ++f) {
    for (std::size_t j = 0; j < c.joint_count(); ++j) out[f].push_back({c.at(f, j, 0), c.at(f, j, 1), c.at(f, j, 2)});
  }
  return out;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("clip construction enforces shape and finiteness") {
  CHECK(code_of([] { MotionClip(0.0, {"a"}, {0, 0, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { MotionClip(25.0, {}, {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { MotionClip(25.0, {"a"}, {0, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { MotionClip(25.0, {"a"}, {0, NAN, 0}); }) == ErrorCode::InvalidArgument);
  const MotionClip c(10.0, {"a", "b"}, std::vector<double>(2 * 6 * 3, 1.0));
  CHECK(c.frame_count() == 6);
  CHECK(c.duration_s() == doctest::Approx(0.5));
}

TEST_CASE("resample") {
  SUBCASE("linear ramp doubles its frame rate") {
    check_close(xs(resample(line_clip({0, 1, 2, 3}, 10.0), 20.0)), {0, 0.5, 1, 1.5, 2, 2.5, 3});
  }
  SUBCASE("own rate is the identity") {
    std::mt19937_64 rng(3);
    const MotionClip c = random_clip(rng, 9, 2);
    CHECK(resample(c, 25.0) == c);
  }
  SUBCASE("61 frames at 15 fps become 101 frames at 25 fps with exact endpoints") {
    std::mt19937_64 rng(4);
    const MotionClip c = random_clip(rng, 61, 3, 15.0);
    const MotionClip r = resample(c, 25.0);
    // duration 4 s -> round(4 * 25) + 1
    CHECK(r.frame_count() == 101);
    for (std::size_t k = 0; k < c.values_per_frame(); ++k) {
      CHECK(r.frame(0)[k] == c.frame(0)[k]);
      CHECK(r.frame(100)[k] == c.frame(60)[k]);
    }
  }
  SUBCASE("round trip on a piecewise-linear clip") {
    const MotionClip c = line_clip({0, 2, 1, 5, 4}, 10.0);
    check_close(xs(resample(resample(c, 20.0), 10.0)), xs(c), 1e-9);
  }
  CHECK(code_of([] { resample(line_clip({0, 1}, 10.0), 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { resample(line_clip({0, 1}, 10.0), -5.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("derivative") {
  check_close(xs(derivative(line_clip({0, 1, 2, 3}, 25.0))), {1, 1, 1});
  check_close(xs(derivative(derivative(line_clip({0, 1, 2, 3}, 25.0)))), {0, 0});
  const MotionClip still = line_clip({4, 4, 4, 4, 4}, 25.0);
  check_close(xs(derivative(still)), {0, 0, 0, 0});
  CHECK(code_of([] { derivative(line_clip({1}, 25.0)); }) == ErrorCode::InvalidArgument);

  // Affine in time -> constant derivative, regardless of fps.
  const MotionClip affine = line_clip({0.5, 0.8, 1.1, 1.4, 1.7}, 60.0);
  for (double d : xs(derivative(affine))) CHECK(d == doctest::Approx(0.3));
}

TEST_CASE("trajectory loss") {
  std::mt19937_64 rng(11);
  SUBCASE("identical clips") {
    const MotionClip a = random_clip(rng, 10, 4);
    const LossReport r = trajectory_l1_loss(a, a);
    CHECK(r.position_l1 == 0.0);
    CHECK(r.velocity_l1 == 0.0);
    CHECK(r.acceleration_l1 == 0.0);
    CHECK(r.total == 0.0);
  }
  SUBCASE("constant offset") {
    const MotionClip a = random_clip(rng, 10, 4);
    std::vector<double> shifted(a.data().begin(), a.data().end());
    for (double& v : shifted) v += 0.5;
    const LossReport r = trajectory_l1_loss(a, MotionClip(a.fps(), a.joint_names(), shifted));
    CHECK(r.position_l1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.velocity_l1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.acceleration_l1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.total == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("matches the brute-force oracle, is symmetric and self-consistent") {
    for (int trial = 0; trial < 25; ++trial) {
      const MotionClip a = random_clip(rng, 10, 4);
      const MotionClip b = random_clip(rng, 10, 4);
      const LossReport r = trajectory_l1_loss(a, b);
      const oracle::Loss o = oracle::l1_loss(nested(a), nested(b));
      CHECK(std::abs(r.position_l1 - o.position) <= 1e-12);
      CHECK(std::abs(r.velocity_l1 - o.velocity) <= 1e-12);
      CHECK(std::abs(r.acceleration_l1 - o.acceleration) <= 1e-12);
      CHECK(std::abs(r.total - o.total) <= 1e-12);
      CHECK(r.total == doctest::Approx(r.position_l1 + r.velocity_l1 + r.acceleration_l1));

      const LossReport s = trajectory_l1_loss(b, a);
      CHECK(s.total == r.total);
      // Velocity term = position term of the derivatives.
      const MotionClip da = derivative(a), db = derivative(b);
      const LossReport d = trajectory_l1_loss(da, db);
      CHECK(std::abs(d.position_l1 - r.velocity_l1) <= 1e-12);
      CHECK(std::abs(d.velocity_l1 - r.acceleration_l1) <= 1e-12);
    }
  }
  SUBCASE("incompatible inputs") {
    const MotionClip a = random_clip(rng, 10, 4);
    CHECK(code_of([&] { trajectory_l1_loss(a, random_clip(rng, 9, 4)); }) == ErrorCode::IncompatibleClips);
    CHECK(code_of([&] { trajectory_l1_loss(a, random_clip(rng, 10, 3)); }) == ErrorCode::IncompatibleClips);
    CHECK(code_of([&] { trajectory_l1_loss(a, random_clip(rng, 10, 4, 30.0)); }) == ErrorCode::IncompatibleClips);
    CHECK(code_of([&] { trajectory_l1_loss(random_clip(rng, 2, 1), random_clip(rng, 2, 1)); }) ==
          ErrorCode::IncompatibleClips);
  }
}

TEST_CASE("time warp") {
  SUBCASE("knot validation") {
    CHECK(code_of([] { TimeWarp({{0, 0}, {0.5, 0.7}, {0.6, 0.6}, {1, 1}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { TimeWarp({{0, 0.1}, {1, 1}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { TimeWarp({{0, 0}, {0.4, 0.5}}); }) == ErrorCode::InvalidArgument);
    CHECK(TimeWarp({{0, 0}, {0.5, 0.5}, {1, 1}}).is_identity());
  }
  SUBCASE("identity at source duration reproduces the clip") {
    std::mt19937_64 rng(5);
    const MotionClip c = random_clip(rng, 26, 3);
    CHECK(time_warp(c, TimeWarp::identity(), c.duration_s()) == c);
  }
  SUBCASE("uniform stretch of a ramp") {
    check_close(xs(time_warp(line_clip({0, 1, 2}, 1.0), TimeWarp::identity(), 4.0)), {0, 0.5, 1, 1.5, 2});
  }
  SUBCASE("piecewise warp lands the apex pose on its new time") {
    // 11-frame clip at 10 fps with a distinctive apex at source frame 4
    // (u = 0.4). The warp sends output u = 0.6 to source u = 0.4; over 2 s
    // at 10 fps that is output frame 12.
    std::mt19937_64 rng(6);
    const MotionClip c = random_clip(rng, 11, 2, 10.0);
    const MotionClip w = time_warp(c, TimeWarp({{0, 0}, {0.6, 0.4}, {1, 1}}), 2.0);
    REQUIRE(w.frame_count() == 21);
    for (std::size_t k = 0; k < c.values_per_frame(); ++k) CHECK(w.frame(12)[k] == doctest::Approx(c.frame(4)[k]));
  }
  SUBCASE("endpoints preserved and values stay inside the source range") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const MotionClip c = random_clip(rng, 17, 2);
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      const MotionClip w = time_warp(c, TimeWarp({{0, 0}, {a, b}, {1, 1}}), 0.2 + 3.0 * u(rng));
      for (std::size_t k = 0; k < c.values_per_frame(); ++k) {
        CHECK(std::abs(w.frame(0)[k] - c.frame(0)[k]) <= 1e-9);
        CHECK(std::abs(w.frame(w.frame_count() - 1)[k] - c.frame(c.frame_count() - 1)[k]) <= 1e-9);
      }
      for (std::size_t j = 0; j < c.joint_count(); ++j) {
        for (std::size_t axis = 0; axis < 3; ++axis) {
          double lo = 1e9, hi = -1e9;
          for (std::size_t f = 0; f < c.frame_count(); ++f) {
            lo = std::min(lo, c.at(f, j, axis));
            hi = std::max(hi, c.at(f, j, axis));
          }
          for (std::size_t f = 0; f < w.frame_count(); ++f) {
            CHECK(w.at(f, j, axis) >= lo - 1e-12);
            CHECK(w.at(f, j, axis) <= hi + 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("additive blend") {
  std::mt19937_64 rng(9);
  const MotionClip base = random_clip(rng, 30, 2);
  SUBCASE("no layers") { CHECK(additive_blend(base, {}, 0.2) == base); }
  SUBCASE("zero layer") {
    const std::vector<OffsetLayer> layers{{5, MotionClip(25.0, base.joint_names(), std::vector<double>(10 * 6, 0.0))}};
    CHECK(additive_blend(base, layers, 0.2) == base);
  }
  SUBCASE("ramp 0 adds the layer verbatim inside its span") {
    const MotionClip layer = random_clip(rng, 10, 2);
    const std::vector<OffsetLayer> layers{{7, layer}};
    const MotionClip out = additive_blend(base, layers, 0.0);
    for (std::size_t f = 0; f < base.frame_count(); ++f) {
      for (std::size_t k = 0; k < base.values_per_frame(); ++k) {
        const bool inside = f >= 7 && f < 17;
        const double expect = base.frame(f)[k] + (inside ? layer.frame(f - 7)[k] : 0.0);
        CHECK(out.frame(f)[k] == doctest::Approx(expect).epsilon(1e-15));
      }
    }
  }
  SUBCASE("smoothstep ramps at both ends") {
    const MotionClip ones(25.0, base.joint_names(), std::vector<double>(20 * 6, 1.0));
    const MotionClip zero = MotionClip::constant(Pose(base.joint_names(), std::vector<double>(6, 0.0)), 30, 25.0);
    const std::vector<OffsetLayer> layers{{0, ones}};
    const MotionClip out = additive_blend(zero, layers, 0.2);  // 5 ramp frames
    CHECK(out.at(0, 0, 0) == 0.0);
    CHECK(out.at(2, 0, 0) == doctest::Approx(smoothstep(2.0 / 5.0)));
    CHECK(out.at(5, 0, 0) == 1.0);
    CHECK(out.at(10, 0, 0) == 1.0);
    CHECK(out.at(17, 0, 0) == doctest::Approx(smoothstep(2.0 / 5.0)));
    CHECK(out.at(19, 0, 0) == 0.0);
    CHECK(out.at(25, 0, 0) == 0.0);
  }
  SUBCASE("linear in the layer") {
    const MotionClip layer = random_clip(rng, 12, 2);
    std::vector<double> scaled(layer.data().begin(), layer.data().end());
    for (double& v : scaled) v *= 2.5;
    const std::vector<OffsetLayer> one{{4, layer}};
    const std::vector<OffsetLayer> two{{4, MotionClip(25.0, layer.joint_names(), scaled)}};
    const MotionClip a = additive_blend(base, one, 0.2);
    const MotionClip b = additive_blend(base, two, 0.2);
    for (std::size_t i = 0; i < a.data().size(); ++i) {
      CHECK(b.data()[i] - base.data()[i] == doctest::Approx(2.5 * (a.data()[i] - base.data()[i])));
    }
  }
  SUBCASE("mismatched layer") {
    const std::vector<OffsetLayer> layers{{0, random_clip(rng, 5, 3)}};
    CHECK(code_of([&] { additive_blend(base, layers, 0.2); }) == ErrorCode::IncompatibleClips);
  }
}

TEST_CASE("clip file format") {
  std::mt19937_64 rng(10);
  const MotionClip c = random_clip(rng, 4, 2);
  CHECK(parse_clip(dump_clip(c)) == c);
  const std::string text = dump_clip(c);
  CHECK(text.rfind("{\"fps\":", 0) == 0);  // sorted keys
  CHECK(code_of([] { parse_clip("{\"version\":1,\"fps\":25,\"joints\":[\"a\"],\"frames\":[[[0,0]]]}"); }) ==
        ErrorCode::Format);
  CHECK(code_of([] { parse_clip("{\"version\":2,\"fps\":25,\"joints\":[\"a\"],\"frames\":[[[0,0,0]]]}"); }) ==
        ErrorCode::Format);
  CHECK(code_of([] { parse_clip("not json"); }) == ErrorCode::Format);
  const std::string csv = clip_to_csv(line_clip({1.5, 2}, 25.0));
  CHECK(csv == "frame,joint,x,y,z\n0,j0,1.5,0,0\n1,j0,2,0,0\n");
}
