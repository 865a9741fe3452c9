#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "ridi/errors.hpp"
#include "ridi/integrator.hpp"
#include "ridi/synth.hpp"

using namespace ridi;
using namespace ridi::testing;

namespace {

Sequence flat_sequence(int n, const Eigen::Vector3d& acc_world) {
  Sequence seq;
  seq.sample_rate = 200.0;
  seq.placement = Placement::Hand;
  seq.frames.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SensorFrame& f = seq.frames[static_cast<std::size_t>(i)];
    f.t = i / 200.0;
    f.gravity = Vec3<Frame::Device>(0.0, 9.81, 0.0);
    f.orientation = RotWD::identity();
    f.linacc = Vec3<Frame::Device>(acc_world);  // identity orientation
  }
  return seq;
}

bool same_trajectory_bits(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (std::memcmp(a.position[static_cast<std::size_t>(i)].data(),
                    b.position[static_cast<std::size_t>(i)].data(), 3 * sizeof(double)) != 0)
      return false;
    if (std::memcmp(a.velocity[static_cast<std::size_t>(i)].data(),
                    b.velocity[static_cast<std::size_t>(i)].data(), 3 * sizeof(double)) != 0)
      return false;
  }
  return true;
}

const CorrectionKnots kNoKnots{};

}  // namespace

TEST_CASE("zero acceleration is a fixed point") {
  Sequence seq = flat_sequence(500, Eigen::Vector3d::Zero());
  Trajectory t = double_integrate(seq, kNoKnots);
  REQUIRE(t.size() == 500);
  for (int i = 0; i < 500; ++i) {
    CHECK(t.position[static_cast<std::size_t>(i)].norm() == 0.0);
    CHECK(t.velocity[static_cast<std::size_t>(i)].norm() == 0.0);
  }
}

TEST_CASE("constant world acceleration integrates to the euler closed form") {
  const int n = 401;  // 2 s
  Sequence seq = flat_sequence(n, Eigen::Vector3d(1.0, 0.0, 0.0));
  IntegrationOptions opt;
  opt.zero_vertical_velocity = false;

  Trajectory t = double_integrate(seq, kNoKnots, opt);
  const double dt = 1.0 / 200.0;
  const int steps = n - 1;

  // Explicit Euler: v_f = f*a*dt, p_f = a*dt^2 * f(f-1)/2.
  const double expect_p = dt * dt * steps * (steps - 1) / 2.0;
  CHECK(t.velocity.back().x() == doctest::Approx(steps * dt).epsilon(1e-12));
  CHECK(t.position.back().x() == doctest::Approx(expect_p).epsilon(1e-12));
  CHECK(std::abs(t.position.back().x() - 2.0) < 0.011);  // near the continuum limit

  opt.semi_implicit = true;
  Trajectory ts = double_integrate(seq, kNoKnots, opt);
  // Semi-implicit: p_f = a*dt^2 * f(f+1)/2.
  const double expect_ps = dt * dt * steps * (steps + 1) / 2.0;
  CHECK(ts.position.back().x() == doctest::Approx(expect_ps).epsilon(1e-12));
  CHECK(ts.position.back().x() > t.position.back().x());
}

TEST_CASE("knot bias feeds the integration") {
  const int n = 401;
  Sequence seq = flat_sequence(n, Eigen::Vector3d(1.0, 0.0, 0.0));
  CorrectionKnots cancel;
  cancel.frames = {0};
  cancel.bias = {Eigen::Vector3d(-1.0, 0.0, 0.0)};
  Trajectory t = double_integrate(seq, cancel);
  CHECK(t.position.back().norm() == 0.0);
  CHECK(t.velocity.back().norm() == 0.0);
}

TEST_CASE("flat-floor clamp zeroes vertical velocity every step") {
  const int n = 401;
  Sequence seq = flat_sequence(n, Eigen::Vector3d(0.3, 2.0, 0.0));
  Trajectory t = double_integrate(seq, kNoKnots);  // clamp on by default
  CHECK(t.position.back().y() == 0.0);
  CHECK(t.velocity.back().y() == 0.0);
  CHECK(t.position.back().x() > 0.0);

  IntegrationOptions off;
  off.zero_vertical_velocity = false;
  Trajectory t2 = double_integrate(seq, kNoKnots, off);
  CHECK(t2.position.back().y() > 1.0);
}

TEST_CASE("trajectory csv round-trips and rejects malformed files") {
  const std::string dir = tmp_dir("integrator_csv");
  const std::string path = dir + "/t.csv";

  Sequence seq = flat_sequence(300, Eigen::Vector3d(0.5, 0.0, -0.2));
  Trajectory t = double_integrate(seq, kNoKnots);
  write_trajectory_csv(t, path);
  Trajectory back = read_trajectory_csv(path);

  REQUIRE(back.size() == t.size());
  for (int i = 0; i < t.size(); ++i) {
    CHECK((back.position[static_cast<std::size_t>(i)] -
           t.position[static_cast<std::size_t>(i)]).norm() < 1e-7);
    CHECK((back.velocity[static_cast<std::size_t>(i)] -
           t.velocity[static_cast<std::size_t>(i)]).norm() < 1e-7);
  }

  {
    std::ofstream bad(dir + "/bad_header.csv");
    bad << "time,x,y,z\n0,0,0,0\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(dir + "/bad_header.csv"), SchemaError);

  {
    std::ofstream bad(dir + "/bad_row.csv");
    bad << "t,x,y,z,vx,vy,vz\n0,0,0,0,0,0\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(dir + "/bad_row.csv"), ParseError);
}

TEST_CASE("offline constraint frames start after one feature window") {
  CHECK(offline_constraint_frames(12001, 50).size() == 237);
  CHECK(offline_constraint_frames(12001, 50).front() == 200);
  CHECK(offline_constraint_frames(12001, 50).back() == 12000);
  CHECK(offline_constraint_frames(201, 50) == std::vector<int>{200});
  CHECK(offline_constraint_frames(200, 50).empty());
  CHECK(offline_constraint_frames(100, 50).empty());
}

TEST_CASE("ground-truth trajectory mirrors the stored poses") {
  NoiseSpec noise = NoiseSpec::clean(3);
  Sequence seq = synthesize(make_walk(1.0, 4.0), Placement::Hand, noise).seq;
  Trajectory gt = gt_trajectory(seq);
  REQUIRE(gt.size() == seq.size());
  for (int i = 0; i < seq.size(); i += 100) {
    CHECK((gt.position[static_cast<std::size_t>(i)] -
           seq.frames[static_cast<std::size_t>(i)].gt_position->v).norm() == 0.0);
  }

  Sequence bare = flat_sequence(300, Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(gt_trajectory(bare), SchemaError);
}

TEST_CASE("offline run with enormous lambda equals the raw integration bitwise") {
  NoiseSpec noise;
  noise.seed = 17;
  Sequence seq = synthesize(make_walk(1.3, 6.0), Placement::Leg, noise).seq;

  OfflineConfig cfg;
  cfg.lambda = 1e12;
  Trajectory corrected = run_offline(seq, shared_model(), cfg);
  Trajectory raw = double_integrate(seq, kNoKnots, cfg.integration);
  CHECK(same_trajectory_bits(corrected, raw));
}

TEST_CASE("offline correction beats raw integration on noisy data") {
  NoiseSpec noise;
  noise.seed = 23;
  Sequence seq = synthesize(make_walk(1.5, 8.0), Placement::Bag, noise).seq;

  Trajectory corrected = run_offline(seq, shared_model());
  Trajectory raw = double_integrate(seq, kNoKnots);
  Trajectory gt = gt_trajectory(seq);

  auto mean_err = [&](const Trajectory& t) {
    double s = 0.0;
    for (int i = 0; i < t.size(); ++i) {
      Eigen::Vector3d d = t.position[static_cast<std::size_t>(i)] -
                          gt.position[static_cast<std::size_t>(i)];
      s += std::hypot(d.x(), d.z());
    }
    return s / t.size();
  };
  CHECK(mean_err(corrected) < mean_err(raw));
  CHECK(mean_err(corrected) < 2.0);
}

TEST_CASE("online startup matches zero-bias integration bitwise") {
  NoiseSpec noise;
  noise.seed = 29;
  Sequence seq = synthesize(make_walk(1.2, 4.0), Placement::Hand, noise).seq;

  Trajectory online = run_online(seq, shared_model());
  Trajectory raw = double_integrate(seq, kNoKnots);

  // No regression before one feature window exists, and the first solve runs
  // at the earliest 200-frame boundary with constraints; frames [0, 199] come
  // out of the same zero-bias explicit Euler recursion.
  for (int i = 0; i < 200 && i < online.size(); ++i) {
    CHECK(std::memcmp(online.position[static_cast<std::size_t>(i)].data(),
                      raw.position[static_cast<std::size_t>(i)].data(),
                      3 * sizeof(double)) == 0);
  }
}

TEST_CASE("online estimate lands near the offline one") {
  NoiseSpec noise;
  noise.seed = 31;
  noise.bias_const_mag = 0.05;
  noise.bias_sin_amp = {0.02};
  noise.bias_sin_period = {13.0};
  Sequence seq = synthesize(make_walk(1.4, 9.0), Placement::Hand, noise).seq;

  Trajectory online = run_online(seq, shared_model());
  Trajectory offline = run_offline(seq, shared_model());
  REQUIRE(online.size() == offline.size());

  Eigen::Vector3d d = online.position.back() - offline.position.back();
  CHECK(std::hypot(d.x(), d.z()) < 0.5);
}

TEST_CASE("online engine bookkeeping follows the configured schedule") {
  NoiseSpec noise;
  noise.seed = 37;
  Sequence seq = synthesize(make_walk(1.0, 5.0), Placement::Body, noise).seq;
  const int n = seq.size();

  OnlineConfig cfg;
  OnlineEngine eng(shared_model(), cfg, seq.sample_rate);
  for (const SensorFrame& f : seq.frames) eng.push(f);
  eng.finish();

  // Regressions at f = 200, 250, ... (multiples of the stride with a window).
  int expect_regressions = 0;
  for (int f = kWindowFrames; f < n; f += cfg.regression_stride) ++expect_regressions;
  CHECK(eng.regression_calls() == expect_regressions);

  // Window solves every correction_period frames plus the finish() pass.
  int expect_solves = 0;
  for (int f = cfg.correction_period; f < n; f += cfg.correction_period) ++expect_solves;
  if ((n - 1) % cfg.correction_period != 0) ++expect_solves;
  CHECK(eng.solve_count() == expect_solves);

  CHECK(eng.trajectory().size() == n);
  CHECK_FALSE(eng.published_knots().empty());

  // finish() is idempotent.
  const int solves = eng.solve_count();
  eng.finish();
  CHECK(eng.solve_count() == solves);
}

TEST_CASE("degenerate period: one solve at the end only") {
  NoiseSpec noise;
  noise.seed = 41;
  Sequence seq = synthesize(make_walk(1.0, 3.0), Placement::Hand, noise).seq;

  OnlineConfig cfg;
  cfg.correction_period = 10 * seq.size();  // never fires mid-stream
  Trajectory t = run_online(seq, shared_model(), cfg);
  CHECK(t.size() == seq.size());

  OnlineEngine eng(shared_model(), cfg, seq.sample_rate);
  for (const SensorFrame& f : seq.frames) eng.push(f);
  eng.finish();
  CHECK(eng.solve_count() == 1);
}

TEST_CASE("out-of-order frames are rejected") {
  Sequence seq = flat_sequence(300, Eigen::Vector3d::Zero());
  OnlineEngine eng(shared_model(), {}, seq.sample_rate);
  eng.push(seq.frames[0]);
  eng.push(seq.frames[1]);
  CHECK_THROWS_AS(eng.push(seq.frames[1]), SchemaError);
}

TEST_CASE("per-step position increments respect the speed scale") {
  NoiseSpec noise;
  noise.seed = 43;
  Sequence seq = synthesize(make_walk(2.0, 6.0), Placement::Leg, noise).seq;
  Trajectory t = run_offline(seq, shared_model());
  const double dt = seq.dt();
  for (int i = 1; i < t.size(); ++i) {
    const double step = (t.position[static_cast<std::size_t>(i)] -
                         t.position[static_cast<std::size_t>(i - 1)]).norm();
    CHECK(step <= 5.0 * dt);
  }
}

TEST_CASE("online throughput is real-time on this hardware") {
  NoiseSpec noise;
  noise.seed = 47;
  Sequence seq = synthesize(make_walk(1.2, 6.0), Placement::Hand, noise).seq;
  ThroughputReport rep = throughput_report(seq, shared_model());
  CHECK(rep.frames == seq.size());
  CHECK(rep.fps > 0.0);
  CHECK(rep.solve_count > 0);
  // Informational: the suite does not pin a number, but a streaming estimator
  // slower than the sample rate would be useless; assert a loose floor.
  CHECK(rep.fps > 200.0);
}
