#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <vector>

#include "ridi/correction.hpp"
#include "ridi/errors.hpp"

using namespace ridi;

namespace {

Eigen::Matrix3d random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  while (axis.norm() < 1e-6) axis = Eigen::Vector3d(g(rng), g(rng), g(rng));
  return Eigen::AngleAxisd(g(rng), axis.normalized()).toRotationMatrix();
}

CorrectionProblem random_problem(int n, const std::vector<int>& constraints, unsigned seed,
                                 double lambda, bool horizontal_only = false,
                                 const Eigen::Vector3d& v0 = Eigen::Vector3d::Zero()) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  CorrectionProblem p;
  p.dt = 1.0 / 200.0;
  p.r_wd.resize(static_cast<std::size_t>(n));
  p.linacc.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    p.r_wd[static_cast<std::size_t>(i)] = random_rotation(rng);
    p.linacc[static_cast<std::size_t>(i)] = Eigen::Vector3d(g(rng), g(rng), g(rng));
  }
  p.knot_frames = default_knot_frames(n, 50);
  p.constraint_frames = constraints;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    p.r_sw.push_back(random_rotation(rng));
    p.target_velocity.emplace_back(g(rng), g(rng));
  }
  p.lambda = lambda;
  p.horizontal_only = horizontal_only;
  p.v0_world = v0;
  return p;
}

/// Independent interpolation weight of knot k at frame f: hat functions on the
/// knot grid with clamping, computed by linear scan (no shared code with the
/// implementation under test).
double hat_weight(const std::vector<int>& knots, int k, int f) {
  const int K = static_cast<int>(knots.size());
  if (f <= knots.front()) return k == 0 ? 1.0 : 0.0;
  if (f >= knots.back()) return k == K - 1 ? 1.0 : 0.0;
  int j = 0;
  while (j + 1 < K && knots[static_cast<std::size_t>(j + 1)] <= f) ++j;
  const double lo = knots[static_cast<std::size_t>(j)];
  const double hi = knots[static_cast<std::size_t>(j + 1)];
  const double a = (f - lo) / (hi - lo);
  if (k == j) return 1.0 - a;
  if (k == j + 1) return a;
  return 0.0;
}

/// Brute-force dense assembly of the damped least-squares problem, solved by
/// complete orthogonal decomposition on the stacked system. O(nc * n * K),
/// no shared code with build_design/solve.
Eigen::VectorXd dense_oracle(const CorrectionProblem& p) {
  const int K = static_cast<int>(p.knot_frames.size());
  const int nc = static_cast<int>(p.constraint_frames.size());
  const int rows_per = p.horizontal_only ? 2 : 3;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_per * nc, 3 * K);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows_per * nc);

  for (int i = 0; i < nc; ++i) {
    const int F = p.constraint_frames[static_cast<std::size_t>(i)];
    Eigen::Vector3d raw = Eigen::Vector3d::Zero();
    std::vector<Eigen::Matrix3d> wsum(static_cast<std::size_t>(K), Eigen::Matrix3d::Zero());
    for (int f = 0; f < F; ++f) {
      raw += p.r_wd[static_cast<std::size_t>(f)] * p.linacc[static_cast<std::size_t>(f)];
      for (int k = 0; k < K; ++k) {
        const double w = hat_weight(p.knot_frames, k, f);
        if (w != 0.0)
          wsum[static_cast<std::size_t>(k)] += w * p.r_wd[static_cast<std::size_t>(f)];
      }
    }
    const Eigen::Matrix3d& rsw = p.r_sw[static_cast<std::size_t>(i)];
    const Eigen::Vector3d base = rsw * (p.v0_world + p.dt * raw);
    const Eigen::Vector3d target(p.target_velocity[static_cast<std::size_t>(i)].x(), 0.0,
                                 p.target_velocity[static_cast<std::size_t>(i)].y());
    int out_r = 0;
    for (int r = 0; r < 3; ++r) {
      if (p.horizontal_only && r == 1) continue;
      const int row = rows_per * i + out_r;
      rhs(row) = target(r) - base(r);
      for (int k = 0; k < K; ++k) {
        const Eigen::Matrix3d blk = p.dt * (rsw * wsum[static_cast<std::size_t>(k)]);
        for (int a = 0; a < 3; ++a) m(row, 3 * k + a) = blk(r, a);
      }
      ++out_r;
    }
  }

  const int rows = rows_per * nc;
  Eigen::MatrixXd stacked(rows + 3 * K, 3 * K);
  stacked.topRows(rows) = m;
  stacked.bottomRows(3 * K) =
      std::sqrt(p.lambda) * Eigen::MatrixXd::Identity(3 * K, 3 * K);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(rows + 3 * K);
  full.head(rows) = rhs;
  return stacked.completeOrthogonalDecomposition().solve(full);
}

CorrectionKnots knots_from(const std::vector<int>& frames, const Eigen::VectorXd& x) {
  CorrectionKnots k;
  k.frames = frames;
  for (int i = 0; i < static_cast<int>(frames.size()); ++i)
    k.bias.push_back(x.segment<3>(3 * i));
  return k;
}

Eigen::VectorXd flatten(const CorrectionKnots& k) {
  Eigen::VectorXd x(3 * static_cast<int>(k.bias.size()));
  for (std::size_t i = 0; i < k.bias.size(); ++i) x.segment<3>(3 * static_cast<int>(i)) = k.bias[i];
  return x;
}

}  // namespace

TEST_CASE("default knot frames cover every multiple inside the sequence") {
  CHECK(default_knot_frames(101, 50) == std::vector<int>{0, 50, 100});
  CHECK(default_knot_frames(100, 50) == std::vector<int>{0, 50});
  CHECK(default_knot_frames(51, 50) == std::vector<int>{0, 50});
  CHECK(default_knot_frames(1, 50) == std::vector<int>{0});
  CHECK_THROWS_AS(default_knot_frames(0, 50), UsageError);
  CHECK_THROWS_AS(default_knot_frames(100, 0), UsageError);
}

TEST_CASE("bias interpolation: linear between knots, clamped outside") {
  CorrectionKnots k;
  k.frames = {0, 50};
  k.bias = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)};

  Eigen::Vector3d at10 = interpolate_bias(k, 10);
  CHECK(at10.x() == doctest::Approx(0.8));
  CHECK(at10.y() == doctest::Approx(0.2));

  Eigen::Vector3d mid = interpolate_bias(k, 25);
  CHECK(mid.x() == doctest::Approx(0.5));
  CHECK(mid.y() == doctest::Approx(0.5));

  CHECK(interpolate_bias(k, 0) == k.bias[0]);
  CHECK(interpolate_bias(k, 50) == k.bias[1]);
  CHECK(interpolate_bias(k, 120) == k.bias[1]);   // clamp right

  CorrectionKnots late;
  late.frames = {100, 200};
  late.bias = {Eigen::Vector3d(2, 0, 0), Eigen::Vector3d(4, 0, 0)};
  CHECK(interpolate_bias(late, 10) == late.bias[0]);  // clamp left

  CorrectionKnots none;
  CHECK(interpolate_bias(none, 7) == Eigen::Vector3d::Zero());

  std::vector<Eigen::Vector3d> table = bias_table(k, 60);
  REQUIRE(table.size() == 60);
  for (int f = 0; f < 60; ++f) CHECK((table[f] - interpolate_bias(k, f)).norm() == 0.0);
}

TEST_CASE("integrated velocity matches the closed form for constant input") {
  const int n = 401;
  CorrectionProblem p;
  p.dt = 1.0 / 200.0;
  p.r_wd.assign(n, Eigen::Matrix3d::Identity());
  p.linacc.assign(n, Eigen::Vector3d(1.0, 0.0, 0.0));
  p.knot_frames = {0};
  p.constraint_frames = {200, 400};
  p.r_sw.assign(2, Eigen::Matrix3d::Identity());
  p.target_velocity.assign(2, Eigen::Vector2d::Zero());

  CorrectionKnots zero;
  zero.frames = {0};
  zero.bias = {Eigen::Vector3d::Zero()};

  // v(f) = f * dt * a, exact: 200 frames * (1/200) = 1.
  Eigen::Vector3d v200 = integrated_velocity_world(p, zero, 200);
  CHECK(v200.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v200.y() == 0.0);

  // A constant bias of -a cancels the motion entirely.
  CorrectionKnots cancel;
  cancel.frames = {0};
  cancel.bias = {Eigen::Vector3d(-1.0, 0.0, 0.0)};
  CHECK(integrated_velocity_world(p, cancel, 400).norm() == doctest::Approx(0.0));

  // v0_world shifts the result verbatim.
  p.v0_world = Eigen::Vector3d(0.5, -0.25, 2.0);
  Eigen::Vector3d shifted = integrated_velocity_world(p, zero, 200);
  CHECK((shifted - v200 - p.v0_world).norm() == doctest::Approx(0.0));
  p.v0_world.setZero();

  // corrected_velocity is the stabilized-frame view at a constraint index.
  Eigen::Vector3d c0 = corrected_velocity(p, zero, 0);
  CHECK((c0 - v200).norm() == doctest::Approx(0.0));
}

TEST_CASE("targets from an uncorrected pass give exactly zero knots") {
  CorrectionProblem p = random_problem(500, {200, 250, 300, 350, 400, 450}, 13, 0.1, true);
  CorrectionKnots none;
  for (std::size_t i = 0; i < p.constraint_frames.size(); ++i) {
    Eigen::Vector3d v =
        p.r_sw[i] * integrated_velocity_world(p, none, p.constraint_frames[i]);
    p.target_velocity[i] = Eigen::Vector2d(v.x(), v.z());
  }
  SolveResult r = solve(p);
  for (const Eigen::Vector3d& b : r.knots.bias) CHECK(b.norm() < 1e-9);
  CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solver matches an independent dense pseudo-inverse oracle") {
  struct Case {
    bool horizontal_only;
    Eigen::Vector3d v0;
    unsigned seed;
  };
  const Case cases[] = {
      {false, Eigen::Vector3d::Zero(), 21},
      {true, Eigen::Vector3d::Zero(), 22},
      {false, Eigen::Vector3d(0.4, -0.2, 1.0), 23},
  };
  for (const Case& c : cases) {
    CAPTURE(c.seed);
    CorrectionProblem p =
        random_problem(500, {200, 250, 300, 350, 400, 450}, c.seed, 0.1, c.horizontal_only, c.v0);
    SolveResult r = solve(p);
    Eigen::VectorXd oracle = dense_oracle(p);

    Eigen::VectorXd got = flatten(r.knots);
    REQUIRE(got.size() == oracle.size());
    CHECK((got - oracle).lpNorm<Eigen::Infinity>() < 1e-6);

    const double obj_oracle = objective(p, knots_from(p.knot_frames, oracle));
    CHECK(r.objective ==
          doctest::Approx(obj_oracle).epsilon(1e-8));
  }
}

TEST_CASE("huge lambda pins the knots at zero") {
  CorrectionProblem p = random_problem(500, {200, 300, 400}, 31, 1e12);
  SolveResult r = solve(p);
  for (const Eigen::Vector3d& b : r.knots.bias) CHECK(b.norm() < 1e-6);
}

TEST_CASE("solution is the minimum of the sampled objective landscape") {
  CorrectionProblem p = random_problem(500, {200, 250, 300, 350, 400, 450}, 41, 0.1);
  SolveResult r = solve(p);

  std::mt19937 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    CorrectionKnots k = r.knots;
    const double scale = std::pow(10.0, -3.0 + 3.0 * (trial % 7) / 6.0);
    for (Eigen::Vector3d& b : k.bias)
      b += scale * Eigen::Vector3d(g(rng), g(rng), g(rng));
    CHECK(objective(p, k) >= r.objective - 1e-9 * (1.0 + r.objective));
  }
}

TEST_CASE("lambda sweep trades data fit against knot magnitude monotonically") {
  CorrectionProblem p = random_problem(600, {200, 250, 300, 350, 400, 450, 500, 550}, 51, 0.1);
  double prev_data = -1.0;
  double prev_norm = 1e100;
  for (double lambda : {1e-4, 1e-2, 0.1, 1.0, 100.0}) {
    p.lambda = lambda;
    SolveResult r = solve(p);
    double reg = 0.0;
    for (const Eigen::Vector3d& b : r.knots.bias) reg += b.squaredNorm();
    const double data = r.objective - lambda * reg;
    CHECK(data >= prev_data - 1e-9 * (1.0 + std::abs(data)));
    CHECK(reg <= prev_norm + 1e-9 * (1.0 + reg));
    prev_data = data;
    prev_norm = reg;
  }
}

TEST_CASE("solution is invariant to a global world rotation") {
  CorrectionProblem p = random_problem(400, {200, 300, 350}, 61, 0.1);
  SolveResult base = solve(p);

  std::mt19937 rng(62);
  Eigen::Matrix3d q = random_rotation(rng);
  CorrectionProblem rotated = p;
  for (Eigen::Matrix3d& r : rotated.r_wd) r = q * r;
  for (Eigen::Matrix3d& r : rotated.r_sw) r = r * q.transpose();
  rotated.v0_world = q * p.v0_world;
  SolveResult rot = solve(rotated);

  for (std::size_t i = 0; i < base.knots.bias.size(); ++i)
    CHECK((rot.knots.bias[i] - base.knots.bias[i]).norm() < 1e-8);
}

TEST_CASE("solution is equivariant to a device remount") {
  CorrectionProblem p = random_problem(400, {200, 300, 350}, 71, 0.1);
  SolveResult base = solve(p);

  std::mt19937 rng(72);
  Eigen::Matrix3d t = random_rotation(rng);
  CorrectionProblem remounted = p;
  for (Eigen::Matrix3d& r : remounted.r_wd) r = r * t;
  for (Eigen::Vector3d& a : remounted.linacc) a = t.transpose() * a;
  SolveResult rem = solve(remounted);

  // Estimated bias moves with the device axes: x' = T^t x.
  for (std::size_t i = 0; i < base.knots.bias.size(); ++i)
    CHECK((rem.knots.bias[i] - t.transpose() * base.knots.bias[i]).norm() < 1e-8);
}

TEST_CASE("lambda zero: underdetermined systems are rejected, determined ones solve") {
  // 500 frames -> 10 knots -> 30 unknowns; 6 constraints * 3 rows = 18 < 30.
  CorrectionProblem p = random_problem(500, {200, 250, 300, 350, 400, 450}, 81, 0.0);
  CHECK_THROWS_AS(solve(p), RankDeficiencyError);

  try {
    solve(p);
  } catch (const RankDeficiencyError& e) {
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }

  // 12 constraints * 3 rows = 36 >= 30 and random rotations: full rank.
  std::vector<int> many;
  for (int f = 200; f < 500; f += 25) many.push_back(f);
  CorrectionProblem ok = random_problem(500, many, 82, 0.0);
  SolveResult r = solve(ok);
  CHECK(std::isfinite(r.objective));
  CHECK(flatten(r.knots).allFinite());
}

TEST_CASE("parallel gram matches the serial reference bitwise") {
  CorrectionProblem p = random_problem(800, {200, 300, 400, 500, 600, 700}, 91, 0.1);
  DesignMatrix d = build_design(p);

  Eigen::MatrixXd gs, gp;
  Eigen::VectorXd rs, rp;
  gram_serial(d, gs, rs);
  gram_parallel(d, gp, rp);

  REQUIRE(gs.rows() == gp.rows());
  for (int i = 0; i < gs.rows(); ++i) {
    CHECK(rs(i) == rp(i));
    for (int j = 0; j < gs.cols(); ++j) CHECK(gs(i, j) == gp(i, j));
  }
}

TEST_CASE("problem validation catches malformed inputs") {
  CorrectionProblem good = random_problem(300, {200, 250}, 101, 0.1);
  CHECK_NOTHROW(solve(good));

  CorrectionProblem p = good;
  p.knot_frames.clear();
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.constraint_frames.clear();
  p.r_sw.clear();
  p.target_velocity.clear();
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.constraint_frames = {250, 200};
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.constraint_frames = {200, 300};  // beyond the 300-frame sequence
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.knot_frames = {0, 50, 50};
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.lambda = -1.0;
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.linacc.pop_back();
  CHECK_THROWS_AS(solve(p), UsageError);

  p = good;
  p.r_sw.pop_back();
  CHECK_THROWS_AS(solve(p), UsageError);
}
