// Compares the OpenMP kernels against their serial reference implementations:
// wall time plus a bitwise equality check, since the parallel variants are
// required to reproduce the serial results exactly at any thread count.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include <omp.h>

#include "ridi/cascade.hpp"
#include "ridi/correction.hpp"
#include "ridi/features.hpp"
#include "ridi/integrator.hpp"
#include "ridi/smoothing.hpp"
#include "ridi/synth.hpp"

using namespace ridi;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e99;
  for (int i = 0; i < reps; ++i) {
    const double t0 = now();
    f();
    best = std::min(best, now() - t0);
  }
  return best;
}

bool bits_equal(const std::vector<std::vector<double>>& a,
                const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].size() != b[c].size()) return false;
    if (std::memcmp(a[c].data(), b[c].data(), a[c].size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void report(const char* name, double serial, double parallel, bool equal) {
  std::printf("%-18s serial %8.4f s   parallel %8.4f s   speedup %5.2fx   %s\n",
              name, serial, parallel, serial / parallel,
              equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  MotionScript script;
  script.segments = {
      MotionScript::pause(2.0),
      MotionScript::ramp(0.0, 1.5, 2.0),
      MotionScript::straight(1.5, 110.0),
      MotionScript::ramp(1.5, 0.0, 2.0),
      MotionScript::pause(4.0),
  };
  const SynthResult data = synthesize(script, Placement::Hand, NoiseSpec{});
  const Sequence& seq = data.seq;
  std::printf("sequence: %d frames\n", seq.size());

  // gaussian smoothing
  Signal raw(6);
  for (const SensorFrame& f : seq.frames) {
    for (int c = 0; c < 3; ++c) raw[static_cast<std::size_t>(c)].push_back(f.gyro.v(c));
    for (int c = 0; c < 3; ++c) raw[static_cast<std::size_t>(c + 3)].push_back(f.linacc.v(c));
  }
  Signal s_serial(raw.size()), s_parallel(raw.size());
  const double t_ss = time_best_of(3, [&] {
    for (std::size_t c = 0; c < raw.size(); ++c)
      s_serial[c] = gaussian_smooth_serial(raw[c], 2.0);
  });
  const double t_sp = time_best_of(3, [&] {
    for (std::size_t c = 0; c < raw.size(); ++c)
      s_parallel[c] = gaussian_smooth(raw[c], 2.0);
  });
  report("smoothing", t_ss, t_sp, bits_equal(s_serial, s_parallel));

  // feature extraction
  const StabilizedSignals stab = to_stabilized(seq);
  std::vector<int> frames = offline_constraint_frames(seq.size(), 10);
  std::vector<FeatureVector> f_serial, f_parallel;
  const double t_fs = time_best_of(3, [&] { f_serial = features_at_serial(stab, frames); });
  const double t_fp = time_best_of(3, [&] { f_parallel = features_at(stab, frames); });
  bool f_eq = f_serial.size() == f_parallel.size();
  for (std::size_t i = 0; f_eq && i < f_serial.size(); ++i)
    f_eq = std::memcmp(f_serial[i].data(), f_parallel[i].data(),
                       kFeatureDim * sizeof(double)) == 0;
  report("features", t_fs, t_fp, f_eq);

  // normal-equation assembly
  CorrectionProblem problem;
  problem.dt = seq.dt();
  problem.r_wd.reserve(static_cast<std::size_t>(seq.size()));
  problem.linacc.reserve(static_cast<std::size_t>(seq.size()));
  for (const SensorFrame& f : seq.frames) {
    problem.r_wd.push_back(f.orientation.q.toRotationMatrix());
    problem.linacc.push_back(f.linacc.v);
  }
  problem.knot_frames = default_knot_frames(seq.size(), 50);
  problem.constraint_frames = offline_constraint_frames(seq.size(), 50);
  for (int f : problem.constraint_frames) {
    problem.r_sw.push_back(
        stabilized_from_world(seq.frames[static_cast<std::size_t>(f)]).matrix());
    problem.target_velocity.emplace_back(0.0, 0.0);
  }
  const DesignMatrix design = build_design(problem);
  Eigen::MatrixXd g_serial, g_parallel;
  Eigen::VectorXd r_serial, r_parallel;
  const double t_gs = time_best_of(3, [&] { gram_serial(design, g_serial, r_serial); });
  const double t_gp = time_best_of(3, [&] { gram_parallel(design, g_parallel, r_parallel); });
  report("gram", t_gs, t_gp,
         bits_equal(g_serial, g_parallel) &&
             std::memcmp(r_serial.data(), r_parallel.data(),
                         static_cast<std::size_t>(r_serial.size()) * sizeof(double)) == 0);

  // batch prediction (tiny synthetic model: normalizer + linear weights)
  CascadeModel model;
  model.norm.mean = Eigen::VectorXd::Zero(kFeatureDim);
  model.norm.std = Eigen::VectorXd::Ones(kFeatureDim);
  for (int p = 0; p < 4; ++p) {
    model.classifier.ovr[static_cast<std::size_t>(p)].w =
        Eigen::VectorXd::Constant(kFeatureDim, 1e-3 * (p + 1));
    model.classifier.ovr[static_cast<std::size_t>(p)].b = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      SvrModel& m = model.regressors[static_cast<std::size_t>(p)][static_cast<std::size_t>(axis)];
      m.kernel = Kernel::Linear;
      m.linear.w = Eigen::VectorXd::Constant(kFeatureDim, 1e-4 * (axis + 1));
      m.linear.b = 0.1;
    }
  }
  SampleMatrix feat(static_cast<Eigen::Index>(f_serial.size()), kFeatureDim);
  for (std::size_t i = 0; i < f_serial.size(); ++i)
    feat.row(static_cast<Eigen::Index>(i)) = f_serial[i].transpose();
  std::vector<CascadeModel::Prediction> p_serial, p_parallel;
  const double t_ps = time_best_of(3, [&] { p_serial = predict_batch_serial(model, feat); });
  const double t_pp = time_best_of(3, [&] { p_parallel = predict_batch(model, feat); });
  bool p_eq = p_serial.size() == p_parallel.size();
  for (std::size_t i = 0; p_eq && i < p_serial.size(); ++i)
    p_eq = p_serial[i].velocity == p_parallel[i].velocity &&
           p_serial[i].placement == p_parallel[i].placement;
  report("predict", t_ps, t_pp, p_eq);
  return 0;
}
