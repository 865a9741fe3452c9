#include "ridi/integrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ridi/errors.hpp"
#include "ridi/features.hpp"
#include "ridi/ingest.hpp"

namespace ridi {

Trajectory double_integrate(const Sequence& seq, const CorrectionKnots& knots,
                            const IntegrationOptions& opt) {
  const int n = seq.size();
  Trajectory traj;
  if (n == 0) return traj;
  traj.t.resize(static_cast<std::size_t>(n));
  traj.position.resize(static_cast<std::size_t>(n));
  traj.velocity.resize(static_cast<std::size_t>(n));

  const double dt = seq.dt();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  traj.t[0] = seq.frames[0].t;
  traj.position[0] = p;
  traj.velocity[0] = v;

  for (int f = 1; f < n; ++f) {
    const SensorFrame& prev = seq.frames[static_cast<std::size_t>(f - 1)];
    const Eigen::Vector3d a_w =
        prev.orientation.q * (prev.linacc.v + interpolate_bias(knots, f - 1));
    if (opt.semi_implicit) {
      v += a_w * dt;
      if (opt.zero_vertical_velocity) v.y() = 0.0;
      p += v * dt;
    } else {
      p += v * dt;
      v += a_w * dt;
      if (opt.zero_vertical_velocity) v.y() = 0.0;
    }
    const std::size_t uf = static_cast<std::size_t>(f);
    traj.t[uf] = seq.frames[uf].t;
    traj.position[uf] = p;
    traj.velocity[uf] = v;
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "t,x,y,z,vx,vy,vz\n";
  for (int i = 0; i < traj.size(); ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    out << format_g9(traj.t[ui]);
    for (int a = 0; a < 3; ++a) out << "," << format_g9(traj.position[ui][a]);
    for (int a = 0; a < 3; ++a) out << "," << format_g9(traj.velocity[ui][a]);
    out << "\n";
  }
  if (!out) throw ParseError("short write to " + path);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  Trajectory traj;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "t,x,y,z,vx,vy,vz")
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": expected header t,x,y,z,vx,vy,vz");
      header_seen = true;
      continue;
    }
    std::array<double, 7> vals{};
    std::size_t pos = 0;
    for (int k = 0; k < 7; ++k) {
      std::size_t next = line.find(',', pos);
      if (k < 6 && next == std::string::npos)
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected 7 fields");
      std::string tok = line.substr(pos, next == std::string::npos ? next : next - pos);
      char* end = nullptr;
      vals[static_cast<std::size_t>(k)] = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
      pos = next == std::string::npos ? line.size() : next + 1;
    }
    traj.t.push_back(vals[0]);
    traj.position.emplace_back(vals[1], vals[2], vals[3]);
    traj.velocity.emplace_back(vals[4], vals[5], vals[6]);
  }
  if (!header_seen) throw SchemaError(path + ": missing trajectory header");
  return traj;
}

Trajectory gt_trajectory(const Sequence& seq) {
  if (!seq.has_ground_truth()) throw SchemaError("sequence has no ground-truth poses");
  const int n = seq.size();
  Trajectory traj;
  traj.t.resize(static_cast<std::size_t>(n));
  traj.position.resize(static_cast<std::size_t>(n));
  traj.velocity.resize(static_cast<std::size_t>(n));
  const double dt = seq.dt();
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    if (!seq.frames[ui].gt_position)
      throw SchemaError("missing ground-truth pose at frame " + std::to_string(i));
    traj.t[ui] = seq.frames[ui].t;
    traj.position[ui] = seq.frames[ui].gt_position->v;
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    if (i == 0)
      traj.velocity[ui] = (traj.position[1] - traj.position[0]) / dt;
    else if (i == n - 1)
      traj.velocity[ui] = (traj.position[ui] - traj.position[ui - 1]) / dt;
    else
      traj.velocity[ui] = (traj.position[ui + 1] - traj.position[ui - 1]) / (2.0 * dt);
  }
  return traj;
}

std::vector<int> offline_constraint_frames(int n_frames, int stride) {
  if (stride < 1) throw UsageError("stride must be >= 1");
  std::vector<int> out;
  int first = ((kWindowFrames + stride - 1) / stride) * stride;
  for (int f = first; f < n_frames; f += stride) out.push_back(f);
  return out;
}

RegressedConstraints regress_constraints(const Sequence& seq, const CascadeModel& model,
                                         const SmoothingConfig& smoothing, int stride) {
  RegressedConstraints out;
  out.frames = offline_constraint_frames(seq.size(), stride);
  if (out.frames.empty()) return out;
  StabilizedSignals sig = to_stabilized(seq, smoothing);
  std::vector<FeatureVector> feats = features_at(sig, out.frames);
  out.velocity.resize(out.frames.size());
  out.r_sw.resize(out.frames.size());
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    out.velocity[i] = model.predict(feats[i]).velocity;
    out.r_sw[i] =
        stabilized_from_world(seq.frames[static_cast<std::size_t>(out.frames[i])]).matrix();
  }
  return out;
}

Trajectory run_offline(const Sequence& seq, const CascadeModel& model,
                       const OfflineConfig& cfg) {
  if (seq.size() < kWindowFrames)
    throw UsageError("sequence too short: " + std::to_string(seq.size()) + " frames, need >= " +
                     std::to_string(kWindowFrames));

  RegressedConstraints rc = regress_constraints(seq, model, cfg.smoothing, cfg.constraint_stride);
  // lambda >= 1e12: the regularizer pins every knot to zero well below any
  // useful resolution, so skip the solve and integrate raw (RAW baseline,
  // bit for bit).
  if (rc.frames.empty() || cfg.lambda >= 1e12)
    return double_integrate(seq, CorrectionKnots{}, cfg.integration);

  CorrectionProblem p;
  p.r_wd.resize(static_cast<std::size_t>(seq.size()));
  p.linacc.resize(static_cast<std::size_t>(seq.size()));
  for (int f = 0; f < seq.size(); ++f) {
    const std::size_t uf = static_cast<std::size_t>(f);
    p.r_wd[uf] = seq.frames[uf].orientation.matrix();
    p.linacc[uf] = seq.frames[uf].linacc.v;
  }
  p.dt = seq.dt();
  p.knot_frames = default_knot_frames(seq.size(), cfg.knot_spacing);
  p.constraint_frames = rc.frames;
  p.r_sw = rc.r_sw;
  p.target_velocity = rc.velocity;
  p.lambda = cfg.lambda;
  p.horizontal_only = cfg.horizontal_only;

  SolveResult res = solve(p);
  return double_integrate(seq, res.knots, cfg.integration);
}

OnlineEngine::OnlineEngine(const CascadeModel& model, const OnlineConfig& cfg,
                           double sample_rate)
    : model_(&model), cfg_(cfg), dt_(1.0 / sample_rate) {
  if (cfg_.correction_period < 1 || cfg_.regression_stride < 1 || cfg_.blend_frames < 1)
    throw UsageError("online periods must be positive");
  if (cfg_.correction_window < cfg_.correction_period)
    throw UsageError("correction window must cover at least one period");
  if (cfg_.correction_window % 50 != 0)
    throw UsageError("correction window must be a multiple of the 50-frame knot spacing");
  kernel_ = kernel_weights(cfg_.smoothing.sigma_imu);
  raw_dev_.assign(6, {});
  stab_.assign(6, {});
}

Eigen::Vector3d OnlineEngine::effective_bias(int f) const {
  const Eigen::Vector3d cur = interpolate_bias(knots_, f);
  if (blend_from_ < 0 || f < blend_from_ || f >= blend_from_ + cfg_.blend_frames) return cur;
  const double u = static_cast<double>(f - blend_from_) / static_cast<double>(cfg_.blend_frames);
  return (1.0 - u) * interpolate_bias(prev_knots_, f) + u * cur;
}

void OnlineEngine::push(const SensorFrame& frame) {
  const int f = static_cast<int>(frames_.size());
  if (f > 0 && frame.t <= frames_.back().t) {
    std::ostringstream os;
    os << "out-of-order frame: t=" << frame.t << " after t=" << frames_.back().t;
    throw SchemaError(os.str());
  }
  frames_.push_back(frame);

  // Causal smoothing + stabilization for the new frame only; arithmetic
  // matches to_stabilized(causal=true) sample for sample.
  for (int a = 0; a < 3; ++a) {
    raw_dev_[static_cast<std::size_t>(a)].push_back(frame.gyro.v[a]);
    raw_dev_[static_cast<std::size_t>(3 + a)].push_back(frame.linacc.v[a]);
  }
  const RotSD stab = stabilizing_rotation(frame.gravity);
  Eigen::Vector3d gyro_s, acc_s;
  {
    Eigen::Vector3d gyro(smooth_causal_at(raw_dev_[0], kernel_, f),
                         smooth_causal_at(raw_dev_[1], kernel_, f),
                         smooth_causal_at(raw_dev_[2], kernel_, f));
    Eigen::Vector3d acc(smooth_causal_at(raw_dev_[3], kernel_, f),
                        smooth_causal_at(raw_dev_[4], kernel_, f),
                        smooth_causal_at(raw_dev_[5], kernel_, f));
    gyro_s = stab.q * gyro;
    acc_s = stab.q * acc;
  }
  for (int a = 0; a < 3; ++a) {
    stab_[static_cast<std::size_t>(a)].push_back(gyro_s[a]);
    stab_[static_cast<std::size_t>(3 + a)].push_back(acc_s[a]);
  }

  if (f == 0) {
    traj_.t.push_back(frame.t);
    traj_.position.push_back(Eigen::Vector3d::Zero());
    traj_.velocity.push_back(Eigen::Vector3d::Zero());
    v_pure_.push_back(Eigen::Vector3d::Zero());
  } else {
    const SensorFrame& prev = frames_[static_cast<std::size_t>(f - 1)];
    const Eigen::Vector3d a_eff = prev.orientation.q * (prev.linacc.v + effective_bias(f - 1));
    Eigen::Vector3d p = traj_.position.back();
    if (cfg_.integration.semi_implicit) {
      v_state_ += a_eff * dt_;
      if (cfg_.integration.zero_vertical_velocity) v_state_.y() = 0.0;
      p += v_state_ * dt_;
    } else {
      p += v_state_ * dt_;
      v_state_ += a_eff * dt_;
      if (cfg_.integration.zero_vertical_velocity) v_state_.y() = 0.0;
    }
    traj_.t.push_back(frame.t);
    traj_.position.push_back(p);
    traj_.velocity.push_back(v_state_);

    const Eigen::Vector3d a_pure =
        prev.orientation.q * (prev.linacc.v + interpolate_bias(knots_, f - 1));
    v_pure_.push_back(v_pure_.back() + a_pure * dt_);
  }

  if (f >= kWindowFrames && f % cfg_.regression_stride == 0) {
    FeatureVector x(kFeatureDim);
    const int start = f - (kWindowFrames - 1);
    for (int i = 0; i < kWindowFrames; ++i)
      for (int c = 0; c < kChannelsPerFrame; ++c)
        x[i * kChannelsPerFrame + c] =
            stab_[static_cast<std::size_t>(c)][static_cast<std::size_t>(start + i)];
    c_frames_.push_back(f);
    c_velocity_.push_back(model_->predict(x).velocity);
    c_rsw_.push_back(stabilized_from_world(frame).matrix());
    ++regression_calls_;
  }

  if (f > 0 && f % cfg_.correction_period == 0 && !c_frames_.empty()) solve_window(f);
}

void OnlineEngine::finish() {
  const int f = static_cast<int>(frames_.size()) - 1;
  if (f < 0 || f == last_solved_ || c_frames_.empty()) return;
  solve_window(f);
}

void OnlineEngine::solve_window(int f) {
  // Window start, snapped down to the knot grid.
  const int w0 = (std::max(0, f - cfg_.correction_window) / 50) * 50;

  CorrectionProblem p;
  p.dt = dt_;
  p.lambda = cfg_.lambda;
  p.horizontal_only = cfg_.horizontal_only;
  p.v0_world = v_pure_[static_cast<std::size_t>(w0)];
  const int len = f - w0 + 1;
  p.r_wd.resize(static_cast<std::size_t>(len));
  p.linacc.resize(static_cast<std::size_t>(len));
  for (int g = 0; g < len; ++g) {
    const SensorFrame& fr = frames_[static_cast<std::size_t>(w0 + g)];
    p.r_wd[static_cast<std::size_t>(g)] = fr.orientation.matrix();
    p.linacc[static_cast<std::size_t>(g)] = fr.linacc.v;
  }
  std::vector<int> window_knots;
  for (int k = w0; k <= f; k += 50) {
    window_knots.push_back(k);
    p.knot_frames.push_back(k - w0);
  }
  for (std::size_t i = 0; i < c_frames_.size(); ++i) {
    if (c_frames_[i] <= w0 || c_frames_[i] > f) continue;
    p.constraint_frames.push_back(c_frames_[i] - w0);
    p.target_velocity.push_back(c_velocity_[i]);
    p.r_sw.push_back(c_rsw_[i]);
  }
  if (p.constraint_frames.empty()) return;

  SolveResult res = solve(p);

  // Publish: snapshot for blending, then extend the global grid through f
  // and overwrite the window span with the new solution.
  prev_knots_ = knots_;
  blend_from_ = f;
  int next_frame = knots_.frames.empty() ? 0 : knots_.frames.back() + 50;
  for (; next_frame <= f; next_frame += 50) {
    knots_.frames.push_back(next_frame);
    knots_.bias.push_back(knots_.bias.empty() ? Eigen::Vector3d::Zero() : knots_.bias.back());
  }
  for (std::size_t i = 0; i < window_knots.size(); ++i) {
    const int idx = window_knots[i] / 50;
    knots_.bias[static_cast<std::size_t>(idx)] = res.knots.bias[i];
  }

  // Re-base: refresh the pure integral where interpolated bias changed
  // (knots < w0 - 50 are untouched), then snap the velocity state to it so
  // the next window's model matches the integrator's actual state.
  const int s0 = std::max(0, w0 - 50);
  for (int g = s0 + 1; g <= f; ++g) {
    const SensorFrame& prev = frames_[static_cast<std::size_t>(g - 1)];
    const Eigen::Vector3d a_pure =
        prev.orientation.q * (prev.linacc.v + interpolate_bias(knots_, g - 1));
    v_pure_[static_cast<std::size_t>(g)] = v_pure_[static_cast<std::size_t>(g - 1)] + a_pure * dt_;
  }
  v_state_ = v_pure_[static_cast<std::size_t>(f)];
  if (cfg_.integration.zero_vertical_velocity) v_state_.y() = 0.0;
  traj_.velocity.back() = v_state_;

  last_solved_ = f;
  ++solve_count_;
}

Trajectory run_online(const Sequence& seq, const CascadeModel& model, const OnlineConfig& cfg) {
  OnlineEngine engine(model, cfg, seq.sample_rate);
  for (const SensorFrame& f : seq.frames) engine.push(f);
  engine.finish();
  return engine.trajectory();
}

ThroughputReport throughput_report(const Sequence& seq, const CascadeModel& model,
                                   const OnlineConfig& cfg) {
  OnlineEngine engine(model, cfg, seq.sample_rate);
  const auto start = std::chrono::steady_clock::now();
  for (const SensorFrame& f : seq.frames) engine.push(f);
  engine.finish();
  const auto stop = std::chrono::steady_clock::now();

  ThroughputReport r;
  r.frames = seq.size();
  r.wall_seconds = std::chrono::duration<double>(stop - start).count();
  r.fps = r.wall_seconds > 0.0 ? static_cast<double>(r.frames) / r.wall_seconds : 0.0;
  r.regression_calls = engine.regression_calls();
  r.solve_count = engine.solve_count();
  return r;
}

}  // namespace ridi
