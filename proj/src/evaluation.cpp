#include "ridi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ridi/errors.hpp"
#include "ridi/ingest.hpp"

namespace ridi {

namespace {

void check_same_length(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size())
    throw SchemaError("trajectory lengths differ (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
}

Eigen::Vector2d horizontal(const Eigen::Vector3d& p) { return {p.x(), p.z()}; }

// Constraint velocities, linearly interpolated over frames and clamped at the
// ends, integrated from the origin with the same explicit step the corrected
// pipeline uses.
Trajectory integrate_velocity_track(const Sequence& seq, const std::vector<int>& frames,
                                    const std::vector<Eigen::Vector3d>& vels) {
  const int n = seq.size();
  Trajectory traj;
  if (n == 0) return traj;
  const double dt = seq.dt();
  traj.t.resize(static_cast<std::size_t>(n));
  traj.position.resize(static_cast<std::size_t>(n));
  traj.velocity.resize(static_cast<std::size_t>(n));

  auto velocity_at = [&](int f) -> Eigen::Vector3d {
    if (frames.empty()) return Eigen::Vector3d::Zero();
    if (f <= frames.front()) return vels.front();
    if (f >= frames.back()) return vels.back();
    const auto it = std::upper_bound(frames.begin(), frames.end(), f);
    const std::size_t hi = static_cast<std::size_t>(it - frames.begin());
    const std::size_t lo = hi - 1;
    const double u = static_cast<double>(f - frames[lo]) /
                     static_cast<double>(frames[hi] - frames[lo]);
    return (1.0 - u) * vels[lo] + u * vels[hi];
  };

  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int f = 0; f < n; ++f) {
    const Eigen::Vector3d v = velocity_at(f);
    traj.t[static_cast<std::size_t>(f)] = seq.frames[static_cast<std::size_t>(f)].t;
    traj.position[static_cast<std::size_t>(f)] = p;
    traj.velocity[static_cast<std::size_t>(f)] = v;
    p += v * dt;
  }
  return traj;
}

void format_double(std::string& out, double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

}  // namespace

Eigen::Vector2d RigidTransform2D::apply(const Eigen::Vector2d& p) const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() - s * p.y() + translation.x(),
          s * p.x() + c * p.y() + translation.y()};
}

Eigen::Vector3d RigidTransform2D::apply(const Eigen::Vector3d& p) const {
  const Eigen::Vector2d h = apply(horizontal(p));
  return {h.x(), p.y(), h.y()};
}

RigidTransform2D align(const Trajectory& estimate, const Trajectory& reference,
                       int window) {
  check_same_length(estimate, reference);
  const int n = std::min<int>(window, estimate.size());
  if (n < 1) throw UsageError("alignment needs at least one frame");

  Eigen::Vector2d cu = Eigen::Vector2d::Zero();
  Eigen::Vector2d cv = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    cu += horizontal(estimate.position[static_cast<std::size_t>(i)]);
    cv += horizontal(reference.position[static_cast<std::size_t>(i)]);
  }
  cu /= n;
  cv /= n;

  // Maximize sum v'.R(theta) u' = cos(theta) dot + sin(theta) cross.
  double dot = 0.0;
  double cross = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d u = horizontal(estimate.position[static_cast<std::size_t>(i)]) - cu;
    const Eigen::Vector2d v = horizontal(reference.position[static_cast<std::size_t>(i)]) - cv;
    dot += u.dot(v);
    cross += u.x() * v.y() - u.y() * v.x();
  }

  RigidTransform2D xf;
  xf.angle = std::atan2(cross, dot);  // atan2(0,0)=0: coincident points degrade to identity
  const double c = std::cos(xf.angle);
  const double s = std::sin(xf.angle);
  xf.translation = cv - Eigen::Vector2d{c * cu.x() - s * cu.y(), s * cu.x() + c * cu.y()};
  return xf;
}

double horizontal_path_length(const Trajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.position.size(); ++i)
    len += (horizontal(t.position[i]) - horizontal(t.position[i - 1])).norm();
  return len;
}

double mean_position_error(const Trajectory& estimate, const Trajectory& reference,
                           const RigidTransform2D& xf) {
  check_same_length(estimate, reference);
  const std::size_t n = estimate.position.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += (xf.apply(horizontal(estimate.position[i])) - horizontal(reference.position[i]))
               .norm();
  return sum / static_cast<double>(n);
}

EvalReport evaluate(const Trajectory& estimate, const Trajectory& reference,
                    const std::string& tag, int align_window) {
  EvalReport report;
  report.tag = tag;
  report.mpe_m = mean_position_error(estimate, reference, align(estimate, reference, align_window));
  const double len = horizontal_path_length(reference);
  report.mpe_ratio =
      len > 1e-9 ? report.mpe_m / len : std::numeric_limits<double>::quiet_NaN();
  return report;
}

Trajectory baseline_raw(const Sequence& seq, const IntegrationOptions& opt) {
  return double_integrate(seq, {}, opt);
}

Trajectory baseline_ridi_mag(const Sequence& seq, const CascadeModel& model,
                             const SmoothingConfig& smoothing, int stride) {
  if (seq.frames.empty()) return {};
  const RegressedConstraints rc = regress_constraints(seq, model, smoothing, stride);
  std::vector<Eigen::Vector3d> vels(rc.frames.size());
  for (std::size_t k = 0; k < rc.frames.size(); ++k) {
    const double speed = rc.velocity[k].norm();
    // Heading from the device yaw: the stabilized frame's forward axis in
    // world coordinates, projected to the horizontal plane.
    const Eigen::Vector3d fwd = rc.r_sw[k].transpose().col(0);
    Eigen::Vector2d dir = horizontal(fwd);
    const double dn = dir.norm();
    dir = dn > 1e-12 ? Eigen::Vector2d(dir / dn) : Eigen::Vector2d::Zero();
    vels[k] = {speed * dir.x(), 0.0, speed * dir.y()};
  }
  return integrate_velocity_track(seq, rc.frames, vels);
}

Trajectory baseline_ridi_ori(const Sequence& seq, const CascadeModel& model,
                             const SmoothingConfig& smoothing, int stride) {
  if (seq.frames.empty()) return {};
  if (!seq.has_ground_truth())
    throw UsageError("the RIDI-ORI baseline needs ground-truth poses");
  const RegressedConstraints rc = regress_constraints(seq, model, smoothing, stride);
  const Trajectory gt = gt_trajectory(seq);

  double mean_speed = 0.0;
  for (int f : rc.frames)
    mean_speed += horizontal(gt.velocity[static_cast<std::size_t>(f)]).norm();
  if (!rc.frames.empty()) mean_speed /= static_cast<double>(rc.frames.size());

  std::vector<Eigen::Vector3d> vels(rc.frames.size());
  for (std::size_t k = 0; k < rc.frames.size(); ++k) {
    const Eigen::Vector3d v_world =
        rc.r_sw[k].transpose() * Eigen::Vector3d(rc.velocity[k].x(), 0.0, rc.velocity[k].y());
    Eigen::Vector2d dir = horizontal(v_world);
    const double dn = dir.norm();
    dir = dn > 1e-12 ? Eigen::Vector2d(dir / dn) : Eigen::Vector2d::Zero();
    vels[k] = {mean_speed * dir.x(), 0.0, mean_speed * dir.y()};
  }
  return integrate_velocity_track(seq, rc.frames, vels);
}

std::vector<std::pair<double, double>> lambda_sweep(const Sequence& seq,
                                                    const CascadeModel& model,
                                                    const std::vector<double>& lambdas,
                                                    const OfflineConfig& base) {
  const Trajectory gt = gt_trajectory(seq);
  std::vector<std::pair<double, double>> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    OfflineConfig cfg = base;
    cfg.lambda = lambda;
    const Trajectory traj = run_offline(seq, model, cfg);
    out.emplace_back(lambda, evaluate(traj, gt, "lambda").mpe_ratio);
  }
  return out;
}

void write_overlay_svg(const std::string& path,
                       const std::vector<std::pair<std::string, const Trajectory*>>& tracks,
                       const std::string& title) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  constexpr int kSize = 800;
  constexpr double kMargin = 60.0;

  double min_x = 0.0, max_x = 0.0, min_z = 0.0, max_z = 0.0;
  bool any = false;
  for (const auto& [name, traj] : tracks) {
    (void)name;
    if (traj == nullptr) continue;
    for (const Eigen::Vector3d& p : traj->position) {
      if (!any) {
        min_x = max_x = p.x();
        min_z = max_z = p.z();
        any = true;
      } else {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_z = std::min(min_z, p.z());
        max_z = std::max(max_z, p.z());
      }
    }
  }
  const double span = std::max({max_x - min_x, max_z - min_z, 1e-6});
  const double scale = (kSize - 2.0 * kMargin) / span;
  const double cx = 0.5 * (min_x + max_x);
  const double cz = 0.5 * (min_z + max_z);
  auto px = [&](double x) { return kSize / 2.0 + (x - cx) * scale; };
  auto pz = [&](double z) { return kSize / 2.0 + (z - cz) * scale; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
         "viewBox=\"0 0 800 800\">\n";
  svg += "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"400\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" "
           "text-anchor=\"middle\">" + title + "</text>\n";
  }

  int color = 0;
  double legend_y = 52.0;
  for (const auto& [name, traj] : tracks) {
    if (traj == nullptr || traj->position.empty()) continue;
    const char* stroke = kColors[color % 6];
    svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"";
    svg += stroke;
    svg += "\" points=\"";
    for (std::size_t i = 0; i < traj->position.size(); ++i) {
      if (i) svg += ' ';
      format_double(svg, px(traj->position[i].x()));
      svg += ',';
      format_double(svg, pz(traj->position[i].z()));
    }
    svg += "\"/>\n";
    // start marker
    svg += "<circle r=\"4\" fill=\"";
    svg += stroke;
    svg += "\" cx=\"";
    format_double(svg, px(traj->position.front().x()));
    svg += "\" cy=\"";
    format_double(svg, pz(traj->position.front().z()));
    svg += "\"/>\n";
    // legend entry
    svg += "<rect x=\"20\" width=\"14\" height=\"14\" y=\"";
    format_double(svg, legend_y - 11.0);
    svg += "\" fill=\"";
    svg += stroke;
    svg += "\"/>\n<text x=\"40\" font-family=\"sans-serif\" font-size=\"14\" y=\"";
    format_double(svg, legend_y);
    svg += "\">" + name + "</text>\n";
    legend_y += 22.0;
    ++color;
  }

  // Scale bar: a round-number length close to a fifth of the span.
  double bar_m = std::pow(10.0, std::floor(std::log10(std::max(span / 5.0, 1e-6))));
  if (span / 5.0 / bar_m >= 5.0) bar_m *= 5.0;
  else if (span / 5.0 / bar_m >= 2.0) bar_m *= 2.0;
  svg += "<line stroke=\"black\" stroke-width=\"2\" x1=\"20\" x2=\"";
  format_double(svg, 20.0 + bar_m * scale);
  svg += "\" y1=\"770\" y2=\"770\"/>\n<text x=\"20\" y=\"760\" "
         "font-family=\"sans-serif\" font-size=\"14\">";
  format_double(svg, bar_m);
  svg += " m</text>\n</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << svg;
}

void write_eval_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "tag,mpe_m,mpe_ratio\n";
  for (const EvalReport& r : reports)
    out << r.tag << ',' << format_g9(r.mpe_m) << ',' << format_g9(r.mpe_ratio) << '\n';
}

}  // namespace ridi
