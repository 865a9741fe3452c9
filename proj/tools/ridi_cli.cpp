// Command-line front end: synthetic data generation, training, trajectory
// reconstruction, evaluation, and hyperparameter search. Every subcommand
// accepts a flat key=value config file; explicit flags override it, and the
// resolved configuration is written next to the outputs.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ridi/errors.hpp"
#include "ridi/evaluation.hpp"
#include "ridi/features.hpp"
#include "ridi/ingest.hpp"
#include "ridi/integrator.hpp"
#include "ridi/model_io.hpp"
#include "ridi/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ridi;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw UsageError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

// Config values fill in options the command line left at their defaults;
// leftover keys are rejected.
class ConfigBinder {
 public:
  ConfigBinder() = default;
  explicit ConfigBinder(const std::string& path) {
    if (!path.empty()) kv_ = read_config_file(path);
  }

  void merge(const char* key, const CLI::Option* opt, std::string& v) {
    const std::string* raw = lookup(key, opt);
    if (raw != nullptr) v = *raw;
  }
  void merge(const char* key, const CLI::Option* opt, double& v) {
    const std::string* raw = lookup(key, opt);
    if (raw == nullptr) return;
    char* end = nullptr;
    const double parsed = std::strtod(raw->c_str(), &end);
    if (raw->empty() || end != raw->c_str() + raw->size())
      throw UsageError(std::string("config key '") + key + "': bad number '" + *raw + "'");
    v = parsed;
  }
  void merge(const char* key, const CLI::Option* opt, int& v) {
    double d = static_cast<double>(v);
    merge(key, opt, d);
    v = static_cast<int>(d);
  }
  void merge(const char* key, const CLI::Option* opt, std::uint64_t& v) {
    const std::string* raw = lookup(key, opt);
    if (raw == nullptr) return;
    try {
      v = std::stoull(*raw);
    } catch (const std::exception&) {
      throw UsageError(std::string("config key '") + key + "': bad integer '" + *raw + "'");
    }
  }
  void merge(const char* key, const CLI::Option* opt, bool& v) {
    const std::string* raw = lookup(key, opt);
    if (raw == nullptr) return;
    if (*raw == "true" || *raw == "1") v = true;
    else if (*raw == "false" || *raw == "0") v = false;
    else
      throw UsageError(std::string("config key '") + key + "': bad boolean '" + *raw + "'");
  }

  void finish() const {
    for (const auto& [k, v] : kv_) {
      (void)v;
      if (!used_.count(k)) throw UsageError("unknown config key '" + k + "'");
    }
  }

 private:
  const std::string* lookup(const char* key, const CLI::Option* opt) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    used_.insert(key);
    // an explicit command-line flag wins over the config file
    if (opt != nullptr && opt->count() > 0) return nullptr;
    return &it->second;
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

std::string b2s(bool v) { return v ? "true" : "false"; }

void write_resolved(const std::string& path,
                    std::vector<std::pair<std::string, std::string>> entries) {
  std::sort(entries.begin(), entries.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
}

// ---------------------------------------------------------------- synth ----

MotionScript script_from_json(const json& arr) {
  MotionScript script;
  if (!arr.is_array()) throw UsageError("manifest: 'script' must be an array");
  for (const json& seg : arr) {
    const std::string type = seg.at("type").get<std::string>();
    if (type == "straight")
      script.segments.push_back(MotionScript::straight(
          seg.at("speed").get<double>(), seg.at("duration").get<double>(),
          seg.value("direction", 1)));
    else if (type == "turn")
      script.segments.push_back(MotionScript::turn(seg.at("rate").get<double>(),
                                                   seg.at("duration").get<double>()));
    else if (type == "pause")
      script.segments.push_back(MotionScript::pause(seg.at("duration").get<double>()));
    else if (type == "ramp")
      script.segments.push_back(MotionScript::ramp(
          seg.at("v0").get<double>(), seg.at("v1").get<double>(),
          seg.at("duration").get<double>(), seg.value("direction", 1)));
    else
      throw UsageError("manifest: unknown segment type '" + type + "'");
  }
  return script;
}

NoiseSpec noise_from_json(const json& j, NoiseSpec base) {
  base.gyro_noise_std = j.value("gyro_noise_std", base.gyro_noise_std);
  base.acc_noise_std = j.value("acc_noise_std", base.acc_noise_std);
  base.gravity_tilt_std = j.value("gravity_tilt_std", base.gravity_tilt_std);
  base.bias_const_mag = j.value("bias_const_mag", base.bias_const_mag);
  if (j.contains("bias_sin_amp"))
    base.bias_sin_amp = j.at("bias_sin_amp").get<std::vector<double>>();
  if (j.contains("bias_sin_period"))
    base.bias_sin_period = j.at("bias_sin_period").get<std::vector<double>>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  return base;
}

struct SynthArgs {
  std::string config, manifest, out;
  std::uint64_t seed = 1;
  double rate = 200.0;
  const CLI::Option *o_manifest = nullptr, *o_out = nullptr, *o_seed = nullptr,
                    *o_rate = nullptr;
};

int cmd_synth(const SynthArgs& a) {
  ConfigBinder cfg(a.config);
  SynthArgs r = a;
  cfg.merge("manifest", a.o_manifest, r.manifest);
  cfg.merge("out", a.o_out, r.out);
  cfg.merge("seed", a.o_seed, r.seed);
  cfg.merge("rate", a.o_rate, r.rate);
  cfg.finish();
  if (r.manifest.empty()) throw UsageError("synth needs --manifest");
  if (r.out.empty()) throw UsageError("synth needs --out");

  json doc;
  {
    std::ifstream in(r.manifest);
    if (!in) throw UsageError("cannot open manifest " + r.manifest);
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw UsageError("manifest " + r.manifest + ": " + e.what());
    }
  }

  fs::create_directories(r.out);
  int written = 0;
  try {
    const json& seqs = doc.at("sequences");
    if (!seqs.is_array() || seqs.empty())
      throw UsageError("manifest lists no sequences");
    for (const json& item : seqs) {
      const std::string name = item.at("name").get<std::string>();
      const Placement placement =
          placement_from_string(item.at("placement").get<std::string>());
      const MotionScript script = script_from_json(item.at("script"));

      NoiseSpec noise;
      noise.seed = r.seed + static_cast<std::uint64_t>(written);
      if (item.contains("noise")) noise = noise_from_json(item.at("noise"), noise);

      SynthOptions opt;
      opt.rate = r.rate;
      opt.oscillation_scale = item.value("oscillation_scale", 1.0);
      opt.attitude_scale = item.value("attitude_scale", 1.0);

      SynthResult result = synthesize(script, placement, noise, opt);
      if (item.contains("subject"))
        result.seq.subject = item.at("subject").get<std::string>();
      const std::string base = (fs::path(r.out) / name).string();
      write_sequence_csv(base + ".csv", result.seq);
      std::vector<double> t(result.seq.frames.size());
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = result.seq.frames[i].t;
      write_bias_csv(base + ".bias.csv", t, result.injected_bias);
      std::cout << "wrote " << base << ".csv (" << result.seq.size() << " frames)\n";
      ++written;
    }
  } catch (const json::exception& e) {
    throw UsageError("manifest " + r.manifest + ": " + e.what());
  }

  write_resolved((fs::path(r.out) / "synth.resolved.cfg").string(),
                 {{"manifest", r.manifest},
                  {"out", r.out},
                  {"seed", std::to_string(r.seed)},
                  {"rate", format_g9(r.rate)}});
  std::cout << written << " sequences in " << r.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ----

std::vector<std::string> sequence_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv" &&
        name.find(".bias.csv") == std::string::npos)
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no sequence files in " + dir);
  return files;
}

Sequence load_named(const std::string& path, double rate) {
  try {
    return read_sequence_csv(path, rate);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  } catch (const GapError& e) {
    throw GapError(path + ": " + e.what());
  }
}

struct TrainArgs {
  std::string config, data, out, kernel = "linear";
  int stride = 10, folds = 3;
  bool grid = false;
  double rate = 200.0, c = 10.0, epsilon = 0.01, classifier_c = 10.0;
  std::uint64_t seed = 1;
  const CLI::Option *o_data = nullptr, *o_out = nullptr, *o_stride = nullptr,
                    *o_grid = nullptr, *o_kernel = nullptr, *o_folds = nullptr,
                    *o_rate = nullptr, *o_c = nullptr, *o_eps = nullptr,
                    *o_cc = nullptr, *o_seed = nullptr;
};

int cmd_train(const TrainArgs& a) {
  ConfigBinder cfg(a.config);
  TrainArgs r = a;
  cfg.merge("data", a.o_data, r.data);
  cfg.merge("out", a.o_out, r.out);
  cfg.merge("stride", a.o_stride, r.stride);
  cfg.merge("grid_search", a.o_grid, r.grid);
  cfg.merge("kernel", a.o_kernel, r.kernel);
  cfg.merge("folds", a.o_folds, r.folds);
  cfg.merge("rate", a.o_rate, r.rate);
  cfg.merge("c", a.o_c, r.c);
  cfg.merge("epsilon", a.o_eps, r.epsilon);
  cfg.merge("classifier_c", a.o_cc, r.classifier_c);
  cfg.merge("seed", a.o_seed, r.seed);
  cfg.finish();
  if (r.data.empty()) throw UsageError("train needs --data");
  if (r.out.empty()) throw UsageError("train needs --out");
  if (r.kernel != "linear" && r.kernel != "rbf")
    throw UsageError("kernel must be 'linear' or 'rbf'");

  std::vector<TrainingSample> samples;
  for (const std::string& path : sequence_files(r.data)) {
    const Sequence seq = load_named(path, r.rate);
    if (!seq.placement)
      throw SchemaError(path + ": missing placement metadata");
    std::vector<TrainingSample> s = make_samples(seq, r.stride);
    samples.insert(samples.end(), s.begin(), s.end());
  }

  TrainOptions opt;
  opt.classifier_c = r.classifier_c;
  opt.hp = {r.c, r.epsilon};
  opt.grid_search = r.grid;
  opt.cv_folds = r.folds;
  opt.kernel = r.kernel == "rbf" ? Kernel::Rbf : Kernel::Linear;
  opt.seed = r.seed;

  auto [model, report] = train_cascade(samples, opt);
  save_model(model, r.out);
  const std::string text = report.to_text();
  std::cout << text;
  {
    std::ofstream rep(r.out + ".report.txt", std::ios::binary);
    if (!rep) throw ParseError("cannot open " + r.out + ".report.txt for writing");
    rep << text;
  }
  write_resolved(r.out + ".resolved.cfg",
                 {{"data", r.data},
                  {"out", r.out},
                  {"stride", std::to_string(r.stride)},
                  {"grid_search", b2s(r.grid)},
                  {"kernel", r.kernel},
                  {"folds", std::to_string(r.folds)},
                  {"rate", format_g9(r.rate)},
                  {"c", format_g9(r.c)},
                  {"epsilon", format_g9(r.epsilon)},
                  {"classifier_c", format_g9(r.classifier_c)},
                  {"seed", std::to_string(r.seed)}});
  std::cout << "model written to " << r.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ run ----

struct RunArgs {
  std::string config, model, input, out;
  bool online = false, horizontal_only = false, semi_implicit = false;
  bool keep_vertical = false;
  double lambda = 0.1;
  int period = 200, window = 1000, blend = 50, stride = 50, knot_spacing = 50;
  const CLI::Option *o_model = nullptr, *o_input = nullptr, *o_out = nullptr,
                    *o_online = nullptr, *o_lambda = nullptr, *o_period = nullptr,
                    *o_window = nullptr, *o_blend = nullptr, *o_stride = nullptr,
                    *o_knots = nullptr, *o_horiz = nullptr, *o_semi = nullptr,
                    *o_keepv = nullptr;
};

Sequence load_checked_rate(const std::string& path) {
  const Sequence seq = load_named(path, 200.0);
  // features are 1 s windows at 200 Hz; other rates need retraining
  if (std::abs(seq.sample_rate - 200.0) > 0.5)
    throw SchemaError(path + ": sequence rate " + format_g9(seq.sample_rate) +
                      " Hz does not match the model's 200 Hz");
  return seq;
}

int cmd_run(const RunArgs& a) {
  ConfigBinder cfg(a.config);
  RunArgs r = a;
  cfg.merge("model", a.o_model, r.model);
  cfg.merge("input", a.o_input, r.input);
  cfg.merge("out", a.o_out, r.out);
  cfg.merge("online", a.o_online, r.online);
  cfg.merge("lambda", a.o_lambda, r.lambda);
  cfg.merge("period", a.o_period, r.period);
  cfg.merge("window", a.o_window, r.window);
  cfg.merge("blend", a.o_blend, r.blend);
  cfg.merge("stride", a.o_stride, r.stride);
  cfg.merge("knot_spacing", a.o_knots, r.knot_spacing);
  cfg.merge("horizontal_only", a.o_horiz, r.horizontal_only);
  cfg.merge("semi_implicit", a.o_semi, r.semi_implicit);
  cfg.merge("keep_vertical", a.o_keepv, r.keep_vertical);
  cfg.finish();
  if (r.model.empty()) throw UsageError("run needs --model");
  if (r.input.empty()) throw UsageError("run needs --input");
  if (r.out.empty()) throw UsageError("run needs --out");
  if (!fs::exists(r.model)) throw UsageError("model file not found: " + r.model);
  if (!fs::exists(r.input)) throw UsageError("input file not found: " + r.input);

  const CascadeModel model = load_model(r.model);
  const Sequence seq = load_checked_rate(r.input);

  IntegrationOptions integration;
  integration.zero_vertical_velocity = !r.keep_vertical;
  integration.semi_implicit = r.semi_implicit;

  Trajectory traj;
  if (r.online) {
    OnlineConfig oc;
    oc.correction_period = r.period;
    oc.correction_window = r.window;
    oc.regression_stride = r.stride;
    oc.blend_frames = r.blend;
    oc.lambda = r.lambda;
    oc.horizontal_only = r.horizontal_only;
    oc.integration = integration;
    const auto t0 = std::chrono::steady_clock::now();
    traj = run_online(seq, model, oc);
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count();
    std::printf("online: %d frames in %.3f s (%.0f frames/s)\n", seq.size(), wall,
                wall > 0 ? seq.size() / wall : 0.0);
  } else {
    OfflineConfig oc;
    oc.lambda = r.lambda;
    oc.knot_spacing = r.knot_spacing;
    oc.constraint_stride = r.stride;
    oc.horizontal_only = r.horizontal_only;
    oc.integration = integration;
    traj = run_offline(seq, model, oc);
  }
  write_trajectory_csv(traj, r.out);
  const Eigen::Vector3d& end = traj.position.back();
  std::printf("trajectory written to %s; endpoint (%.3f, %.3f, %.3f) m\n",
              r.out.c_str(), end.x(), end.y(), end.z());

  write_resolved(r.out + ".resolved.cfg",
                 {{"model", r.model},
                  {"input", r.input},
                  {"out", r.out},
                  {"online", b2s(r.online)},
                  {"lambda", format_g9(r.lambda)},
                  {"period", std::to_string(r.period)},
                  {"window", std::to_string(r.window)},
                  {"blend", std::to_string(r.blend)},
                  {"stride", std::to_string(r.stride)},
                  {"knot_spacing", std::to_string(r.knot_spacing)},
                  {"horizontal_only", b2s(r.horizontal_only)},
                  {"semi_implicit", b2s(r.semi_implicit)},
                  {"keep_vertical", b2s(r.keep_vertical)}});
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string config, input, model, traj, out, sweep;
  bool baselines = false, online = false;
  double lambda = 0.1;
  int align_window = 2000, stride = 50;
  const CLI::Option *o_input = nullptr, *o_model = nullptr, *o_traj = nullptr,
                    *o_out = nullptr, *o_sweep = nullptr, *o_baselines = nullptr,
                    *o_online = nullptr, *o_lambda = nullptr, *o_align = nullptr,
                    *o_stride = nullptr;
};

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
      throw UsageError("bad number '" + tok + "' in list");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

Trajectory aligned_copy(const Trajectory& traj, const RigidTransform2D& xf) {
  Trajectory out = traj;
  for (Eigen::Vector3d& p : out.position) p = xf.apply(p);
  return out;
}

int cmd_eval(const EvalArgs& a) {
  ConfigBinder cfg(a.config);
  EvalArgs r = a;
  cfg.merge("input", a.o_input, r.input);
  cfg.merge("model", a.o_model, r.model);
  cfg.merge("traj", a.o_traj, r.traj);
  cfg.merge("out", a.o_out, r.out);
  cfg.merge("lambda_sweep", a.o_sweep, r.sweep);
  cfg.merge("baselines", a.o_baselines, r.baselines);
  cfg.merge("online", a.o_online, r.online);
  cfg.merge("lambda", a.o_lambda, r.lambda);
  cfg.merge("align_window", a.o_align, r.align_window);
  cfg.merge("stride", a.o_stride, r.stride);
  cfg.finish();
  if (r.input.empty()) throw UsageError("eval needs --input");
  if (r.out.empty()) throw UsageError("eval needs --out");
  if (r.traj.empty() && r.model.empty())
    throw UsageError("eval needs --model (to reconstruct) or --traj (precomputed)");
  if ((r.baselines || !r.sweep.empty()) && r.model.empty())
    throw UsageError("baselines and lambda sweeps need --model");
  if (!r.model.empty() && !fs::exists(r.model))
    throw UsageError("model file not found: " + r.model);

  const Sequence seq = load_named(r.input, 200.0);
  const Trajectory gt = gt_trajectory(seq);

  CascadeModel model;
  if (!r.model.empty()) model = load_model(r.model);

  Trajectory estimate;
  std::string tag = "ridi";
  if (!r.traj.empty()) {
    estimate = read_trajectory_csv(r.traj);
    tag = "estimate";
  } else if (r.online) {
    OnlineConfig oc;
    oc.lambda = r.lambda;
    estimate = run_online(seq, model, oc);
    tag = "ridi-online";
  } else {
    OfflineConfig oc;
    oc.lambda = r.lambda;
    oc.constraint_stride = r.stride;
    estimate = run_offline(seq, model, oc);
  }

  fs::create_directories(r.out);
  std::vector<EvalReport> reports;
  std::vector<std::pair<std::string, Trajectory>> plots;
  plots.emplace_back("ground truth", gt);

  reports.push_back(evaluate(estimate, gt, tag, r.align_window));
  plots.emplace_back(tag, aligned_copy(estimate, align(estimate, gt, r.align_window)));

  if (r.baselines) {
    const Trajectory raw = baseline_raw(seq);
    reports.push_back(evaluate(raw, gt, "RAW", r.align_window));
    plots.emplace_back("RAW", aligned_copy(raw, align(raw, gt, r.align_window)));
    const Trajectory mag = baseline_ridi_mag(seq, model, {}, r.stride);
    reports.push_back(evaluate(mag, gt, "RIDI-MAG", r.align_window));
    plots.emplace_back("RIDI-MAG", aligned_copy(mag, align(mag, gt, r.align_window)));
    const Trajectory ori = baseline_ridi_ori(seq, model, {}, r.stride);
    reports.push_back(evaluate(ori, gt, "RIDI-ORI", r.align_window));
    plots.emplace_back("RIDI-ORI", aligned_copy(ori, align(ori, gt, r.align_window)));
  }

  if (!r.sweep.empty()) {
    for (const auto& [lambda, ratio] : lambda_sweep(seq, model, parse_double_list(r.sweep))) {
      EvalReport rep;
      rep.tag = "lambda=" + format_g9(lambda);
      rep.mpe_ratio = ratio;
      rep.mpe_m = ratio * horizontal_path_length(gt);
      reports.push_back(rep);
    }
  }

  write_eval_csv((fs::path(r.out) / "report.csv").string(), reports);
  std::vector<std::pair<std::string, const Trajectory*>> tracks;
  tracks.reserve(plots.size());
  for (const auto& [name, traj] : plots) tracks.emplace_back(name, &traj);
  write_overlay_svg((fs::path(r.out) / "overlay.svg").string(), tracks,
                    fs::path(r.input).filename().string());

  std::printf("%-24s %12s %12s\n", "tag", "mpe [m]", "mpe/path");
  for (const EvalReport& rep : reports)
    std::printf("%-24s %12.4f %12.4f\n", rep.tag.c_str(), rep.mpe_m, rep.mpe_ratio);

  write_resolved((fs::path(r.out) / "eval.resolved.cfg").string(),
                 {{"input", r.input},
                  {"model", r.model},
                  {"traj", r.traj},
                  {"out", r.out},
                  {"lambda_sweep", r.sweep},
                  {"baselines", b2s(r.baselines)},
                  {"online", b2s(r.online)},
                  {"lambda", format_g9(r.lambda)},
                  {"align_window", std::to_string(r.align_window)},
                  {"stride", std::to_string(r.stride)}});
  return 0;
}

// ----------------------------------------------------------- gridsearch ----

struct GridArgs {
  std::string config, data, placement, axis = "x", kernel = "linear", out;
  int folds = 3, stride = 10;
  double rate = 200.0;
  std::uint64_t seed = 1;
  const CLI::Option *o_data = nullptr, *o_placement = nullptr, *o_axis = nullptr,
                    *o_kernel = nullptr, *o_out = nullptr, *o_folds = nullptr,
                    *o_stride = nullptr, *o_rate = nullptr, *o_seed = nullptr;
};

int cmd_gridsearch(const GridArgs& a) {
  ConfigBinder cfg(a.config);
  GridArgs r = a;
  cfg.merge("data", a.o_data, r.data);
  cfg.merge("placement", a.o_placement, r.placement);
  cfg.merge("axis", a.o_axis, r.axis);
  cfg.merge("kernel", a.o_kernel, r.kernel);
  cfg.merge("out", a.o_out, r.out);
  cfg.merge("folds", a.o_folds, r.folds);
  cfg.merge("stride", a.o_stride, r.stride);
  cfg.merge("rate", a.o_rate, r.rate);
  cfg.merge("seed", a.o_seed, r.seed);
  cfg.finish();
  if (r.data.empty()) throw UsageError("gridsearch needs --data");
  if (r.placement.empty()) throw UsageError("gridsearch needs --placement");
  if (r.axis != "x" && r.axis != "z") throw UsageError("axis must be 'x' or 'z'");
  if (r.kernel != "linear" && r.kernel != "rbf")
    throw UsageError("kernel must be 'linear' or 'rbf'");

  const Placement placement = placement_from_string(r.placement);
  std::vector<TrainingSample> samples;
  for (const std::string& path : sequence_files(r.data)) {
    const Sequence seq = load_named(path, r.rate);
    if (seq.placement != placement) continue;
    std::vector<TrainingSample> s = make_samples(seq, r.stride);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  if (samples.empty())
    throw UsageError("no sequences with placement '" + r.placement + "' in " + r.data);

  SampleMatrix x(static_cast<Eigen::Index>(samples.size()), kFeatureDim);
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  const int axis = r.axis == "x" ? 0 : 1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = samples[i].feature.transpose();
    y(static_cast<Eigen::Index>(i)) = samples[i].target(axis);
  }
  Normalizer norm;
  norm.fit(x);
  norm.apply_rows(x);

  std::array<double, 16> table{};
  const auto [best, best_mse] =
      grid_search(x, y, r.folds, r.seed,
                  r.kernel == "rbf" ? Kernel::Rbf : Kernel::Linear, 0.0, {}, &table);

  std::ostringstream os;
  os << "grid search: placement=" << r.placement << " axis=" << r.axis
     << " samples=" << samples.size() << " folds=" << r.folds << "\n";
  static constexpr double kCs[4] = {0.1, 1.0, 10.0, 100.0};
  static constexpr double kEps[4] = {0.001, 0.01, 0.1, 1.0};
  os << "           ";
  for (double e : kEps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "eps=%-8g", e);
    os << buf;
  }
  os << "\n";
  for (int ci = 0; ci < 4; ++ci) {
    char head[32];
    std::snprintf(head, sizeof head, "C=%-8g ", kCs[ci]);
    os << head;
    for (int ei = 0; ei < 4; ++ei) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%-12.5g", table[static_cast<std::size_t>(ci * 4 + ei)]);
      os << buf;
    }
    os << "\n";
  }
  os << "best: C=" << format_g9(best.c) << " epsilon=" << format_g9(best.epsilon)
     << " cv_mse=" << format_g9(best_mse) << "\n";
  std::cout << os.str();

  if (!r.out.empty()) {
    std::ofstream f(r.out, std::ios::binary);
    if (!f) throw ParseError("cannot open " + r.out + " for writing");
    f << os.str();
    write_resolved(r.out + ".resolved.cfg",
                   {{"data", r.data},
                    {"placement", r.placement},
                    {"axis", r.axis},
                    {"kernel", r.kernel},
                    {"out", r.out},
                    {"folds", std::to_string(r.folds)},
                    {"stride", std::to_string(r.stride)},
                    {"rate", format_g9(r.rate)},
                    {"seed", std::to_string(r.seed)}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned inertial dead reckoning"};
  app.require_subcommand(1);

  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic walking sequences");
  synth->add_option("--config", sy.config, "flat key=value config file");
  sy.o_manifest = synth->add_option("--manifest", sy.manifest, "sequence manifest (JSON)");
  sy.o_out = synth->add_option("--out", sy.out, "output directory");
  sy.o_seed = synth->add_option("--seed", sy.seed, "base noise seed");
  sy.o_rate = synth->add_option("--rate", sy.rate, "sample rate, Hz");

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "train the velocity cascade");
  train->add_option("--config", tr.config, "flat key=value config file");
  tr.o_data = train->add_option("--data", tr.data, "directory of sequence CSVs");
  tr.o_out = train->add_option("--out", tr.out, "output model path");
  tr.o_stride = train->add_option("--stride", tr.stride, "frames between training samples");
  tr.o_grid = train->add_flag("--grid-search", tr.grid, "cross-validated hyperparameter search");
  tr.o_kernel = train->add_option("--kernel", tr.kernel, "svr kernel: linear|rbf");
  tr.o_folds = train->add_option("--folds", tr.folds, "cross-validation folds");
  tr.o_rate = train->add_option("--rate", tr.rate, "expected sample rate, Hz");
  tr.o_c = train->add_option("--c", tr.c, "svr cost");
  tr.o_eps = train->add_option("--epsilon", tr.epsilon, "svr tube half-width");
  tr.o_cc = train->add_option("--classifier-c", tr.classifier_c, "classifier cost");
  tr.o_seed = train->add_option("--seed", tr.seed, "fold-assignment seed");

  RunArgs rn;
  CLI::App* run = app.add_subcommand("run", "reconstruct a trajectory from a sequence");
  run->add_option("--config", rn.config, "flat key=value config file");
  rn.o_model = run->add_option("--model", rn.model, "trained model file");
  rn.o_input = run->add_option("--input", rn.input, "sequence CSV");
  rn.o_out = run->add_option("--out", rn.out, "output trajectory CSV");
  rn.o_online = run->add_flag("--online", rn.online, "causal streaming mode");
  rn.o_lambda = run->add_option("--lambda", rn.lambda, "correction regularizer");
  rn.o_period = run->add_option("--period", rn.period, "online: frames between solves");
  rn.o_window = run->add_option("--window", rn.window, "online: trailing solve window");
  rn.o_blend = run->add_option("--blend", rn.blend, "online: publication blend frames");
  rn.o_stride = run->add_option("--stride", rn.stride, "frames between velocity constraints");
  rn.o_knots = run->add_option("--knot-spacing", rn.knot_spacing, "frames between bias knots");
  rn.o_horiz = run->add_flag("--horizontal-only", rn.horizontal_only,
                             "drop vertical rows from the correction");
  rn.o_semi = run->add_flag("--semi-implicit", rn.semi_implicit,
                            "integrate positions with the post-update velocity");
  rn.o_keepv = run->add_flag("--keep-vertical", rn.keep_vertical,
                             "do not zero the vertical velocity");

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "score trajectories against ground truth");
  eval->add_option("--config", ev.config, "flat key=value config file");
  ev.o_input = eval->add_option("--input", ev.input, "sequence CSV with ground truth");
  ev.o_model = eval->add_option("--model", ev.model, "trained model file");
  ev.o_traj = eval->add_option("--traj", ev.traj, "precomputed trajectory CSV");
  ev.o_out = eval->add_option("--out", ev.out, "output directory");
  ev.o_baselines = eval->add_flag("--baselines", ev.baselines, "also score RAW / RIDI-MAG / RIDI-ORI");
  ev.o_sweep = eval->add_option("--lambda-sweep", ev.sweep, "comma-separated regularizer list");
  ev.o_online = eval->add_flag("--online", ev.online, "reconstruct in streaming mode");
  ev.o_lambda = eval->add_option("--lambda", ev.lambda, "correction regularizer");
  ev.o_align = eval->add_option("--align-window", ev.align_window, "alignment window, frames");
  ev.o_stride = eval->add_option("--stride", ev.stride, "frames between velocity constraints");

  GridArgs gr;
  CLI::App* grid = app.add_subcommand("gridsearch", "cross-validated SVR hyperparameter table");
  grid->add_option("--config", gr.config, "flat key=value config file");
  gr.o_data = grid->add_option("--data", gr.data, "directory of sequence CSVs");
  gr.o_placement = grid->add_option("--placement", gr.placement, "leg|bag|hand|body");
  gr.o_axis = grid->add_option("--axis", gr.axis, "target axis: x|z");
  gr.o_kernel = grid->add_option("--kernel", gr.kernel, "svr kernel: linear|rbf");
  gr.o_out = grid->add_option("--out", gr.out, "optional report path");
  gr.o_folds = grid->add_option("--folds", gr.folds, "cross-validation folds");
  gr.o_stride = grid->add_option("--stride", gr.stride, "frames between training samples");
  gr.o_rate = grid->add_option("--rate", gr.rate, "expected sample rate, Hz");
  gr.o_seed = grid->add_option("--seed", gr.seed, "fold-assignment seed");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(synth)) return cmd_synth(sy);
    if (app.got_subcommand(train)) return cmd_train(tr);
    if (app.got_subcommand(run)) return cmd_run(rn);
    if (app.got_subcommand(eval)) return cmd_eval(ev);
    if (app.got_subcommand(grid)) return cmd_gridsearch(gr);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
