#include "ridi/ingest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ridi/errors.hpp"

namespace ridi {

namespace {

const char* kBaseColumns[] = {"t",      "gyro_x", "gyro_y", "gyro_z", "acce_x", "acce_y",
                              "acce_z", "grav_x", "grav_y", "grav_z", "ori_w",  "ori_x",
                              "ori_y",  "ori_z"};
const char* kGtColumns[] = {"pos_x", "pos_y", "pos_z", "gt_ori_w", "gt_ori_x", "gt_ori_y",
                            "gt_ori_z"};
constexpr int kBaseCount = 14;
constexpr int kGtCount = 7;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& tok, int line_no) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ParseError("bad numeric field '" + tok + "' at line " + std::to_string(line_no));
  return v;
}

void require_shared_clock(const RawLog& log) {
  const auto& t = log.gyro.t;
  auto same = [&](const std::vector<double>& o) { return o == t; };
  bool ok = same(log.acce.t) && same(log.grav.t) && same(log.ori.t);
  if (log.pos) ok = ok && same(log.pos->t);
  if (log.gt_ori) ok = ok && same(log.gt_ori->t);
  if (!ok) throw SchemaError("write_csv requires all channels on one clock");
}

// Two-pointer linear interpolation helper over one channel.
template <typename V, typename Lerp>
class Resampler {
 public:
  Resampler(const std::vector<double>& t, const std::vector<V>& v, Lerp lerp)
      : t_(t), v_(v), lerp_(lerp) {}

  V at(double t) {
    while (k_ + 2 < t_.size() && t_[k_ + 1] <= t) ++k_;
    double t0 = t_[k_], t1 = t_[k_ + 1];
    double u = (t - t0) / (t1 - t0);
    if (u <= 0.0) return v_[k_];
    if (u >= 1.0) return v_[k_ + 1];
    return lerp_(v_[k_], v_[k_ + 1], u);
  }

 private:
  const std::vector<double>& t_;
  const std::vector<V>& v_;
  Lerp lerp_;
  std::size_t k_ = 0;
};

void check_channel(const std::vector<double>& t, const char* name) {
  if (t.size() < 2) throw SchemaError(std::string("channel ") + name + " has fewer than 2 samples");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] - t[i - 1] > 0.5)
      throw GapError(std::string("channel ") + name + " has a " +
                     std::to_string(t[i] - t[i - 1]) + " s gap at sample " + std::to_string(i));
  }
}

}  // namespace

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

RawLog parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  RawLog log;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  bool has_gt = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq != std::string::npos && eq > 0)
          log.metadata[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      continue;
    }
    auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() != kBaseCount && fields.size() != kBaseCount + kGtCount)
        throw SchemaError("header at line " + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " columns, expected 14 or 21");
      for (int i = 0; i < kBaseCount; ++i)
        if (fields[static_cast<std::size_t>(i)] != kBaseColumns[i])
          throw SchemaError("header column " + std::to_string(i + 1) + " is '" +
                            fields[static_cast<std::size_t>(i)] + "', expected '" +
                            kBaseColumns[i] + "'");
      has_gt = fields.size() == kBaseCount + kGtCount;
      if (has_gt) {
        for (int i = 0; i < kGtCount; ++i)
          if (fields[static_cast<std::size_t>(kBaseCount + i)] != kGtColumns[i])
            throw SchemaError("header column " + std::to_string(kBaseCount + i + 1) + " is '" +
                              fields[static_cast<std::size_t>(kBaseCount + i)] +
                              "', expected '" + kGtColumns[i] + "'");
        log.pos.emplace();
        log.gt_ori.emplace();
      }
      header_seen = true;
      continue;
    }

    std::size_t expected = static_cast<std::size_t>(has_gt ? kBaseCount + kGtCount : kBaseCount);
    if (fields.size() != expected)
      throw ParseError("row at line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(expected));

    double vals[kBaseCount + kGtCount];
    for (std::size_t i = 0; i < expected; ++i) vals[i] = parse_double(fields[i], line_no);

    double t = vals[0];
    if (!log.gyro.t.empty() && t <= log.gyro.t.back())
      throw SchemaError("non-monotonic timestamp at line " + std::to_string(line_no));

    log.gyro.t.push_back(t);
    log.gyro.v.emplace_back(vals[1], vals[2], vals[3]);
    log.acce.t.push_back(t);
    log.acce.v.emplace_back(vals[4], vals[5], vals[6]);
    log.grav.t.push_back(t);
    log.grav.v.emplace_back(vals[7], vals[8], vals[9]);
    log.ori.t.push_back(t);
    log.ori.q.emplace_back(vals[10], vals[11], vals[12], vals[13]);  // w,x,y,z
    if (has_gt) {
      log.pos->t.push_back(t);
      log.pos->v.emplace_back(vals[14], vals[15], vals[16]);
      log.gt_ori->t.push_back(t);
      log.gt_ori->q.emplace_back(vals[17], vals[18], vals[19], vals[20]);
    }
  }
  if (!header_seen) throw SchemaError("missing header row in " + path);
  if (log.gyro.t.empty()) throw SchemaError("no data rows in " + path);
  return log;
}

void write_csv(const std::string& path, const RawLog& log) {
  require_shared_clock(log);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");

  for (const auto& [k, v] : log.metadata) out << "# " << k << "=" << v << "\n";
  for (int i = 0; i < kBaseCount; ++i) out << (i ? "," : "") << kBaseColumns[i];
  if (log.pos)
    for (int i = 0; i < kGtCount; ++i) out << "," << kGtColumns[i];
  out << "\n";

  const std::size_t n = log.gyro.t.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << format_g9(log.gyro.t[i]);
    auto put3 = [&](const Eigen::Vector3d& v) {
      out << "," << format_g9(v.x()) << "," << format_g9(v.y()) << "," << format_g9(v.z());
    };
    auto put4 = [&](const Eigen::Quaterniond& q) {
      out << "," << format_g9(q.w()) << "," << format_g9(q.x()) << "," << format_g9(q.y()) << ","
          << format_g9(q.z());
    };
    put3(log.gyro.v[i]);
    put3(log.acce.v[i]);
    put3(log.grav.v[i]);
    put4(log.ori.q[i]);
    if (log.pos) {
      put3(log.pos->v[i]);
      put4(log.gt_ori->q[i]);
    }
    out << "\n";
  }
}

Sequence synchronize(const RawLog& log, double target_rate) {
  if (target_rate <= 0.0) throw UsageError("target rate must be positive");
  check_channel(log.gyro.t, "gyro");
  check_channel(log.acce.t, "acce");
  check_channel(log.grav.t, "grav");
  check_channel(log.ori.t, "ori");
  if (log.pos) check_channel(log.pos->t, "pos");
  if (log.gt_ori) check_channel(log.gt_ori->t, "gt_ori");

  double t0 = std::max({log.gyro.t.front(), log.acce.t.front(), log.grav.t.front(),
                        log.ori.t.front()});
  double t1 = std::min({log.gyro.t.back(), log.acce.t.back(), log.grav.t.back(),
                        log.ori.t.back()});
  if (log.pos) {
    t0 = std::max(t0, log.pos->t.front());
    t1 = std::min(t1, log.pos->t.back());
  }
  if (t1 <= t0) throw SchemaError("channel time ranges do not overlap");

  const int n = static_cast<int>(std::floor((t1 - t0) * target_rate + 1e-9)) + 1;

  auto lerp3 = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double u) {
    return Eigen::Vector3d(a + u * (b - a));
  };
  auto slerpq = [](const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double u) {
    return a.slerp(u, b).normalized();
  };

  Resampler gyro(log.gyro.t, log.gyro.v, lerp3);
  Resampler acce(log.acce.t, log.acce.v, lerp3);
  Resampler grav(log.grav.t, log.grav.v, lerp3);
  Resampler ori(log.ori.t, log.ori.q, slerpq);
  std::optional<Resampler<Eigen::Vector3d, decltype(lerp3)>> pos;
  std::optional<Resampler<Eigen::Quaterniond, decltype(slerpq)>> gt_ori;
  if (log.pos) pos.emplace(log.pos->t, log.pos->v, lerp3);
  if (log.gt_ori) gt_ori.emplace(log.gt_ori->t, log.gt_ori->q, slerpq);

  Sequence seq;
  seq.sample_rate = target_rate;
  seq.frames.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = t0 + i / target_rate;
    SensorFrame& f = seq.frames[static_cast<std::size_t>(i)];
    f.t = t;
    f.gyro = Vec3<Frame::Device>(gyro.at(t));
    f.linacc = Vec3<Frame::Device>(acce.at(t));
    f.gravity = Vec3<Frame::Device>(grav.at(t));
    f.orientation = RotWD(ori.at(t));
    if (pos) f.gt_position = Vec3<Frame::World>(pos->at(t));
    if (gt_ori) f.gt_orientation = RotWD(gt_ori->at(t));
  }

  auto meta = log.metadata.find("placement");
  if (meta != log.metadata.end()) {
    try {
      seq.placement = placement_from_string(meta->second);
    } catch (const UsageError& e) {
      // From a file this is a content problem, not a command-line problem.
      throw SchemaError(e.what());
    }
  }
  meta = log.metadata.find("subject");
  if (meta != log.metadata.end()) seq.subject = meta->second;
  return seq;
}

RawLog sequence_to_rawlog(const Sequence& seq) {
  RawLog log;
  const std::size_t n = seq.frames.size();
  bool gt = seq.has_ground_truth();
  if (gt) {
    log.pos.emplace();
    log.gt_ori.emplace();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const SensorFrame& f = seq.frames[i];
    log.gyro.t.push_back(f.t);
    log.gyro.v.push_back(f.gyro.v);
    log.acce.t.push_back(f.t);
    log.acce.v.push_back(f.linacc.v);
    log.grav.t.push_back(f.t);
    log.grav.v.push_back(f.gravity.v);
    log.ori.t.push_back(f.t);
    log.ori.q.push_back(f.orientation.q);
    if (gt) {
      log.pos->t.push_back(f.t);
      log.pos->v.push_back(f.gt_position->v);
      log.gt_ori->t.push_back(f.t);
      log.gt_ori->q.push_back(f.gt_orientation.value_or(RotWD()).q);
    }
  }
  if (seq.placement) log.metadata["placement"] = to_string(*seq.placement);
  log.metadata["rate"] = format_g9(seq.sample_rate);
  if (!seq.subject.empty()) log.metadata["subject"] = seq.subject;
  return log;
}

void write_sequence_csv(const std::string& path, const Sequence& seq) {
  write_csv(path, sequence_to_rawlog(seq));
}

Sequence read_sequence_csv(const std::string& path, double target_rate) {
  RawLog log = parse_csv(path);
  auto it = log.metadata.find("rate");
  double rate = target_rate;
  if (it != log.metadata.end()) rate = std::strtod(it->second.c_str(), nullptr);
  Sequence seq = synchronize(log, rate);
  seq.validate();
  return seq;
}

void write_bias_csv(const std::string& path, const std::vector<double>& t,
                    const std::vector<Eigen::Vector3d>& bias) {
  if (t.size() != bias.size()) throw UsageError("bias track and timestamps differ in length");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "t,bias_x,bias_y,bias_z\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out << format_g9(t[i]) << "," << format_g9(bias[i].x()) << "," << format_g9(bias[i].y())
        << "," << format_g9(bias[i].z()) << "\n";
}

std::vector<Eigen::Vector3d> parse_bias_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::vector<Eigen::Vector3d> out;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "t,bias_x,bias_y,bias_z")
        throw SchemaError("bad bias header at line " + std::to_string(line_no));
      header = true;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() != 4)
      throw ParseError("bias row at line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected 4");
    out.emplace_back(parse_double(fields[1], line_no), parse_double(fields[2], line_no),
                     parse_double(fields[3], line_no));
  }
  return out;
}

}  // namespace ridi
