#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ridi/sequence.hpp"

namespace ridi {

/// Raw sensor log prior to synchronization. Each channel keeps its own
/// timestamp list; files produced by this toolkit share one clock across
/// channels, but in-memory logs (and future ingest paths) may not.
struct RawLog {
  struct Vec3Channel {
    std::vector<double> t;
    std::vector<Eigen::Vector3d> v;
  };
  struct QuatChannel {
    std::vector<double> t;
    std::vector<Eigen::Quaterniond> q;  ///< scalar-first in files, Hamilton
  };

  Vec3Channel gyro, acce, grav;
  QuatChannel ori;
  std::optional<Vec3Channel> pos;       ///< ground-truth position
  std::optional<QuatChannel> gt_ori;    ///< ground-truth orientation
  std::map<std::string, std::string> metadata;  ///< from "# key=value" lines
};

/// Reads the canonical sequence CSV. Header row is mandatory and must match
/// the schema exactly: t,gyro_*,acce_*,grav_*,ori_{w,x,y,z} with an optional
/// trailing ground-truth block pos_*,gt_ori_{w,x,y,z}. Lines starting with '#'
/// are comments; "# key=value" pairs are collected as metadata. Errors carry
/// the offending line number.
RawLog parse_csv(const std::string& path);

/// Writes a log whose channels share one clock back to the canonical CSV.
/// parse_csv followed by write_csv reproduces canonical files byte-for-byte.
void write_csv(const std::string& path, const RawLog& log);

/// Linear/slerp resampling of all channels onto a uniform grid spanning the
/// intersection of channel time ranges. Throws GapError when any channel has a
/// gap above 0.5 s. Resampling an already-uniform log at the same rate is an
/// identity.
Sequence synchronize(const RawLog& log, double target_rate);

RawLog sequence_to_rawlog(const Sequence& seq);
void write_sequence_csv(const std::string& path, const Sequence& seq);
Sequence read_sequence_csv(const std::string& path, double target_rate = 200.0);

/// Injected-bias sidecar (synthetic data): t,bias_x,bias_y,bias_z.
void write_bias_csv(const std::string& path, const std::vector<double>& t,
                    const std::vector<Eigen::Vector3d>& bias);
std::vector<Eigen::Vector3d> parse_bias_csv(const std::string& path);

/// Shared numeric formatting for all CSV output: 9 significant digits.
std::string format_g9(double v);

}  // namespace ridi
