#pragma once

// Shared fixtures for the test binaries: scripted walks with full segment
// coverage (pauses, ramps, turns, backward stretches) and a compact trained
// model cached per binary.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ridi/cascade.hpp"
#include "ridi/features.hpp"
#include "ridi/synth.hpp"

namespace ridi::testing {

inline MotionScript make_walk(double cruise, double straight_s, bool backward = false,
                              double turn_rate = M_PI / 4.0) {
  MotionScript s;
  s.segments = {
      MotionScript::pause(2.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, straight_s),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::turn(turn_rate, 2.0),
      MotionScript::pause(1.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, straight_s, backward ? -1 : 1),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::turn(-turn_rate, 2.0),
      MotionScript::pause(1.0),
      MotionScript::ramp(0.0, 0.6 * cruise, 1.5),
      MotionScript::straight(0.6 * cruise, 0.7 * straight_s),
      MotionScript::ramp(0.6 * cruise, 0.0, 1.5),
      MotionScript::pause(2.0),
  };
  return s;
}

/// Speed-alternating walk: long stretches at `lo` and `hi` so a constant-speed
/// estimate has to be wrong somewhere.
inline MotionScript make_speed_varying(double lo, double hi, double leg_s) {
  MotionScript s;
  s.segments = {MotionScript::pause(2.0), MotionScript::ramp(0.0, lo, 1.5)};
  for (int i = 0; i < 3; ++i) {
    s.segments.push_back(MotionScript::straight(lo, leg_s));
    s.segments.push_back(MotionScript::ramp(lo, hi, 1.5));
    s.segments.push_back(MotionScript::straight(hi, leg_s));
    s.segments.push_back(MotionScript::ramp(hi, lo, 1.5));
  }
  s.segments.push_back(MotionScript::ramp(lo, 0.0, 1.5));
  s.segments.push_back(MotionScript::pause(2.0));
  return s;
}

/// Out-and-back walk where the return leg is walked backward (device keeps
/// facing the original heading).
inline MotionScript make_backward_heavy(double cruise, double leg_s) {
  MotionScript s;
  s.segments = {
      MotionScript::pause(2.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, leg_s),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::pause(1.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, leg_s, -1),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::pause(1.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, leg_s, -1),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::pause(1.0),
      MotionScript::ramp(0.0, cruise, 2.0),
      MotionScript::straight(cruise, leg_s),
      MotionScript::ramp(cruise, 0.0, 2.0),
      MotionScript::pause(2.0),
  };
  return s;
}

/// One short training sequence per placement; speeds differ so the regressors
/// see more than one speed class.
inline std::vector<Sequence> small_training_set(double straight_s = 6.0,
                                                std::uint64_t seed0 = 101) {
  static const double cruise[4] = {1.5, 1.1, 1.9, 0.8};
  std::vector<Sequence> seqs;
  for (int p = 0; p < 4; ++p) {
    NoiseSpec noise;
    noise.seed = seed0 + static_cast<std::uint64_t>(p);
    seqs.push_back(
        synthesize(make_walk(cruise[p], straight_s, p % 2 == 1), kAllPlacements[p], noise)
            .seq);
  }
  return seqs;
}

// Stride 50 keeps training windows on the same quarter-second grid the
// offline corrector samples, so the gait oscillators show up at a fixed phase.
inline std::vector<TrainingSample> samples_from(const std::vector<Sequence>& seqs,
                                                int stride = 50) {
  std::vector<TrainingSample> all;
  for (const Sequence& seq : seqs) {
    std::vector<TrainingSample> s = make_samples(seq, stride);
    all.insert(all.end(), s.begin(), s.end());
  }
  return all;
}

/// Compact cascade trained once per test binary.
inline const CascadeModel& shared_model() {
  static const CascadeModel model = [] {
    auto [m, report] = train_cascade(samples_from(small_training_set()), {});
    (void)report;
    return m;
  }();
  return model;
}

inline std::string tmp_dir(const std::string& tag) {
  const std::filesystem::path p =
      std::filesystem::temp_directory_path() / ("ridi_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace ridi::testing
