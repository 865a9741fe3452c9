#include "ridi/sequence.hpp"

#include <cmath>
#include <string>

#include "ridi/errors.hpp"

namespace ridi {

void Sequence::validate() const {
  if (frames.size() < 200)
    throw SchemaError("sequence has " + std::to_string(frames.size()) +
                      " frames, need at least 200 (one feature window)");
  const double step = dt();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    double gap = frames[i].t - frames[i - 1].t;
    if (std::abs(gap - step) > 1e-6)
      throw SchemaError("non-uniform timestamps at frame " + std::to_string(i) + ": step " +
                        std::to_string(gap) + " s, expected " + std::to_string(step) + " s");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    double g = frames[i].gravity.norm();
    if (g < 9.0 || g > 10.5)
      throw SchemaError("gravity magnitude " + std::to_string(g) + " at frame " +
                        std::to_string(i) + " outside [9.0, 10.5]");
  }
}

}  // namespace ridi
