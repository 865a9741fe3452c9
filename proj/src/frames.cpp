#include "ridi/frames.hpp"

#include <algorithm>
#include <cctype>

#include "ridi/errors.hpp"

namespace ridi {

const char* to_string(Placement p) {
  switch (p) {
    case Placement::Leg: return "Leg";
    case Placement::Bag: return "Bag";
    case Placement::Hand: return "Hand";
    case Placement::Body: return "Body";
  }
  return "?";
}

Placement placement_from_string(const std::string& s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (Placement p : kAllPlacements) {
    std::string name = to_string(p);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower == name) return p;
  }
  throw UsageError("unknown placement '" + s + "' (expected Leg, Bag, Hand or Body)");
}

}  // namespace ridi
