#include "dgsim/perf/classify.hpp"

#include <algorithm>
#include <cmath>

namespace dgsim::perf {

std::string toString(ScalePattern p) {
  switch (p) {
    case ScalePattern::Positive:
      return "positive";
    case ScalePattern::Negative:
      return "negative";
    case ScalePattern::PositiveThenNegative:
      return "positiveThenNegative";
    case ScalePattern::Complex:
      return "complex";
  }
  return "unknown";
}

ScalePattern classifyScalability(const std::vector<Measurement>& times,
                                 double flatTolerance) {
  if (times.size() < 3) {
    throw DomainError("classification requires at least 3 points");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i].n <= times[i - 1].n) {
      throw DomainError("instance counts must be strictly increasing");
    }
  }

  // -1 decreasing, +1 increasing; flats inherit the previous direction and
  // leading flats are dropped.
  std::vector<int> dirs;
  int prev = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    double a = times[i - 1].tn;
    double b = times[i].tn;
    double scale = std::max(std::abs(a), std::abs(b));
    int dir;
    if (scale == 0.0 || std::abs(b - a) <= flatTolerance * scale) {
      dir = prev;
    } else {
      dir = b < a ? -1 : +1;
    }
    if (dir != 0) {
      dirs.push_back(dir);
      prev = dir;
    }
  }

  if (dirs.empty() || std::all_of(dirs.begin(), dirs.end(), [](int d) { return d < 0; })) {
    return ScalePattern::Positive;
  }
  if (std::all_of(dirs.begin(), dirs.end(), [](int d) { return d > 0; })) {
    return ScalePattern::Negative;
  }
  int changes = 0;
  bool decToInc = false;
  for (std::size_t i = 1; i < dirs.size(); ++i) {
    if (dirs[i] != dirs[i - 1]) {
      ++changes;
      decToInc = dirs[i - 1] < 0 && dirs[i] > 0;
    }
  }
  if (changes == 1 && decToInc) {
    return ScalePattern::PositiveThenNegative;
  }
  return ScalePattern::Complex;
}

}  // namespace dgsim::perf
