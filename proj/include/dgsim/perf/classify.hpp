#pragma once

#include <string>
#include <vector>

#include "dgsim/perf/fit.hpp"

namespace dgsim::perf {

/// Scalability patterns observed when sweeping the instance count.
enum class ScalePattern {
  Positive,              // time nonincreasing throughout
  Negative,              // time nondecreasing throughout
  PositiveThenNegative,  // one direction change, improving then degrading
  Complex,               // anything else
};

std::string toString(ScalePattern p);

/// Classifies an execution-time series ordered by strictly increasing n.
/// Steps within `flatTolerance` relative difference count as flat and
/// inherit the previous direction. Requires at least 3 points.
ScalePattern classifyScalability(const std::vector<Measurement>& times,
                                 double flatTolerance = 0.01);

}  // namespace dgsim::perf
