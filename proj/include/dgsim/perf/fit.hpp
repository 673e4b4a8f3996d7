#pragma once

#include <cstdint>
#include <vector>

#include "dgsim/perf/model.hpp"

namespace dgsim::perf {

struct Measurement {
  std::uint32_t n = 1;
  double tn = 0.0;
};

/// Known quantities for a fit. t1 <= 0 means "take T1 from the n=1
/// measurement".
struct FitFixed {
  double t1 = 0.0;
  double s = 0.0;
  double d = 0.0;
  double w = 1.0;
  std::uint32_t nodes = 0;   // 0: physical nodes track the instance count
  double f = 0.0;
};

enum class FitWeighting {
  Absolute,   // minimize sum (pred - meas)^2
  Relative,   // minimize sum ((pred - meas)/meas)^2
};

struct FitResult {
  CostParams params;
  bool degenerate = false;
  double residualNorm = 0.0;                 // weighted 2-norm
  std::vector<double> relativeResiduals;     // |pred - meas| / meas per point
};

/// Least-squares calibration of the linear cost forms against measured
/// (n, Tn) pairs. The model is linear in (k, sigma*s lumped, c1, g, theta1);
/// the solve is box-constrained: k in [0,1], the rest nonnegative.
/// Underdetermined or rank-deficient systems still return the best found
/// solution, with `degenerate` set.
FitResult fitParams(const std::vector<Measurement>& measured, const FitFixed& fixed,
                    FitWeighting weighting = FitWeighting::Relative);

}  // namespace dgsim::perf
