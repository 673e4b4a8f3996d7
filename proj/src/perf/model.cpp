#include "dgsim/perf/model.hpp"

#include <algorithm>
#include <cmath>

namespace dgsim::perf {

void CostParams::validate() const {
  if (k < 0.0 || k > 1.0) {
    throw DomainError("k must be within [0,1]");
  }
  if (t1 <= 0.0) {
    throw DomainError("T1 must be positive");
  }
  if (w <= 0.0) {
    throw DomainError("bandwidth must be positive");
  }
  if (s < 0.0 || d < 0.0 || f < 0.0 || sigma < 0.0 || c1 < 0.0 || c2 < 0.0 ||
      g < 0.0 || theta1 < 0.0) {
    throw DomainError("cost coefficients must be nonnegative");
  }
}

CostForms CostForms::linear() {
  CostForms forms;
  forms.serialization = [](const CostParams& p) { return p.sigma * p.s; };
  forms.communication = [](const CostParams& p, std::uint32_t n) {
    return p.c1 * n * p.s * p.d / p.w;
  };
  forms.coordination = [](const CostParams& p, std::uint32_t n) {
    return p.g * n * p.d / p.w;
  };
  forms.gain = [](const CostParams& p, std::uint32_t n) {
    double nodes = p.nodesTrackInstances ? static_cast<double>(n)
                                         : static_cast<double>(p.nodes);
    return p.theta1 * std::max(0.0, nodes - 1.0);
  };
  return forms;
}

double predictTime(const CostParams& params, std::uint32_t n, bool* clamped) {
  static const CostForms forms = CostForms::linear();
  return predictTime(params, n, forms, clamped);
}

double predictTime(const CostParams& params, std::uint32_t n, const CostForms& forms,
                   bool* clamped) {
  if (n < 1) {
    throw DomainError("instance count must be >= 1");
  }
  params.validate();
  double tn = params.k * params.t1 / n + (1.0 - params.k) * params.t1 +
              forms.serialization(params) + forms.communication(params, n) +
              forms.coordination(params, n) + params.f - forms.gain(params, n);
  bool floored = tn <= 0.0;
  if (clamped != nullptr) {
    *clamped = floored;
  }
  return floored ? kTimeFloor : tn;
}

double speedup(double t1, double tn) {
  if (t1 <= 0.0 || tn <= 0.0) {
    throw DomainError("speedup requires positive times");
  }
  return t1 / tn;
}

double efficiency(double sn, std::uint32_t n) {
  if (n < 1) {
    throw DomainError("instance count must be >= 1");
  }
  return sn / n;
}

double percentImprovement(double sn) {
  if (sn <= 0.0) {
    throw DomainError("speedup must be positive");
  }
  return (1.0 - 1.0 / sn) * 100.0;
}

ModelResult evaluate(const CostParams& params, std::uint32_t n) {
  ModelResult r;
  r.tn = predictTime(params, n);
  r.sn = speedup(params.t1, r.tn);
  r.en = efficiency(r.sn, n);
  r.p = percentImprovement(r.sn);
  return r;
}

}  // namespace dgsim::perf
