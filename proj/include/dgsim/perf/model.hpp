#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgsim::perf {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters of the additive distributed-execution cost model
///
///   T(n) = k*T1/n + (1-k)*T1 + S + C + G + F - theta
///
/// with the default concrete forms
///
///   S     = sigma * s                 (serialization, size-dependent)
///   C     = c1 * n * s * d / w        (communication)
///   G     = g * n * d / w             (coordination)
///   theta = theta1 * (N - 1)          (gain from pooled node resources)
///
/// k is the distributable code fraction, T1 the single-instance time,
/// s the distributed-object size, d the inter-node distance proxy, w the
/// bandwidth, N the physical node count and F a fixed cost.
struct CostParams {
  double k = 1.0;
  double t1 = 1.0;
  double s = 0.0;
  double d = 0.0;
  double w = 1.0;
  std::uint32_t nodes = 1;   // N
  double f = 0.0;
  double sigma = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;           // reserved for alternative communication forms
  double g = 0.0;
  double theta1 = 0.0;

  /// When true, the theta term tracks the instance count (N = n), which is
  /// how the model is fitted against measurements taken with one instance
  /// per physical node. When false, theta uses the fixed `nodes` value.
  bool nodesTrackInstances = true;

  void validate() const;
};

/// Derived performance measures: Sn = T1/Tn, En = Sn/n, P = (1-1/Sn)*100.
struct ModelResult {
  double tn = 0.0;
  double sn = 0.0;
  double en = 0.0;
  double p = 0.0;
};

/// Swappable concrete cost forms. The default linear forms are the ones
/// documented on CostParams; alternatives can be explored without touching
/// the model driver.
struct CostForms {
  std::function<double(const CostParams&)> serialization;
  std::function<double(const CostParams&, std::uint32_t n)> communication;
  std::function<double(const CostParams&, std::uint32_t n)> coordination;
  std::function<double(const CostParams&, std::uint32_t n)> gain;

  static CostForms linear();
};

/// Floor applied when additive costs drive the prediction nonpositive.
inline constexpr double kTimeFloor = 1e-9;

/// Predicted distributed execution time on n instances. Nonpositive
/// predictions are clamped to kTimeFloor; `clamped`, when given, reports
/// whether that happened.
double predictTime(const CostParams& params, std::uint32_t n, bool* clamped = nullptr);
double predictTime(const CostParams& params, std::uint32_t n, const CostForms& forms,
                   bool* clamped = nullptr);

double speedup(double t1, double tn);
double efficiency(double sn, std::uint32_t n);
double percentImprovement(double sn);

/// Full result row for one instance count.
ModelResult evaluate(const CostParams& params, std::uint32_t n);

}  // namespace dgsim::perf
