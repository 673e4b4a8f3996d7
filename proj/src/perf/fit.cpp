#include "dgsim/perf/fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

namespace dgsim::perf {

namespace {

constexpr int kNumVars = 5;  // k, lumped sigma*s, c1, g, theta1

struct Columns {
  // Row values of the design matrix for one measurement.
  static Eigen::Matrix<double, 1, kNumVars> row(const FitFixed& fixed, double t1,
                                                std::uint32_t n) {
    double nodes = fixed.nodes == 0 ? static_cast<double>(n)
                                    : static_cast<double>(fixed.nodes);
    Eigen::Matrix<double, 1, kNumVars> r;
    r(0) = t1 * (1.0 / n - 1.0);          // k
    r(1) = 1.0;                           // sigma * s, lumped
    r(2) = n * fixed.s * fixed.d / fixed.w;  // c1
    r(3) = n * fixed.d / fixed.w;         // g
    r(4) = -(nodes - 1.0);                // theta1
    return r;
  }
};

// Cyclic coordinate descent for 0.5 x'Qx - b'x over a box. Zero-curvature
// coordinates stay at their lower bound.
Eigen::VectorXd boxedDescent(const Eigen::MatrixXd& q, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                             Eigen::VectorXd x) {
  const int vars = static_cast<int>(x.size());
  for (int iter = 0; iter < 200000; ++iter) {
    double change = 0.0;
    for (int j = 0; j < vars; ++j) {
      if (q(j, j) <= 0.0) {
        continue;
      }
      double grad = q.row(j).dot(x) - b(j);
      double next = std::clamp(x(j) - grad / q(j, j), lo(j), hi(j));
      change = std::max(change, std::abs(next - x(j)));
      x(j) = next;
    }
    if (change < 1e-15) {
      break;
    }
  }
  return x;
}

}  // namespace

FitResult fitParams(const std::vector<Measurement>& measured, const FitFixed& fixed,
                    FitWeighting weighting) {
  if (measured.empty()) {
    throw DomainError("fit requires at least one measurement");
  }
  double t1 = fixed.t1;
  if (t1 <= 0.0) {
    for (const auto& m : measured) {
      if (m.n == 1) {
        t1 = m.tn;
        break;
      }
    }
    if (t1 <= 0.0) {
      throw DomainError("T1 not provided and no n=1 measurement present");
    }
  }

  std::set<std::uint32_t> distinct;
  for (const auto& m : measured) {
    if (m.n < 1 || m.tn <= 0.0) {
      throw DomainError("measurements require n >= 1 and Tn > 0");
    }
    distinct.insert(m.n);
  }

  const int rows = static_cast<int>(measured.size());
  Eigen::MatrixXd phi(rows, kNumVars);
  Eigen::VectorXd y(rows);
  Eigen::VectorXd w(rows);
  for (int i = 0; i < rows; ++i) {
    phi.row(i) = Columns::row(fixed, t1, measured[i].n);
    y(i) = measured[i].tn - t1 - fixed.f;
    w(i) = weighting == FitWeighting::Relative ? 1.0 / measured[i].tn : 1.0;
  }
  Eigen::MatrixXd phiW = w.asDiagonal() * phi;
  Eigen::VectorXd yW = w.asDiagonal() * y;

  Eigen::VectorXd lo(kNumVars), hi(kNumVars);
  lo.setZero();
  hi.setConstant(std::numeric_limits<double>::infinity());
  hi(0) = 1.0;  // k

  // Unconstrained solve first; accept it when it already sits in the box.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phiW);
  bool degenerate = static_cast<int>(distinct.size()) < 3 || qr.rank() < kNumVars;
  Eigen::VectorXd x = qr.solve(yW);
  bool inBox = true;
  for (int j = 0; j < kNumVars; ++j) {
    if (!(x(j) >= lo(j) - 1e-12 && x(j) <= hi(j) + 1e-12) || !std::isfinite(x(j))) {
      inBox = false;
      break;
    }
  }
  if (inBox) {
    for (int j = 0; j < kNumVars; ++j) {
      x(j) = std::clamp(x(j), lo(j), hi(j));
    }
  } else {
    Eigen::MatrixXd q = phiW.transpose() * phiW;
    Eigen::VectorXd b = phiW.transpose() * yW;
    Eigen::VectorXd start = Eigen::VectorXd::Zero(kNumVars);
    x = boxedDescent(q, b, lo, hi, start);
  }
  // Coefficients whose design column vanished are unidentifiable; pin them.
  for (int j = 0; j < kNumVars; ++j) {
    if (phiW.col(j).norm() == 0.0) {
      x(j) = 0.0;
    }
  }

  FitResult result;
  result.degenerate = degenerate;
  result.params.k = x(0);
  result.params.t1 = t1;
  result.params.s = fixed.s;
  result.params.d = fixed.d;
  result.params.w = fixed.w;
  result.params.nodes = fixed.nodes == 0 ? 1 : fixed.nodes;
  result.params.nodesTrackInstances = fixed.nodes == 0;
  result.params.f = fixed.f;
  // The lumped constant is reported through sigma: sigma * s = x(1). With
  // s = 0 the constant is kept as sigma itself (s treated as unit size).
  if (fixed.s > 0.0) {
    result.params.sigma = x(1) / fixed.s;
  } else {
    result.params.sigma = x(1);
    result.params.s = x(1) > 0.0 ? 1.0 : fixed.s;
  }
  result.params.c1 = x(2);
  result.params.g = x(3);
  result.params.theta1 = x(4);

  double norm = 0.0;
  result.relativeResiduals.reserve(measured.size());
  for (const auto& m : measured) {
    double pred = predictTime(result.params, m.n);
    double diff = pred - m.tn;
    double weightTerm = weighting == FitWeighting::Relative ? diff / m.tn : diff;
    norm += weightTerm * weightTerm;
    result.relativeResiduals.push_back(std::abs(diff) / m.tn);
  }
  result.residualNorm = std::sqrt(norm);
  return result;
}

}  // namespace dgsim::perf
