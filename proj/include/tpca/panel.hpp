#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tpca/errors.hpp"

namespace tpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// A T x N panel with an observation mask. Unobserved cells hold 0 as a
/// placeholder; the mask is authoritative and every computation gates on it.
struct Panel {
  Matrix values;
  Mask mask;
  std::vector<std::string> unit_names;  // optional, may be empty
  std::vector<std::string> time_index;  // optional, may be empty

  Panel() = default;
  Panel(Matrix v, Mask m) : values(std::move(v)), mask(std::move(m)) {
    check();
  }

  static Panel fully_observed(Matrix v) {
    Mask m = Mask::Constant(v.rows(), v.cols(), true);
    return Panel(std::move(v), std::move(m));
  }

  Index periods() const { return values.rows(); }
  Index units() const { return values.cols(); }

  void check() const {
    if (values.rows() != mask.rows() || values.cols() != mask.cols())
      throw InvalidArgument("panel values and mask dimensions differ");
    if (values.rows() < 1 || values.cols() < 1)
      throw InvalidArgument("panel must have T >= 1 and N >= 1");
  }
};

/// Z^(gamma): columnwise concatenation of X and sqrt(gamma)-scaled Y.
struct WeightedConcat {
  Panel panel;
  double gamma = 1.0;
  Index n_x = 0;
  Index n_y = 0;
};

WeightedConcat concat_weighted(const Panel& x, const Panel& y, double gamma);

/// Forward-fill each unit with its most recent observed value and mark the
/// filled cells observed. Cells before a unit's first observation stay
/// missing.
Panel anchor_forward_fill(const Panel& y);

struct StandardizeResult {
  Panel panel;
  Vector means;  // per unit, over observed cells
  Vector stds;   // per unit, divisor = number of observed cells
};

StandardizeResult standardize(const Panel& p);

/// Undo standardize on observed cells: values * std + mean per unit.
Panel inverse_standardize(const Panel& p, const Vector& means,
                          const Vector& stds);

/// min(N_y, T), the convergence-rate scale of the estimator.
inline Index delta_rate(Index n_y, Index periods) {
  return std::min(n_y, periods);
}

}  // namespace tpca
