#pragma once

#include <Eigen/Core>

namespace qglat {

// Real symmetric potential q(z) = q(1-z) on [0,1], stored either in the
// even-cosine basis c0 + sum_m c_m cos(2 pi m z) (symmetry automatic) or as
// dense samples on a uniform grid including both endpoints (symmetry
// validated on construction, then evaluated by linear interpolation).
class SymmetricPotential {
 public:
  SymmetricPotential() = default;

  static SymmetricPotential zero() { return SymmetricPotential(); }
  static SymmetricPotential constant(double c0);
  static SymmetricPotential from_cosine(double c0, Eigen::VectorXd cos_coeffs);
  static SymmetricPotential from_samples(Eigen::VectorXd samples);

  double operator()(double z) const;

  double constant_term() const { return c0_; }
  const Eigen::VectorXd& cos_coeffs() const { return cos_coeffs_; }
  bool has_samples() const { return samples_.size() > 0; }
  const Eigen::VectorXd& samples() const { return samples_; }

  bool is_zero() const;
  bool is_constant() const;  // no oscillatory part

  double mean() const;      // integral over [0,1]
  double sup_norm() const;
  double l2_norm() const;

 private:
  double c0_ = 0.0;
  Eigen::VectorXd cos_coeffs_;  // m = 1..M_b
  Eigen::VectorXd samples_;
};

}  // namespace qglat
