#include "qglat/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace qglat {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

SymmetricPotential SymmetricPotential::constant(double c0) {
  SymmetricPotential q;
  q.c0_ = c0;
  return q;
}

SymmetricPotential SymmetricPotential::from_cosine(double c0,
                                                   Eigen::VectorXd cos_coeffs) {
  SymmetricPotential q;
  q.c0_ = c0;
  q.cos_coeffs_ = std::move(cos_coeffs);
  return q;
}

SymmetricPotential SymmetricPotential::from_samples(Eigen::VectorXd samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("from_samples: need at least 2 samples");
  const int n = static_cast<int>(samples.size());
  const double scale = std::max(1.0, samples.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    if (std::abs(samples[i] - samples[n - 1 - i]) > 1e-9 * scale)
      throw std::invalid_argument("from_samples: samples are not symmetric");
  }
  SymmetricPotential q;
  q.samples_ = std::move(samples);
  return q;
}

double SymmetricPotential::operator()(double z) const {
  if (has_samples()) {
    const int n = static_cast<int>(samples_.size());
    double t = z * (n - 1);
    if (t <= 0.0) return samples_[0];
    if (t >= n - 1) return samples_[n - 1];
    const int i = static_cast<int>(t);
    const double frac = t - i;
    return samples_[i] * (1.0 - frac) + samples_[i + 1] * frac;
  }
  double value = c0_;
  for (int m = 0; m < cos_coeffs_.size(); ++m)
    value += cos_coeffs_[m] * std::cos(kTwoPi * (m + 1) * z);
  return value;
}

bool SymmetricPotential::is_zero() const {
  if (has_samples()) return samples_.isZero(0.0);
  return c0_ == 0.0 && (cos_coeffs_.size() == 0 || cos_coeffs_.isZero(0.0));
}

bool SymmetricPotential::is_constant() const {
  if (has_samples())
    return (samples_.array() == samples_[0]).all();
  return cos_coeffs_.size() == 0 || cos_coeffs_.isZero(0.0);
}

double SymmetricPotential::mean() const {
  if (!has_samples()) return c0_;  // cosine modes integrate to zero
  const int n = static_cast<int>(samples_.size());
  double acc = 0.5 * (samples_[0] + samples_[n - 1]);
  for (int i = 1; i < n - 1; ++i) acc += samples_[i];
  return acc / (n - 1);
}

double SymmetricPotential::sup_norm() const {
  if (has_samples()) return samples_.cwiseAbs().maxCoeff();
  return std::abs(c0_) +
         (cos_coeffs_.size() ? cos_coeffs_.cwiseAbs().sum() : 0.0);
}

double SymmetricPotential::l2_norm() const {
  if (has_samples()) {
    const int n = static_cast<int>(samples_.size());
    double acc = 0.5 * (samples_[0] * samples_[0] +
                        samples_[n - 1] * samples_[n - 1]);
    for (int i = 1; i < n - 1; ++i) acc += samples_[i] * samples_[i];
    return std::sqrt(acc / (n - 1));
  }
  // integral of cos^2(2 pi m z) over [0,1] is 1/2
  double acc = c0_ * c0_;
  if (cos_coeffs_.size()) acc += 0.5 * cos_coeffs_.squaredNorm();
  return std::sqrt(acc);
}

}  // namespace qglat
