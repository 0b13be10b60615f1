#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "seqrep/errors.hpp"

namespace seqrep {

/// Dense parameter point of fixed dimension (at least 1).
///
/// Arithmetic is plain IEEE double arithmetic element by element; nothing is
/// fused or reordered, so results are reproducible bit-for-bit.
class ParamVector {
 public:
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  static ParamVector zeros(std::size_t dim);

  std::size_t dim() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double scale);

  /// this += scale * x
  ParamVector& axpy(double scale, const ParamVector& x);

  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double scale, ParamVector a);
ParamVector operator*(ParamVector a, double scale);

/// Throws UsageError unless a and b share a dimension.
void require_same_dim(const ParamVector& a, const ParamVector& b, const char* context);

double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);
double l2_distance(const ParamVector& a, const ParamVector& b);

/// dot(a, b) / (|a| |b|). A zero-norm argument raises ZeroGradientError;
/// the metric is undefined there and is never reported as 0.
double cosine_similarity(const ParamVector& a, const ParamVector& b);

}  // namespace seqrep
