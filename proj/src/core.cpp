#include "seqrep/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seqrep {

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw UsageError("ParamVector: dimension must be at least 1");
  }
}

ParamVector::ParamVector(std::initializer_list<double> values)
    : ParamVector(std::vector<double>(values)) {}

ParamVector ParamVector::zeros(std::size_t dim) { return ParamVector(std::vector<double>(dim, 0.0)); }

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_dim(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_dim(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

ParamVector& ParamVector::axpy(double scale, const ParamVector& x) {
  require_same_dim(*this, x, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * x.values_[i];
  return *this;
}

bool ParamVector::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(double scale, ParamVector a) { return a *= scale; }
ParamVector operator*(ParamVector a, double scale) { return a *= scale; }

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* context) {
  if (a.dim() != b.dim()) {
    throw UsageError(std::string(context) + ": dimension mismatch (" + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()) + ")");
  }
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

double l2_distance(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "l2_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_similarity(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "cosine_similarity");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw ZeroGradientError("cosine_similarity: zero-norm vector");
  }
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace seqrep
