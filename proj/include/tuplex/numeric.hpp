#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace tuplex {

// Probabilities handed out by the models stay inside [kProbEps, 1 - kProbEps].
inline constexpr double kProbEps = 1e-12;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamped_sigmoid(double z) {
  return std::clamp(sigmoid(z), kProbEps, 1.0 - kProbEps);
}

// -[y log p + (1 - y) log(1 - p)] with p = sigmoid(z), computed from the logit.
inline double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

template <class A, class B>
double dot(const A& a, const B& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

}  // namespace tuplex
