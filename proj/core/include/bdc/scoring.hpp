#pragma once

#include <string>
#include <string_view>

namespace bdc {

/// Fusion of classification score with the two corner confidences.
struct CoclVariant {
  enum class Kind { exp_avg, exp_max, exp_min, weighted };

  Kind kind = Kind::exp_avg;
  /// Classification exponent for Kind::weighted; corners get 1 - alpha.
  double alpha = 0.3;

  static CoclVariant exp_avg() { return {Kind::exp_avg, 0.3}; }
  static CoclVariant exp_max() { return {Kind::exp_max, 0.3}; }
  static CoclVariant exp_min() { return {Kind::exp_min, 0.3}; }
  static CoclVariant weighted(double alpha) { return {Kind::weighted, alpha}; }

  /// Parses exp-avg | exp-max | exp-min | weighted:ALPHA.
  static CoclVariant parse(std::string_view text);
  std::string to_string() const;
};

/// CoCl score. Exp variants lie in [0, e]; the weighted one in [0, 1].
/// Throws std::invalid_argument when an input is outside [0, 1].
double cocl(double s_cls, double f_tl, double f_br, const CoclVariant& v);

}  // namespace bdc
