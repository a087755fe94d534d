#include "bdc/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bdc {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// 0^0 is 1.
double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  return std::pow(base, exponent);
}

}  // namespace

CoclVariant CoclVariant::parse(std::string_view text) {
  if (text == "exp-avg") return exp_avg();
  if (text == "exp-max") return exp_max();
  if (text == "exp-min") return exp_min();
  constexpr std::string_view prefix = "weighted:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string rest(text.substr(prefix.size()));
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size() || !in_unit(alpha)) {
      throw std::invalid_argument("invalid CoCl alpha '" + rest + "' (expected a value in [0,1])");
    }
    return weighted(alpha);
  }
  throw std::invalid_argument("unknown CoCl variant '" + std::string(text) +
                              "' (expected exp-avg, exp-max, exp-min or weighted:ALPHA)");
}

std::string CoclVariant::to_string() const {
  switch (kind) {
    case Kind::exp_avg: return "exp-avg";
    case Kind::exp_max: return "exp-max";
    case Kind::exp_min: return "exp-min";
    case Kind::weighted: {
      std::ostringstream os;
      os << "weighted:" << alpha;
      return os.str();
    }
  }
  return "exp-avg";
}

double cocl(double s_cls, double f_tl, double f_br, const CoclVariant& v) {
  if (!in_unit(s_cls) || !in_unit(f_tl) || !in_unit(f_br)) {
    throw std::invalid_argument("cocl: scores must lie in [0,1]");
  }
  switch (v.kind) {
    case CoclVariant::Kind::exp_avg: return s_cls * std::exp((f_tl + f_br) / 2.0);
    case CoclVariant::Kind::exp_max: return s_cls * std::exp(std::max(f_tl, f_br));
    case CoclVariant::Kind::exp_min: return s_cls * std::exp(std::min(f_tl, f_br));
    case CoclVariant::Kind::weighted: {
      if (!in_unit(v.alpha)) throw std::invalid_argument("cocl: weighted alpha must lie in [0,1]");
      return power(s_cls, v.alpha) * power((f_tl + f_br) / 2.0, 1.0 - v.alpha);
    }
  }
  throw std::invalid_argument("cocl: unknown variant");
}

}  // namespace bdc
