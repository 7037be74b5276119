#include "edmstab/learning_rules.hpp"

#include "edmstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace edmstab {

namespace {

constexpr double kVerificationSpread = 4.0;  // width of the default payoff box [-2, 2]
constexpr double kZeroField = 1e-8;
constexpr double kStorageStep = 1e-5;
constexpr double kStorageSlack = 1e-4;

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

double integrated_base(const LearningRule& rule, double s) {
  const double v = positive_part(s);
  return 0.5 * rule.rate_scale * v * v;
}

}  // namespace

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::smith: return "smith";
    case RuleKind::smith_saturated: return "smith-saturated";
    case RuleKind::bnn: return "bnn";
    case RuleKind::bnn_power: return "bnn-power";
  }
  return "unknown";
}

RuleKind parse_rule_kind(std::string_view name) {
  if (name == "smith") return RuleKind::smith;
  if (name == "smith-saturated") return RuleKind::smith_saturated;
  if (name == "bnn") return RuleKind::bnn;
  if (name == "bnn-power") return RuleKind::bnn_power;
  throw InvalidArgument("unknown learning rule '" + std::string(name) + "'");
}

LearningRule LearningRule::smith(double rate_scale) {
  LearningRule r;
  r.kind = RuleKind::smith;
  r.rate_scale = rate_scale;
  r.tau_bar = r.max_rate(kVerificationSpread);
  return r;
}

LearningRule LearningRule::smith_saturated(double rate_scale, double saturation) {
  LearningRule r;
  r.kind = RuleKind::smith_saturated;
  r.rate_scale = rate_scale;
  r.saturation = saturation;
  r.tau_bar = r.max_rate(kVerificationSpread);
  return r;
}

LearningRule LearningRule::bnn(double rate_scale) {
  LearningRule r;
  r.kind = RuleKind::bnn;
  r.rate_scale = rate_scale;
  r.tau_bar = r.max_rate(kVerificationSpread);
  return r;
}

LearningRule LearningRule::bnn_power(double rate_scale, double exponent) {
  LearningRule r;
  r.kind = RuleKind::bnn_power;
  r.rate_scale = rate_scale;
  r.exponent = exponent;
  r.tau_bar = r.max_rate(kVerificationSpread);
  return r;
}

LearningRule LearningRule::preset(RuleKind kind) {
  switch (kind) {
    case RuleKind::smith: return smith();
    case RuleKind::smith_saturated: return smith_saturated();
    case RuleKind::bnn: return bnn();
    case RuleKind::bnn_power: return bnn_power();
  }
  return smith();
}

void LearningRule::validate() const {
  if (!(rate_scale > 0.0) || !std::isfinite(rate_scale))
    throw InvalidArgument("rate_scale must be positive");
  if (kind == RuleKind::smith_saturated && (!(saturation > 0.0) || !std::isfinite(saturation)))
    throw InvalidArgument("saturation must be positive");
  if (kind == RuleKind::bnn_power && (!(exponent >= 1.0) || !std::isfinite(exponent)))
    throw InvalidArgument("exponent must be >= 1");
  if (!(tau_bar > 0.0)) throw InvalidArgument("tau_bar must be positive");
}

double LearningRule::rho(double v) const {
  if (v <= 0.0) return 0.0;
  switch (kind) {
    case RuleKind::smith:
    case RuleKind::bnn: return rate_scale * v;
    case RuleKind::smith_saturated: return std::min(rate_scale * v, saturation);
    case RuleKind::bnn_power: return rate_scale * std::pow(v, exponent);
  }
  return 0.0;
}

double LearningRule::max_rate(double spread) const { return rho(spread); }

Matrix revision_rates(const LearningRule& rule, const Vector& x, const Vector& p) {
  const auto n = p.size();
  if (x.size() != n) throw InvalidArgument("state and payoff dimensions differ");
  Matrix tau(n, n);
  switch (rule.kind) {
    case RuleKind::smith:
    case RuleKind::smith_saturated:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) tau(i, j) = rule.rho(p(j) - p(i));
      break;
    case RuleKind::bnn:
    case RuleKind::bnn_power: {
      const double average = x.dot(p);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double rate = rule.rho(p(j) - average);
        tau.col(j).setConstant(rate);
      }
      break;
    }
  }
  return tau;
}

Vector edm_field(const LearningRule& rule, const Vector& x, const Vector& p) {
  const Matrix tau = revision_rates(rule, x, p);
  Vector v = tau.transpose() * x;
  v.array() -= x.array() * tau.rowwise().sum().array();
  return v;
}

double storage_value(const LearningRule& rule, const Vector& x, const Vector& p) {
  if (x.size() != p.size()) throw InvalidArgument("state and payoff dimensions differ");
  switch (rule.kind) {
    case RuleKind::smith: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        double inner = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) inner += integrated_base(rule, p(j) - p(i));
        s += x(i) * inner;
      }
      return s;
    }
    case RuleKind::bnn: {
      const double average = x.dot(p);
      double s = 0.0;
      for (Eigen::Index j = 0; j < p.size(); ++j) s += integrated_base(rule, p(j) - average);
      return s;
    }
    default:
      throw UnsupportedRule("no closed-form storage function for rule '" + rule.name() + "'");
  }
}

bool RuleReport::passed() const {
  bool ok = positive_correlation.passed && nash_stationarity.passed && rate_bound.passed;
  if (storage_inequality.evaluated) ok = ok && storage_inequality.passed;
  return ok;
}

RuleReport verify_rule_properties(const LearningRule& rule, int strategies, std::size_t samples,
                                  PayoffBox box, std::uint64_t seed) {
  RuleReport report;
  report.rule = rule;
  report.strategies = strategies;
  report.samples = samples;
  if (strategies < 2 || samples == 0 || !(box.hi > box.lo)) return report;

  const auto n = static_cast<Eigen::Index>(strategies);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> payoff(box.lo, box.hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> direction(-1.0, 1.0);
  std::exponential_distribution<double> gamma1(1.0);

  auto& pc = report.positive_correlation;
  auto& ns = report.nash_stationarity;
  auto& st = report.storage_inequality;
  auto& rb = report.rate_bound;
  pc.evaluated = ns.evaluated = rb.evaluated = true;
  st.evaluated = rule.has_closed_form_storage();
  pc.worst_margin = ns.worst_margin = st.worst_margin = rb.worst_margin =
      std::numeric_limits<double>::infinity();

  auto random_weights = [&](const std::vector<Eigen::Index>& support) {
    Vector x = Vector::Zero(n);
    for (auto i : support) x(i) = gamma1(rng) + 1e-3;
    return Vector(x / x.sum());
  };

  for (std::size_t k = 0; k < samples; ++k) {
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = payoff(rng);
    if (unit(rng) < 0.25) {
      // Exact ties exercise the set-valued best response.
      Eigen::Index top = 0;
      p.maxCoeff(&top);
      p((top + 1) % n) = p(top);
    }

    std::vector<Eigen::Index> support;
    const double mode = unit(rng);
    if (mode < 0.4) {
      for (Eigen::Index i = 0; i < n; ++i) support.push_back(i);
    } else if (mode < 0.7) {
      for (int i : best_response_set(p, 0.0).indices) support.push_back(i);
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (unit(rng) < 0.5) support.push_back(i);
      if (support.empty()) support.push_back(static_cast<Eigen::Index>(unit(rng) * n) % n);
    }
    const Vector x = random_weights(support);
    const Vector v = edm_field(rule, x, p);

    // Positive correlation.
    const double vnorm = v.norm();
    if (vnorm > kZeroField) {
      ++pc.checked;
      const double corr = p.dot(v);
      pc.worst_margin = std::min(pc.worst_margin, corr / vnorm);
      if (!(corr > 0.0)) ++pc.violations;
    }

    // Nash stationarity.
    ++ns.checked;
    const bool at_rest = v.lpNorm<Eigen::Infinity>() <= kZeroField;
    const bool best = is_best_response(x, p, kSimplexTol);
    if (at_rest != best) ++ns.violations;
    if (!best) ns.worst_margin = std::min(ns.worst_margin, v.lpNorm<Eigen::Infinity>());

    // Declared rate bound.
    const Matrix tau = revision_rates(rule, x, p);
    ++rb.checked;
    const double rate_margin = rule.tau_bar - tau.maxCoeff();
    rb.worst_margin = std::min(rb.worst_margin, rate_margin);
    if (rate_margin < 0.0 || tau.minCoeff() < 0.0) ++rb.violations;

    // Storage inequality with the dissipation term relaxed to zero.
    if (st.evaluated) {
      Vector u(n);
      for (Eigen::Index i = 0; i < n; ++i) u(i) = direction(rng);
      const double s0 = storage_value(rule, x, p);
      const double s1 = storage_value(rule, x + kStorageStep * v, p + kStorageStep * u);
      const double rate = (s1 - s0) / kStorageStep;
      const double supply = u.dot(v);
      const double slack = kStorageSlack * (1.0 + u.norm() * vnorm);
      ++st.checked;
      const double margin = supply + slack - rate;
      st.worst_margin = std::min(st.worst_margin, margin);
      // S >= 0, and S vanishes exactly where V does.
      const bool storage_consistent = at_rest ? (s0 >= 0.0 && s0 <= 1e-12) : s0 > 0.0;
      if (margin < 0.0 || !storage_consistent) ++st.violations;
    }
  }

  pc.passed = pc.violations == 0;
  ns.passed = ns.violations == 0;
  rb.passed = rb.violations == 0;
  st.passed = st.evaluated && st.violations == 0;
  return report;
}

}  // namespace edmstab
