#pragma once

#include "edmstab/simplex.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace edmstab {

/// Revision protocol families. smith and smith-saturated are impartial
/// pairwise comparison rules (tau_ij = rho(p_j - p_i)); bnn and bnn-power are
/// separable excess payoff target rules (tau_ij = rho(p_j - x'p)).
enum class RuleKind { smith, smith_saturated, bnn, bnn_power };

std::string_view to_string(RuleKind kind);
/// Accepts "smith", "smith-saturated", "bnn", "bnn-power". Throws InvalidArgument.
RuleKind parse_rule_kind(std::string_view name);

struct LearningRule {
  RuleKind kind = RuleKind::smith;
  double rate_scale = 1.0;   // lambda
  double saturation = 0.05;  // kappa, smith-saturated only
  double exponent = 1.0;     // m >= 1, bnn-power only
  double tau_bar = 0.0;      // declared upper bound on the revision rates

  static LearningRule smith(double rate_scale = 1.0);
  static LearningRule smith_saturated(double rate_scale = 5.0, double saturation = 0.05);
  static LearningRule bnn(double rate_scale = 5.0);
  static LearningRule bnn_power(double rate_scale = 20.0, double exponent = 1.2);
  /// Library defaults for a given kind.
  static LearningRule preset(RuleKind kind);

  /// Throws InvalidArgument naming the offending field.
  void validate() const;

  /// Base function: zero for v <= 0 and positive for v > 0.
  double rho(double v) const;

  /// Largest rate produced for payoff differences up to `spread`.
  double max_rate(double spread) const;

  bool has_closed_form_storage() const {
    return kind == RuleKind::smith || kind == RuleKind::bnn;
  }

  std::string name() const { return std::string(to_string(kind)); }
};

/// tau(x, p): entry (i, j) is the rate at which i-strategists switch to j.
Matrix revision_rates(const LearningRule& rule, const Vector& x, const Vector& p);

/// Mean dynamics V_i = sum_j (x_j tau_ji - x_i tau_ij).
Vector edm_field(const LearningRule& rule, const Vector& x, const Vector& p);

/// Storage function of the mean dynamics with quadratic integrated base
/// function Phi(s) = lambda [s]_+^2 / 2:
///   smith: sum_i x_i sum_j Phi(p_j - p_i)
///   bnn:   sum_j Phi(p_j - x'p)
/// Throws UnsupportedRule for the saturated and power variants.
double storage_value(const LearningRule& rule, const Vector& x, const Vector& p);

struct PayoffBox {
  double lo = -2.0;
  double hi = 2.0;
};

struct PropertyCheck {
  bool evaluated = false;
  bool passed = false;
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// Smallest observed margin; negative means violated. Interpretation is
  /// per property (see verify_rule_properties).
  double worst_margin = 0.0;
};

struct RuleReport {
  LearningRule rule;
  int strategies = 0;
  std::size_t samples = 0;
  PropertyCheck positive_correlation;
  PropertyCheck nash_stationarity;
  PropertyCheck storage_inequality;
  PropertyCheck rate_bound;

  /// PC and NS always; the storage inequality only where it was evaluated.
  bool passed() const;
};

/// Monte-Carlo certification of positive correlation, Nash stationarity and
/// (for rules with closed-form storage) the storage inequality
/// dS/dt <= u'V, plus the declared rate bound tau_bar.
///
/// Margins: PC reports min p'V / |V| over moving states; NS reports the
/// number of mismatches through `violations` and the smallest |V|inf among
/// non-best-response samples as the margin; the storage check reports
/// min (u'V + slack - dS/dt); the rate bound reports min (tau_bar - tau_ij).
/// Failures are reported, never thrown.
RuleReport verify_rule_properties(const LearningRule& rule, int strategies,
                                  std::size_t samples, PayoffBox box, std::uint64_t seed);

}  // namespace edmstab
