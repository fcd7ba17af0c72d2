#pragma once

// Explicit constants of the stability estimate evaluated for given (n, rho, |S|).
// Several of them are astronomically large or small; every such quantity is
// carried in log10 form next to its (possibly saturated) double value.

#include <json.hpp>

#include <string>
#include <vector>

namespace soapbubble {

struct LedgerValue {
  double value = 0.0;   // 0 or inf when out of double range
  double log10 = 0.0;
  bool saturated = false;

  static LedgerValue from_log10(double lg);
  static LedgerValue from_value(double v);
};

struct ConstantsInput {
  int n = 2;
  double rho = 1.0;
  double area = 0.0;
  double K1 = 1.0;
  double K2 = 1.0;
  double K3 = 1.0;
  bool k_user_supplied = false;
};

struct ConstantsReport {
  ConstantsInput input;
  double omega_n = 0.0;
  double delta = 0.0;
  double L = 0.0;
  double r0 = 0.0;
  double eps0 = 0.0;
  LedgerValue N0;
  double eps1 = 0.0;
  LedgerValue C1;
  LedgerValue eps2;
  LedgerValue eps3;
  LedgerValue eps;
  LedgerValue C;
  double diam_bound = 0.0;   // |S| 2^{2n} / (omega_n rho^n), as printed: a count of rho/2 arcs
  double diam_length = 0.0;  // the same count times the arc length rho/2
  LedgerValue eps_corollary;
  double M = 0.0;  // gradient bound of the graph patches at |x| = rho/2
  std::vector<std::string> notes;
};

ConstantsReport compute_constants(const ConstantsInput& in);

struct Smallness {
  bool applicable = false;
  double margin = 0.0;
};

Smallness check_smallness(double osc, const ConstantsReport& report);

/// 1 + floor(log_{1-eps0}(1/2)), evaluated without forming (1 - eps0).
double harnack_count(double eps0);

nlohmann::json to_json(const ConstantsReport& report);
std::string constants_table(const ConstantsReport& report);

}  // namespace soapbubble
