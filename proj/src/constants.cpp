#include "soapbubble/constants.hpp"

#include "soapbubble/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace soapbubble {

namespace {

constexpr double kMaxLog = 307.0;
constexpr double kMinLog = -307.0;

}  // namespace

LedgerValue LedgerValue::from_log10(double lg) {
  LedgerValue v;
  v.log10 = lg;
  if (lg > kMaxLog) {
    v.value = std::numeric_limits<double>::infinity();
    v.saturated = true;
  } else if (lg < kMinLog) {
    v.value = 0.0;
    v.saturated = true;
  } else {
    v.value = std::pow(10.0, lg);
  }
  return v;
}

LedgerValue LedgerValue::from_value(double x) {
  LedgerValue v;
  v.value = x;
  v.log10 = std::log10(x);
  return v;
}

double harnack_count(double eps0) {
  if (!(eps0 > 0.0) || !(eps0 < 1.0)) throw InputError("eps0 must lie in (0, 1)");
  return 1.0 + std::floor(std::log(2.0) / -std::log1p(-eps0));
}

ConstantsReport compute_constants(const ConstantsInput& in) {
  if (in.n < 1) throw InputError("dimension n must be at least 1");
  for (double v : {in.rho, in.area, in.K1, in.K2, in.K3}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("rho, area and K1..K3 must be positive and finite");
  }
  ConstantsReport r;
  r.input = in;
  const int n = in.n;
  const double rho = in.rho;
  if (n > 2) r.notes.push_back("n > 2 is outside the tested range");
  if (!in.k_user_supplied) r.notes.push_back("K1, K2, K3 are placeholders (default 1); C and eps are not the theorem's constants");
  r.notes.push_back("eps2 taken with equality in its defining inequality");
  r.notes.push_back("M = 1/sqrt(3): graph gradient bound at |x| = rho/2, display only");

  r.omega_n = unit_ball_volume(n);
  r.delta = std::min(rho / 64.0, rho / (8.0 * std::sqrt(static_cast<double>(n))));
  r.L = in.area * std::pow(2.0, n) / (r.omega_n * std::pow(r.delta, n));
  const double s = std::sin(r.delta / (2.0 * rho));
  r.r0 = rho * s;
  r.eps0 = std::min(0.5, rho / (16.0 * r.L) * s);
  const double n0 = harnack_count(r.eps0);
  r.N0.value = n0;
  r.N0.log10 = std::log10(n0);
  r.N0.saturated = n0 > 9007199254740992.0;  // beyond exact integers

  r.eps1 = 1.0 / (1.0 + 1.25 * in.K1 * in.K1);
  const double c1_base = (1.0 + r.r0 * std::sqrt(5.0)) * in.K1 + 1.0;
  r.C1 = LedgerValue::from_log10((n0 + 1.0) * std::log10(c1_base));
  r.eps2 = LedgerValue::from_log10(-std::log10(64.0) - r.C1.log10);
  r.eps3 = LedgerValue::from_log10(std::log10(r.delta / rho) - r.C1.log10);
  const double eps_lg = std::min({std::log10(r.eps0), std::log10(r.eps1), r.eps2.log10, r.eps3.log10});
  r.eps = LedgerValue::from_log10(eps_lg);
  r.C = LedgerValue::from_log10(std::log10(1.25) + r.C1.log10 + std::log10(in.K1) + std::log10(in.K2) +
                                std::log10(in.K3));
  r.diam_bound = in.area * std::pow(2.0, 2 * n) / (r.omega_n * std::pow(rho, n));
  r.diam_length = 0.5 * rho * r.diam_bound;
  r.notes.push_back("diam_bound is scale-free (an arc count); diam_length = (rho/2) diam_bound carries length units");
  r.eps_corollary = LedgerValue::from_log10(std::min(eps_lg, std::log10(rho / 2.0) - r.C.log10));
  r.M = 1.0 / std::sqrt(3.0);
  return r;
}

Smallness check_smallness(double osc, const ConstantsReport& report) {
  if (!(osc >= 0.0)) throw InputError("osc must be non-negative");
  Smallness s;
  if (osc == 0.0) {
    s.applicable = true;
  } else {
    s.applicable = report.eps.saturated ? std::log10(osc) <= report.eps.log10 : osc <= report.eps.value;
  }
  s.margin = report.eps.value - osc;
  return s;
}

namespace {

nlohmann::json ledger_json(const LedgerValue& v) {
  nlohmann::json j{{"log10", v.log10}, {"saturated", v.saturated}};
  if (std::isfinite(v.value)) {
    j["value"] = v.value;
  } else {
    j["value"] = nullptr;
  }
  return j;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string ledger_cell(const LedgerValue& v) {
  if (v.saturated) return "10^" + fmt("%.6f", v.log10) + " (saturated)";
  return fmt("%.10g", v.value) + "  (log10 " + fmt("%.6f", v.log10) + ")";
}

}  // namespace

nlohmann::json to_json(const ConstantsReport& r) {
  return {
      {"n", r.input.n},
      {"rho", r.input.rho},
      {"area", r.input.area},
      {"K1", r.input.K1},
      {"K2", r.input.K2},
      {"K3", r.input.K3},
      {"K_placeholder", !r.input.k_user_supplied},
      {"omega_n", r.omega_n},
      {"delta", r.delta},
      {"L", r.L},
      {"r0", r.r0},
      {"eps0", r.eps0},
      {"N0", ledger_json(r.N0)},
      {"eps1", r.eps1},
      {"C1", ledger_json(r.C1)},
      {"eps2", ledger_json(r.eps2)},
      {"eps3", ledger_json(r.eps3)},
      {"eps", ledger_json(r.eps)},
      {"C", ledger_json(r.C)},
      {"diam_bound", r.diam_bound},
      {"diam_length", r.diam_length},
      {"eps_corollary", ledger_json(r.eps_corollary)},
      {"M", r.M},
      {"notes", r.notes},
  };
}

std::string constants_table(const ConstantsReport& r) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& value) {
    os << "  " << name << std::string(name.size() < 14 ? 14 - name.size() : 1, ' ') << value << '\n';
  };
  row("n", std::to_string(r.input.n));
  row("rho", fmt("%.10g", r.input.rho));
  row("|S|", fmt("%.10g", r.input.area));
  row("K1 K2 K3", fmt("%g", r.input.K1) + " " + fmt("%g", r.input.K2) + " " + fmt("%g", r.input.K3) +
                      (r.input.k_user_supplied ? "" : "  [placeholder]"));
  row("omega_n", fmt("%.10g", r.omega_n));
  row("delta", fmt("%.10g", r.delta));
  row("L", fmt("%.10g", r.L));
  row("r0", fmt("%.10g", r.r0));
  row("eps0", fmt("%.10g", r.eps0));
  row("N0", ledger_cell(r.N0));
  row("eps1", fmt("%.10g", r.eps1));
  row("C1", ledger_cell(r.C1));
  row("eps2", ledger_cell(r.eps2));
  row("eps3", ledger_cell(r.eps3));
  row("eps", ledger_cell(r.eps));
  row("C", ledger_cell(r.C));
  row("diam_bound", fmt("%.10g", r.diam_bound));
  row("diam_length", fmt("%.10g", r.diam_length));
  row("eps_corollary", ledger_cell(r.eps_corollary));
  row("M", fmt("%.10g", r.M));
  for (const auto& note : r.notes) os << "  note: " << note << '\n';
  return os.str();
}

}  // namespace soapbubble
