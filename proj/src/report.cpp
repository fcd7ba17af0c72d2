#include "soapbubble/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace soapbubble {

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string dump_report(const nlohmann::json& document) { return document.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y, std::size_t* used) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (used) *used = n;
  if (n < 2) return {std::nan(""), std::nan("")};
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) return {std::nan(""), std::nan("")};
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n};
}

SweepResult sweep_ellipsoid(double t_min, double t_max, std::size_t steps, const StabilityOptions& options) {
  if (!(t_min > 0.0) || !(t_max >= t_min)) throw InputError("sweep needs 0 < t_min <= t_max");
  if (steps == 0) throw InputError("sweep needs at least one step");
  if (t_min == t_max) steps = 1;
  SweepResult result;
  for (std::size_t k = 0; k < steps; ++k) {
    SweepRow row;
    row.t = steps == 1 ? t_min : t_min + (t_max - t_min) * double(k) / double(steps - 1);
    try {
      const Ellipsoid e(make_vec({1.0, 1.0, 1.0 + row.t}));
      const StabilityReport rep = stability_ratio(e, options);
      row.osc = rep.osc.osc;
      row.re_minus_ri = rep.r_e - rep.r_i;
      row.ratio = rep.ratio_indeterminate ? std::nan("") : rep.ratio;
      row.rho_hat = rep.rho.rho;
      row.defect = rep.reflection_defect;
      row.radial_map_ok = rep.radial_map.ok;
      row.multi_hit_rays = rep.radial_map.multi_hit_rays;
      row.ok = !rep.ratio_indeterminate;
      if (!row.ok) row.error = "osc below noise floor";
    } catch (const NumericalError& e) {
      row.error = e.what();
    }
    result.rows.push_back(row);
  }
  std::vector<double> osc, gap, ratios;
  for (const auto& r : result.rows) {
    if (!r.ok) continue;
    osc.push_back(r.osc);
    gap.push_back(r.re_minus_ri);
    ratios.push_back(r.ratio);
  }
  std::tie(result.slope, result.intercept) = loglog_fit(osc, gap, &result.fitted);
  if (!ratios.empty()) {
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    result.ratio_spread = (*hi - *lo) / *lo;
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "t,osc,re_minus_ri,ratio,rho_hat,defect,status\n";
  for (const auto& r : result.rows) {
    std::string status = r.ok ? "ok" : "flagged: " + r.error;
    std::replace(status.begin(), status.end(), ',', ';');
    out += number(r.t) + "," + number(r.osc) + "," + number(r.re_minus_ri) + "," + number(r.ratio) + "," +
           number(r.rho_hat) + "," + number(r.defect) + "," + status + "\n";
  }
  out += "\nfit,value\n";
  out += "slope," + number(result.slope) + "\n";
  out += "intercept," + number(result.intercept) + "\n";
  out += "ratio_spread," + number(result.ratio_spread) + "\n";
  out += "fitted_rows," + std::to_string(result.fitted) + "\n";
  return out;
}

nlohmann::json to_json(const SweepResult& result) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"t", r.t}, {"osc", num(r.osc)}, {"re_minus_ri", num(r.re_minus_ri)}, {"ratio", num(r.ratio)},
                    {"rho_hat", num(r.rho_hat)}, {"defect", num(r.defect)},
                    {"radial_map_ok", r.radial_map_ok}, {"multi_hit_rays", r.multi_hit_rays}, {"ok", r.ok}, {"error", r.error}});
  }
  return {{"rows", rows},
          {"slope", num(result.slope)},
          {"intercept", num(result.intercept)},
          {"ratio_spread", num(result.ratio_spread)},
          {"fitted_rows", result.fitted}};
}

}  // namespace soapbubble
