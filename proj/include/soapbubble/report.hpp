#pragma once

// Report emission: deterministic JSON documents and the ellipsoid sweep CSV.

#include "soapbubble/symmetry_fit.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace soapbubble {

/// Pretty-printed JSON with a trailing newline; key order is sorted, so equal
/// inputs give byte-identical text.
std::string dump_report(const nlohmann::json& document);

/// Writes text to a file; failures raise InputError.
void write_text(const std::filesystem::path& path, const std::string& text);

struct SweepRow {
  double t = 0.0;
  double osc = 0.0;
  double re_minus_ri = 0.0;
  double ratio = 0.0;
  double rho_hat = 0.0;
  double defect = 0.0;
  bool radial_map_ok = false;
  std::size_t multi_hit_rays = 0;
  bool ok = false;
  std::string error;  // stage failure for flagged rows
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0.0;      // least-squares slope of log(r_e - r_i) against log(osc)
  double intercept = 0.0;
  double ratio_spread = 0.0;  // (max ratio - min ratio) / min ratio
  std::size_t fitted = 0;     // rows entering the fit
};

/// Ellipsoids with semi-axes (1, 1, 1 + t) for `steps` values of t spread
/// evenly over [t_min, t_max].
SweepResult sweep_ellipsoid(double t_min, double t_max, std::size_t steps, const StabilityOptions& options = {});

/// Least-squares line through (log x, log y); pairs with non-positive entries are ignored.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y, std::size_t* used = nullptr);

std::string sweep_csv(const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

}  // namespace soapbubble
