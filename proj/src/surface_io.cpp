#include "soapbubble/surface_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace soapbubble {

namespace {

Vec vec_field(const nlohmann::json& spec, const char* key) {
  const auto& a = spec.at(key);
  if (!a.is_array() || a.size() < 2 || a.size() > kMaxDim)
    throw InputError(std::string("field '") + key + "' must be an array of 2 or 3 numbers");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw InputError(std::string("field '") + key + "' must contain numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

std::optional<Vec> optional_vec(const nlohmann::json& spec, const char* key) {
  if (!spec.contains(key)) return std::nullopt;
  return vec_field(spec, key);
}

double number_field(const nlohmann::json& spec, const char* key) {
  const auto& v = spec.at(key);
  if (!v.is_number()) throw InputError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

}  // namespace

std::unique_ptr<Surface> surface_from_json(const nlohmann::json& spec, const std::filesystem::path& base_dir) {
  try {
    if (!spec.is_object()) throw InputError("surface spec must be a JSON object");
    const std::string type = spec.at("type").get<std::string>();
    if (type == "sphere") {
      const Vec c = spec.contains("center") ? vec_field(spec, "center") : Vec::Zero(3);
      return std::make_unique<Sphere>(c, spec.contains("radius") ? number_field(spec, "radius") : 1.0);
    }
    if (type == "ellipsoid") {
      std::optional<Mat> rot;
      if (spec.contains("rotation")) {
        const auto& rows = spec.at("rotation");
        const Vec axes = vec_field(spec, "semi_axes");
        const auto d = axes.size();
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != d) throw InputError("rotation must be a d x d matrix");
        Mat r(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
          const auto& row = rows[static_cast<std::size_t>(i)];
          if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) throw InputError("rotation must be a d x d matrix");
          for (Eigen::Index j = 0; j < d; ++j) r(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
        rot = r;
      }
      return std::make_unique<Ellipsoid>(vec_field(spec, "semi_axes"), optional_vec(spec, "center"), rot);
    }
    if (type == "radial_graph") {
      const std::string basis = spec.value("basis", std::string("real_spherical_harmonics"));
      RadialGraph::Basis b;
      if (basis == "real_spherical_harmonics") {
        b = RadialGraph::Basis::SphericalHarmonics;
      } else if (basis == "fourier") {
        b = RadialGraph::Basis::Fourier;
      } else {
        throw InputError("unknown radial_graph basis '" + basis + "'");
      }
      std::vector<RadialGraph::Term> terms;
      const auto& coeffs = spec.contains("coeffs") ? spec.at("coeffs") : nlohmann::json::array();
      if (!coeffs.is_array()) throw InputError("coeffs must be an array");
      for (const auto& c : coeffs) {
        if (!c.is_array()) throw InputError("each coefficient must be an array");
        RadialGraph::Term t;
        if (b == RadialGraph::Basis::Fourier) {
          if (c.size() != 2) throw InputError("fourier coefficients are [m, value]");
          t.m = c[0].get<int>();
          t.value = c[1].get<double>();
        } else {
          if (c.size() != 3) throw InputError("spherical harmonic coefficients are [l, m, value]");
          t.l = c[0].get<int>();
          t.m = c[1].get<int>();
          t.value = c[2].get<double>();
        }
        terms.push_back(t);
      }
      return std::make_unique<RadialGraph>(b, std::move(terms), spec.value("radius", 1.0), optional_vec(spec, "center"));
    }
    if (type == "point_cloud") {
      std::filesystem::path p = spec.at("path").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      return load_point_cloud(p, spec.value("k", 20));
    }
    throw InputError("unknown surface type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed surface spec: ") + e.what());
  }
}

std::unique_ptr<Surface> load_surface(const std::filesystem::path& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw InputError("cannot open surface spec '" + spec_path.string() + "'");
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cannot parse surface spec '" + spec_path.string() + "': " + e.what());
  }
  return surface_from_json(spec, spec_path.parent_path());
}

std::unique_ptr<PointCloudSurface> load_point_cloud(const std::filesystem::path& csv_path, int fit_neighbors) {
  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open point cloud '" + csv_path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("point cloud file is empty");
  const auto header = split_csv(line);
  int dim;
  if (header == std::vector<std::string>{"x", "y", "z", "nx", "ny", "nz"}) {
    dim = 3;
  } else if (header == std::vector<std::string>{"x", "y", "nx", "ny"}) {
    dim = 2;
  } else {
    throw InputError("point cloud header must be x,y,z,nx,ny,nz or x,y,nx,ny");
  }
  std::vector<Vec> points, normals;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 2 * dim)
      throw InputError("point cloud row " + std::to_string(row) + " has the wrong number of columns");
    Vec p(dim), n(dim);
    for (int i = 0; i < 2 * dim; ++i) {
      double v = 0.0;
      const auto& s = cells[static_cast<std::size_t>(i)];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("point cloud row " + std::to_string(row) + " has a non-numeric value");
      (i < dim ? p[i] : n[i - dim]) = v;
    }
    points.push_back(p);
    normals.push_back(n);
  }
  return std::make_unique<PointCloudSurface>(std::move(points), std::move(normals), fit_neighbors);
}

void write_point_cloud(const std::filesystem::path& csv_path, const std::vector<Vec>& points,
                       const std::vector<Vec>& normals) {
  std::ofstream out(csv_path);
  if (!out) throw InputError("cannot write point cloud '" + csv_path.string() + "'");
  const int dim = points.empty() ? 3 : static_cast<int>(points.front().size());
  out << (dim == 3 ? "x,y,z,nx,ny,nz\n" : "x,y,nx,ny\n");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < dim; ++k) out << points[i][k] << ',';
    for (int k = 0; k < dim; ++k) out << normals[i][k] << (k + 1 < dim ? ',' : '\n');
  }
}

}  // namespace soapbubble
