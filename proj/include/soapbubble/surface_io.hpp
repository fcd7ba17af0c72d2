#pragma once

#include "soapbubble/surface.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace soapbubble {

/// Builds a surface from a JSON document. Relative point-cloud paths are
/// resolved against `base_dir`.
std::unique_ptr<Surface> surface_from_json(const nlohmann::json& spec,
                                           const std::filesystem::path& base_dir = {});

/// Reads a surface spec file; malformed content raises InputError.
std::unique_ptr<Surface> load_surface(const std::filesystem::path& spec_path);

/// Reads `x,y,z,nx,ny,nz` or `x,y,nx,ny` CSV samples.
std::unique_ptr<PointCloudSurface> load_point_cloud(const std::filesystem::path& csv_path, int fit_neighbors = 20);

void write_point_cloud(const std::filesystem::path& csv_path, const std::vector<Vec>& points,
                       const std::vector<Vec>& normals);

}  // namespace soapbubble
