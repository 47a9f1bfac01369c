#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tnet {

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// A 3D scalar intensity grid; the unit of classification. Voxels are stored
// in x-fastest order, matching the MVOL file layout.
struct Volume {
  std::string id;
  int nx = 0, ny = 0, nz = 0;
  std::vector<float> voxels;
  std::string label;
  Split split = Split::train;

  float& at(int x, int y, int z) {
    return voxels[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(nx) *
                      (static_cast<std::size_t>(y) +
                       static_cast<std::size_t>(ny) * static_cast<std::size_t>(z))];
  }
  float at(int x, int y, int z) const {
    return voxels[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(nx) *
                      (static_cast<std::size_t>(y) +
                       static_cast<std::size_t>(ny) * static_cast<std::size_t>(z))];
  }
  int extent(int axis) const;
  void validate() const;
};

// MVOL, little-endian: magic "MVOL", u32 version=1, u32 nx, u32 ny, u32 nz,
// then nx*ny*nz 32-bit floats in x-fastest order.
void write_volume(const Volume& v, const std::filesystem::path& path);
Volume read_volume(const std::filesystem::path& path);

// Raw (unnormalized) slice perpendicular to `axis` at position `index`.
// axis 0 -> (ny x nz) image, axis 1 -> (nx x nz), axis 2 -> (nx x ny).
Eigen::MatrixXd extract_slice(const Volume& v, int axis, int index);

}  // namespace tnet
