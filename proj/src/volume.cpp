#include "tnet/volume.hpp"

#include "tnet/binary_io.hpp"
#include "tnet/errors.hpp"

namespace tnet {

namespace {
constexpr char kMagic[4] = {'M', 'V', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;
// Caps nx*ny*nz so a corrupt header cannot trigger a huge allocation.
constexpr std::uint64_t kMaxVoxels = 1ULL << 30;
}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw ContractViolation("unknown split");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataFormatError("unknown split: \"" + s + "\"");
}

int Volume::extent(int axis) const {
  switch (axis) {
    case 0: return nx;
    case 1: return ny;
    case 2: return nz;
    default: throw ContractViolation("axis must be 0, 1 or 2");
  }
}

void Volume::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) {
    throw ContractViolation("volume dims must be >= 1");
  }
  const auto expected = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                        static_cast<std::size_t>(nz);
  if (voxels.size() != expected) {
    throw ContractViolation("voxel count does not match dims");
  }
}

void write_volume(const Volume& v, const std::filesystem::path& path) {
  v.validate();
  BinaryWriter w(path);
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(v.nx));
  w.u32(static_cast<std::uint32_t>(v.ny));
  w.u32(static_cast<std::uint32_t>(v.nz));
  w.bytes(v.voxels.data(), v.voxels.size() * sizeof(float));
  w.close();
}

Volume read_volume(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    r.fail("unsupported MVOL version " + std::to_string(version));
  }
  Volume v;
  const std::uint32_t nx = r.u32();
  const std::uint32_t ny = r.u32();
  const std::uint32_t nz = r.u32();
  if (nx == 0 || ny == 0 || nz == 0) r.fail("zero dimension");
  const std::uint64_t count =
      static_cast<std::uint64_t>(nx) * ny * nz;
  if (count > kMaxVoxels) r.fail("dimension overflow");
  if (r.remaining() != count * sizeof(float)) {
    r.fail("payload size " + std::to_string(r.remaining()) + " bytes, expected " +
           std::to_string(count * sizeof(float)));
  }
  v.nx = static_cast<int>(nx);
  v.ny = static_cast<int>(ny);
  v.nz = static_cast<int>(nz);
  v.voxels.resize(count);
  r.bytes(v.voxels.data(), count * sizeof(float));
  r.expect_eof();
  v.id = path.stem().string();
  return v;
}

Eigen::MatrixXd extract_slice(const Volume& v, int axis, int index) {
  if (axis < 0 || axis > 2) throw ContractViolation("axis must be 0, 1 or 2");
  if (index < 0 || index >= v.extent(axis)) {
    throw ContractViolation("slice index out of range");
  }
  Eigen::MatrixXd img;
  switch (axis) {
    case 0:
      img.resize(v.ny, v.nz);
      for (int k = 0; k < v.nz; ++k)
        for (int j = 0; j < v.ny; ++j) img(j, k) = v.at(index, j, k);
      break;
    case 1:
      img.resize(v.nx, v.nz);
      for (int k = 0; k < v.nz; ++k)
        for (int i = 0; i < v.nx; ++i) img(i, k) = v.at(i, index, k);
      break;
    default:
      img.resize(v.nx, v.ny);
      for (int j = 0; j < v.ny; ++j)
        for (int i = 0; i < v.nx; ++i) img(i, j) = v.at(i, j, index);
      break;
  }
  return img;
}

}  // namespace tnet
