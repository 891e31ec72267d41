#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace synthkit {

/// Voxel counts along x, y, z. x is the fastest-varying axis in memory.
using Dims = std::array<int, 3>;

/// Physical triple in millimetres, or a continuous voxel coordinate.
using Vec3 = std::array<double, 3>;

using Label = std::int32_t;

enum class Interp { nearest, trilinear };

inline std::size_t voxel_count(const Dims& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
         static_cast<std::size_t>(d[2]);
}

/**
 * Dense 3D grid with physical voxel spacing.
 *
 * Voxel (i, j, k) has its centre at ((i + 0.5) * spacing[0], ...) in the
 * volume's own frame. Two grids covering the same field of view are aligned on
 * their field-of-view centres, which is the convention every resampling and
 * warping routine in this library follows.
 */
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;

  Volume(Dims dims, Vec3 spacing, T fill = T{})
      : dims_(dims), spacing_(spacing), data_(checked_count(dims, spacing), fill) {}

  Volume(Dims dims, Vec3 spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    if (data_.size() != checked_count(dims, spacing)) {
      throw std::invalid_argument("Volume: data length " + std::to_string(data_.size()) +
                                  " does not match dims");
    }
  }

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

  T& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  /// Physical extent of the field of view in mm.
  Vec3 extent() const {
    return {dims_[0] * spacing_[0], dims_[1] * spacing_[1], dims_[2] * spacing_[2]};
  }

  bool same_grid(const Volume<T>& other) const {
    return dims_ == other.dims_ && spacing_ == other.spacing_;
  }
  template <typename U>
  bool same_dims(const Volume<U>& other) const {
    return dims_ == other.dims();
  }

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_count(const Dims& dims, const Vec3& spacing) {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) throw std::invalid_argument("Volume: dims must be >= 1 on every axis");
      if (!(spacing[a] > 0.0)) throw std::invalid_argument("Volume: spacing must be > 0 on every axis");
    }
    return voxel_count(dims);
  }

  Dims dims_{1, 1, 1};
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::vector<T> data_ = std::vector<T>(1);
};

/// Intensity volume.
using Image = Volume<float>;
/// Integer label volume.
using LabelMap = Volume<Label>;

}  // namespace synthkit
