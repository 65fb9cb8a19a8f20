#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmap {

// Row-major dense storage for per-pixel maps. Pixel (col, row) lives at
// values(row, col), i.e. flat index row * width + col.
template <class Scalar>
using Array2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Array2d = Array2<double>;
using Array2f = Array2<float>;
using Array2u8 = Array2<std::uint8_t>;
using Array2i = Array2<std::int32_t>;

using Index = std::int64_t;
using Vec2 = Eigen::Vector2d;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyInstance : Error {
  using Error::Error;
};
struct InvalidAlpha : Error {
  using Error::Error;
};
struct InvalidSchedule : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct DegeneratePolygon : Error {
  using Error::Error;
};
struct PlacementFailure : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};
struct BadMagic : IoError {
  using IoError::IoError;
};
struct VersionUnsupported : IoError {
  using IoError::IoError;
};
struct TruncatedPayload : IoError {
  using IoError::IoError;
};
struct NonFiniteValue : IoError {
  using IoError::IoError;
};
struct ValueOutOfRange : IoError {
  using IoError::IoError;
};

// Image domain. A pixel (col, row) is sampled at its center (col+0.5, row+0.5),
// x right, y down, origin at the top-left corner.
struct Grid {
  int width = 0;
  int height = 0;

  Grid() = default;
  Grid(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw Error("Grid: dimensions must be >= 1");
  }

  Index size() const { return static_cast<Index>(width) * height; }
  bool empty() const { return width <= 0 || height <= 0; }

  bool contains(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  Index index_of(int col, int row) const {
    return static_cast<Index>(row) * width + col;
  }
  int col_of(Index p) const { return static_cast<int>(p % width); }
  int row_of(Index p) const { return static_cast<int>(p / width); }
  Vec2 center(Index p) const {
    return Vec2(col_of(p) + 0.5, row_of(p) + 0.5);
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// One candidate text instance: a 4-connected set of pixels, stored as sorted
// row-major flat indices.
struct InstanceMask {
  Grid grid;
  int label = 0;
  std::vector<Index> pixels;

  bool empty() const { return pixels.empty(); }
  Index area() const { return static_cast<Index>(pixels.size()); }
};

// Rasterizes a mask into a 0/1 byte image.
Array2u8 mask_to_image(const InstanceMask& mask);

}  // namespace pmap
