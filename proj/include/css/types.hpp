#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace css {

using Grid = Eigen::MatrixXd;
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Base for all library errors; the CLI maps subclasses to exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct BehindCamera : Error { using Error::Error; };
struct NonPositiveDepth : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct EmptyMatches : Error { using Error::Error; };
struct DisconnectedGraph : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };
struct TooFewPoints : Error { using Error::Error; };
struct EmptySplatSet : Error { using Error::Error; };
struct DegenerateMap : Error { using Error::Error; };
struct ImageTooSmall : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct MissingStageOutput : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Planar RGB image, values nominally in [0,1]; row = pixel y, col = pixel x.
struct Image {
  Grid r, g, b;

  Image() = default;
  Image(int height, int width, const Vec3& fill = Vec3::Zero())
      : r(Grid::Constant(height, width, fill.x())),
        g(Grid::Constant(height, width, fill.y())),
        b(Grid::Constant(height, width, fill.z())) {}

  int height() const { return static_cast<int>(r.rows()); }
  int width() const { return static_cast<int>(r.cols()); }

  Vec3 at(int row, int col) const {
    return Vec3(r(row, col), g(row, col), b(row, col));
  }
  void set(int row, int col, const Vec3& v) {
    r(row, col) = v.x();
    g(row, col) = v.y();
    b(row, col) = v.z();
  }
};

}  // namespace css
