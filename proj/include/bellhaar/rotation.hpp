#pragma once

#include <array>
#include <cstddef>
#include <functional>

namespace bellhaar {

class Rng;

/// ZYZ Euler triple. The rotation is Rz(alpha) * Ry(beta) * Rz(gamma) acting
/// on column vectors, with alpha, gamma in [0, 2pi) and beta in [0, pi].
struct EulerAngles
{
  double alpha{0.0};
  double beta{0.0};
  double gamma{0.0};

  bool in_range() const;
};

/// Element of SO(3), stored as a unit quaternion (w, x, y, z).
///
/// q and -q denote the same rotation: operator== and std::hash treat them
/// as equal. All factory functions and group operations return values whose
/// squared norm is within 1e-12 of one.
class Rotation
{
public:
  /// Identity.
  Rotation() = default;

  /// Normalizes the given components. Throws std::invalid_argument for a
  /// zero or non-finite quaternion.
  static Rotation from_quaternion(double w, double x, double y, double z);

  /// Right-handed rotation by `angle` radians about `axis` (need not be unit).
  static Rotation from_axis_angle(const std::array<double, 3>& axis, double angle);

  static Rotation about_x(double angle);
  static Rotation about_y(double angle);
  static Rotation about_z(double angle);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  /// Row-major 3x3 matrix acting on column vectors.
  std::array<double, 9> matrix() const;

  std::array<double, 3> apply(const std::array<double, 3>& v) const;

  /// Same rotation with the sign convention w > 0 (ties broken on x, y, z).
  Rotation canonical() const;

  friend bool operator==(const Rotation& a, const Rotation& b);

private:
  Rotation(double w, double x, double y, double z, bool /*trusted*/)
      : w_(w), x_(x), y_(y), z_(z)
  {
  }

  static Rotation renormalized(double w, double x, double y, double z);

  double w_{1.0};
  double x_{0.0};
  double y_{0.0};
  double z_{0.0};

  friend Rotation compose(const Rotation&, const Rotation&);
  friend Rotation inverse(const Rotation&);
};

/// "Apply `first`, then `second`": the function composition second o first.
Rotation compose(const Rotation& first, const Rotation& second);

Rotation inverse(const Rotation& r);

/// The rotation carrying `from` onto `to`, i.e. to o from^-1, so that
/// compose(from, relative_rotation(from, to)) == to.
Rotation relative_rotation(const Rotation& from, const Rotation& to);

/// Total rotation angle in [0, pi].
double rotation_angle(const Rotation& r);

/// Angle of the relative rotation between a and b; zero iff a == b.
double geodesic_distance(const Rotation& a, const Rotation& b);

/// ZYZ decomposition. Gimbal-degenerate rotations (beta = 0 or pi) report
/// gamma = 0.
EulerAngles to_euler(const Rotation& r);

Rotation from_euler(const EulerAngles& e);

/// Haar-uniform draw: four standard normals normalized to a unit quaternion.
Rotation haar_sample(Rng& rng);

/// Wraps an angle into [0, 2pi).
double wrap_two_pi(double angle);

}  // namespace bellhaar

template <>
struct std::hash<bellhaar::Rotation>
{
  std::size_t operator()(const bellhaar::Rotation& r) const noexcept;
};
