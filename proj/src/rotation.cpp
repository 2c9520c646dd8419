#include "bellhaar/rotation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bellhaar/random.hpp"

namespace bellhaar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNormDrift = 1e-12;
constexpr double kGimbalEps = 1e-15;

// Quadrant-correct atan2 built on atan. glibc's atan2 costs about twice as
// much, and to_euler sits on the Monte Carlo hot path for table models.
double atan2_via_atan(double y, double x)
{
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  double t = 0.0;
  if (ax >= ay) {
    t = ax == 0.0 ? 0.0 : std::atan(ay / ax);
  } else {
    t = 0.5 * std::numbers::pi - std::atan(ax / ay);
  }
  if (std::signbit(x)) {
    t = std::numbers::pi - t;
  }
  return std::copysign(t, y);
}

}  // namespace

bool EulerAngles::in_range() const
{
  return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma) &&
         alpha >= 0.0 && alpha < kTwoPi && beta >= 0.0 && beta <= std::numbers::pi &&
         gamma >= 0.0 && gamma < kTwoPi;
}

double wrap_two_pi(double angle)
{
  double r = angle;
  if (r < 0.0 || r >= kTwoPi) {
    r = std::fmod(r, kTwoPi);
    if (r < 0.0) {
      r += kTwoPi;
    }
  }
  // A tiny negative value plus 2pi can round up to exactly 2pi.
  if (r >= kTwoPi) {
    r = 0.0;
  }
  return r;
}

Rotation Rotation::renormalized(double w, double x, double y, double z)
{
  const double n2 = w * w + x * x + y * y + z * z;
  if (std::abs(n2 - 1.0) > kNormDrift) {
    const double inv = 1.0 / std::sqrt(n2);
    return {w * inv, x * inv, y * inv, z * inv, true};
  }
  return {w, x, y, z, true};
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z)
{
  const double n2 = w * w + x * x + y * y + z * z;
  if (!std::isfinite(n2) || n2 == 0.0) {
    throw std::invalid_argument("quaternion must be finite and nonzero");
  }
  return renormalized(w, x, y, z);
}

Rotation Rotation::from_axis_angle(const std::array<double, 3>& axis, double angle)
{
  const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!std::isfinite(len) || len == 0.0) {
    throw std::invalid_argument("rotation axis must be finite and nonzero");
  }
  const double s = std::sin(0.5 * angle) / len;
  return from_quaternion(std::cos(0.5 * angle), axis[0] * s, axis[1] * s, axis[2] * s);
}

Rotation Rotation::about_x(double angle)
{
  return {std::cos(0.5 * angle), std::sin(0.5 * angle), 0.0, 0.0, true};
}

Rotation Rotation::about_y(double angle)
{
  return {std::cos(0.5 * angle), 0.0, std::sin(0.5 * angle), 0.0, true};
}

Rotation Rotation::about_z(double angle)
{
  return {std::cos(0.5 * angle), 0.0, 0.0, std::sin(0.5 * angle), true};
}

std::array<double, 9> Rotation::matrix() const
{
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  return {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz),       2.0 * (xz + wy),
          2.0 * (xy + wz),       1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
          2.0 * (xz - wy),       2.0 * (yz + wx),       1.0 - 2.0 * (xx + yy)};
}

std::array<double, 3> Rotation::apply(const std::array<double, 3>& v) const
{
  const auto m = matrix();
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Rotation Rotation::canonical() const
{
  const std::array<double, 4> c{w_, x_, y_, z_};
  for (double v : c) {
    if (v > 0.0) {
      return *this;
    }
    if (v < 0.0) {
      return {-w_, -x_, -y_, -z_, true};
    }
  }
  return *this;
}

bool operator==(const Rotation& a, const Rotation& b)
{
  const Rotation ca = a.canonical();
  const Rotation cb = b.canonical();
  return ca.w_ == cb.w_ && ca.x_ == cb.x_ && ca.y_ == cb.y_ && ca.z_ == cb.z_;
}

Rotation compose(const Rotation& first, const Rotation& second)
{
  // Hamilton product second * first.
  const Rotation& a = second;
  const Rotation& b = first;
  return Rotation::renormalized(a.w_ * b.w_ - a.x_ * b.x_ - a.y_ * b.y_ - a.z_ * b.z_,
                                a.w_ * b.x_ + a.x_ * b.w_ + a.y_ * b.z_ - a.z_ * b.y_,
                                a.w_ * b.y_ - a.x_ * b.z_ + a.y_ * b.w_ + a.z_ * b.x_,
                                a.w_ * b.z_ + a.x_ * b.y_ - a.y_ * b.x_ + a.z_ * b.w_);
}

Rotation inverse(const Rotation& r)
{
  return {r.w_, -r.x_, -r.y_, -r.z_, true};
}

Rotation relative_rotation(const Rotation& from, const Rotation& to)
{
  return compose(inverse(from), to);
}

double rotation_angle(const Rotation& r)
{
  // 2*acos(|w|) loses half the digits near the identity; atan2 does not.
  const double v = std::sqrt(r.x() * r.x() + r.y() * r.y() + r.z() * r.z());
  return 2.0 * std::atan2(v, std::abs(r.w()));
}

double geodesic_distance(const Rotation& a, const Rotation& b)
{
  return rotation_angle(relative_rotation(a, b));
}

// For q = qz(alpha) qy(beta) qz(gamma):
//   w = cos(b/2) cos((a+g)/2),  z = cos(b/2) sin((a+g)/2),
//   y = sin(b/2) cos((a-g)/2),  x = -sin(b/2) sin((a-g)/2).
EulerAngles to_euler(const Rotation& r)
{
  const double pole = std::sqrt(r.w() * r.w() + r.z() * r.z());
  const double equator = std::sqrt(r.x() * r.x() + r.y() * r.y());
  EulerAngles e;
  e.beta = 2.0 * atan2_via_atan(equator, pole);
  // Within rounding of a pole the (alpha, gamma) split is meaningless.
  if (equator <= kGimbalEps) {
    e.beta = 0.0;
    e.alpha = wrap_two_pi(2.0 * atan2_via_atan(r.z(), r.w()));
    e.gamma = 0.0;
    return e;
  }
  if (pole <= kGimbalEps) {
    e.beta = std::numbers::pi;
    e.alpha = wrap_two_pi(2.0 * atan2_via_atan(-r.x(), r.y()));
    e.gamma = 0.0;
    return e;
  }
  const double half_sum = atan2_via_atan(r.z(), r.w());
  const double half_diff = atan2_via_atan(-r.x(), r.y());
  e.alpha = wrap_two_pi(half_sum + half_diff);
  e.gamma = wrap_two_pi(half_sum - half_diff);
  return e;
}

Rotation from_euler(const EulerAngles& e)
{
  const double cb = std::cos(0.5 * e.beta);
  const double sb = std::sin(0.5 * e.beta);
  const double half_sum = 0.5 * (e.alpha + e.gamma);
  const double half_diff = 0.5 * (e.alpha - e.gamma);
  return Rotation::from_quaternion(cb * std::cos(half_sum), -sb * std::sin(half_diff),
                                   sb * std::cos(half_diff), cb * std::sin(half_sum));
}

Rotation haar_sample(Rng& rng)
{
  for (;;) {
    const double w = rng.normal();
    const double x = rng.normal();
    const double y = rng.normal();
    const double z = rng.normal();
    const double n2 = w * w + x * x + y * y + z * z;
    if (n2 > 1e-300) {
      return Rotation::from_quaternion(w, x, y, z);
    }
  }
}

}  // namespace bellhaar

std::size_t std::hash<bellhaar::Rotation>::operator()(const bellhaar::Rotation& r) const noexcept
{
  const bellhaar::Rotation c = r.canonical();
  std::size_t h = 0;
  for (double v : {c.w(), c.x(), c.y(), c.z()}) {
    // +0.0 and -0.0 compare equal, so hash them alike.
    const double key = v == 0.0 ? 0.0 : v;
    h ^= std::hash<double>{}(key) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}
