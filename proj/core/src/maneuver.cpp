#include "zonoplan/maneuver.hpp"

#include <cmath>
#include <stdexcept>

namespace zonoplan {
namespace {

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }
double smoothstep_deriv(double s) { return 6.0 * s * (1.0 - s); }

}  // namespace

int PlanTiming::interval_count() const {
  const double ratio = t_f / dt;
  const int n = static_cast<int>(std::lround(ratio));
  if (n <= 0 || std::abs(ratio - n) > 1e-9) {
    throw std::invalid_argument("PlanTiming: dt must divide t_f");
  }
  return n;
}

BodyState maneuver_body_state(double v0, Vec2 p, const PlanTiming& timing, double tau) {
  const double v_des = p.x;
  const double y_des = p.y;
  const double t_m = timing.t_m;
  const double t_b = timing.t_f - timing.t_m;
  tau = std::min(std::max(tau, 0.0), timing.t_f);

  double x, vx;
  if (tau <= t_m) {
    x = v0 * tau + (v_des - v0) * tau * tau / (2.0 * t_m);
    vx = v0 + (v_des - v0) * tau / t_m;
  } else {
    const double x_m = v0 * t_m + (v_des - v0) * t_m / 2.0;
    const double s = (tau - t_m) / t_b;
    const double q = 1.0 - s;
    x = x_m + v_des * t_b * (1.0 - q * q * q * q * q * q) / 6.0;
    vx = v_des * q * q * q * q * q;
  }

  double y, vy;
  if (tau < t_m) {
    const double s = tau / t_m;
    y = y_des * smoothstep(s);
    vy = y_des * smoothstep_deriv(s) / t_m;
  } else {
    y = y_des;
    vy = 0.0;
  }

  const double speed = std::hypot(vx, vy);
  const double heading = speed < 1e-9 ? 0.0 : std::atan2(vy, vx);
  return {{x, y}, heading, speed};
}

EgoState maneuver_world_state(const EgoState& z0, Vec2 p, const PlanTiming& timing, double tau) {
  const BodyState body = maneuver_body_state(z0.v, p, timing, tau);
  const Vec2 pos = z0.position() + rotation(z0.h) * body.pos;
  return {pos.x, pos.y, z0.h + body.heading, body.speed};
}

Mat2 maneuver_position_jacobian(const EgoState& z0, const PlanTiming& timing, double tau) {
  const double t_m = timing.t_m;
  const double t_b = timing.t_f - timing.t_m;
  tau = std::min(std::max(tau, 0.0), timing.t_f);

  // body-frame partials of (x, y) w.r.t. (v_des, y_des)
  double dx_dv;
  if (tau <= t_m) {
    dx_dv = tau * tau / (2.0 * t_m);
  } else {
    const double q = 1.0 - (tau - t_m) / t_b;
    dx_dv = t_m / 2.0 + t_b * (1.0 - q * q * q * q * q * q) / 6.0;
  }
  const double dy_dy = tau < t_m ? smoothstep(tau / t_m) : 1.0;

  const Mat2 body{dx_dv, 0.0, 0.0, dy_dy};
  return rotation(z0.h) * body;
}

}  // namespace zonoplan
