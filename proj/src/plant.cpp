#include "sail/plant.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sail::plant {

void FrictionParams::validate() const {
  const auto n = f_c.size();
  if (f_s.size() != n || f_v.size() != n || v_s.size() != n)
    throw ConfigError("friction parameter vectors must share one length");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(f_c[i] >= 0.0 && f_s[i] >= f_c[i]))
      throw ConfigError("friction requires f_s >= f_c >= 0");
    if (!(f_v[i] >= 0.0)) throw ConfigError("friction requires f_v >= 0");
    if (!(v_s[i] > 0.0)) throw ConfigError("friction requires v_s > 0");
  }
  if (!(kappa_f > 0.0)) throw ConfigError("friction requires kappa_f > 0");
}

FrictionParams FrictionParams::zero(int n) {
  FrictionParams p;
  p.f_c = VectorXd::Zero(n);
  p.f_s = VectorXd::Zero(n);
  p.f_v = VectorXd::Zero(n);
  p.v_s = VectorXd::Constant(n, 0.1);
  return p;
}

void WrenchProfile::validate() const {
  if (!(t1 > t0)) throw ConfigError("wrench window requires t1 > t0");
  if (!(envelope_width > 0.0)) throw ConfigError("wrench envelope width must be > 0");
}

VectorXd friction_torque(const VectorXd& qd, const FrictionParams& p) {
  VectorXd tau(qd.size());
  for (Eigen::Index i = 0; i < qd.size(); ++i) {
    const double stribeck =
        p.f_c[i] + (p.f_s[i] - p.f_c[i]) * std::exp(-(qd[i] / p.v_s[i]) * (qd[i] / p.v_s[i]));
    tau[i] = stribeck * std::tanh(p.kappa_f * qd[i]) + p.f_v[i] * qd[i];
  }
  return tau;
}

Vector6d wrench_at(double t, const WrenchProfile& w) {
  if (t <= w.t0 || t >= w.t1) return Vector6d::Zero();
  const double t_mid = 0.5 * (w.t0 + w.t1);
  const double half_sine = std::sin(M_PI * (t - w.t0) / (w.t1 - w.t0));
  const double u = (t - t_mid) / w.envelope_width;
  return w.peak * (half_sine * std::exp(-u * u));
}

StateDerivative plant_derivative(const rbd::RobotModel& model, const JointState& x,
                                 const VectorXd& u, const Vector6d& F_h,
                                 const FrictionParams& p) {
  const MatrixXd M = rbd::mass_matrix(model, x.q);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw Fault("plant_derivative: inertia matrix numerically singular (cond > 1e12)");

  const MatrixXd C = rbd::coriolis_matrix(model, x.q, x.qd);
  const VectorXd G = rbd::gravity_vector(model, x.q);
  const MatrixXd J = rbd::jacobian(model, x.q);
  const VectorXd rhs =
      u + J.transpose() * F_h - C * x.qd - G - friction_torque(x.qd, p);

  StateDerivative dx;
  dx.qd = x.qd;
  dx.qdd = es.eigenvectors() *
           (es.eigenvalues().cwiseInverse().asDiagonal() *
            (es.eigenvectors().transpose() * rhs));
  return dx;
}

namespace {

void check_finite(const VectorXd& k, const char* stage) {
  for (Eigen::Index i = 0; i < k.size(); ++i)
    if (!std::isfinite(k[i]))
      throw Fault(std::string("rk4_step: non-finite derivative at ") + stage +
                  ", component " + std::to_string(i));
}

}  // namespace

VectorXd rk4_step(const std::function<VectorXd(double, const VectorXd&)>& derivative,
                  const VectorXd& state, double t, double dt) {
  if (!(dt > 0.0)) throw ConfigError("rk4_step requires dt > 0");
  const VectorXd k1 = derivative(t, state);
  check_finite(k1, "stage 1");
  const VectorXd k2 = derivative(t + 0.5 * dt, state + (0.5 * dt) * k1);
  check_finite(k2, "stage 2");
  const VectorXd k3 = derivative(t + 0.5 * dt, state + (0.5 * dt) * k2);
  check_finite(k3, "stage 3");
  const VectorXd k4 = derivative(t + dt, state + dt * k3);
  check_finite(k4, "stage 4");
  return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace sail::plant
