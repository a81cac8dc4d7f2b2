#include "sail/rbd.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

namespace sail::rbd {

namespace {

Matrix4d dh_transform(const Link& link, double q) {
  const double ct = std::cos(link.theta_offset + q);
  const double st = std::sin(link.theta_offset + q);
  const double ca = std::cos(link.alpha);
  const double sa = std::sin(link.alpha);
  Matrix4d T;
  T << ct, -st * ca, st * sa, link.a * ct,
       st, ct * ca, -ct * sa, link.a * st,
       0.0, sa, ca, link.d,
       0.0, 0.0, 0.0, 1.0;
  return T;
}

Matrix3d skew(const Vector3d& v) {
  Matrix3d S;
  S << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return S;
}

bool symmetric_positive_definite(const Matrix3d& I) {
  if ((I - I.transpose()).norm() > 1e-9 * std::max(1.0, I.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(I);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void RobotModel::validate() const {
  if (links.empty()) throw ConfigError("robot model has no links");
  for (int i = 0; i < n(); ++i) {
    const Link& L = links[i];
    if (!(L.mass > 0.0))
      throw ConfigError("link " + std::to_string(i) + ": mass must be > 0");
    if (!symmetric_positive_definite(L.inertia))
      throw ConfigError("link " + std::to_string(i) +
                        ": inertia must be symmetric positive-definite");
  }
}

FrameCache compute_frames(const RobotModel& model, const VectorXd& q) {
  const int n = model.n();
  FrameCache fc;
  fc.axis.resize(n);
  fc.origin.resize(n);
  fc.com.resize(n);
  fc.rot.resize(n);

  Matrix4d T = Matrix4d::Identity();
  for (int j = 0; j < n; ++j) {
    // joint j rotates about the z axis of frame j-1
    fc.axis[j] = T.block<3, 1>(0, 2);
    fc.origin[j] = T.block<3, 1>(0, 3);
    T = T * dh_transform(model.links[j], q[j]);
    fc.rot[j] = T.block<3, 3>(0, 0);
    fc.com[j] = T.block<3, 1>(0, 3) + fc.rot[j] * model.links[j].com;
  }
  fc.ee_position = T.block<3, 1>(0, 3);
  fc.ee_rotation = T.block<3, 3>(0, 0);
  return fc;
}

Pose forward_kinematics(const RobotModel& model, const VectorXd& q) {
  const FrameCache fc = compute_frames(model, q);
  Pose pose;
  pose.position = fc.ee_position;
  pose.orientation = Quaterniond(fc.ee_rotation).normalized();
  return pose;
}

MatrixXd jacobian(const RobotModel& model, const VectorXd& q) {
  const int n = model.n();
  const FrameCache fc = compute_frames(model, q);
  MatrixXd J = MatrixXd::Zero(6, n);
  for (int k = 0; k < n; ++k) {
    J.block<3, 1>(0, k) = fc.axis[k].cross(fc.ee_position - fc.origin[k]);
    J.block<3, 1>(3, k) = fc.axis[k];
  }
  return J;
}

MatrixXd jacobian_dot(const RobotModel& model, const VectorXd& q, const VectorXd& qd) {
  const int n = model.n();
  const FrameCache fc = compute_frames(model, q);

  // World-frame rates of the axis vectors, axis points and the EE origin.
  std::vector<Vector3d> axis_dot(n), origin_dot(n);
  Vector3d ee_dot = Vector3d::Zero();
  for (int k = 0; k < n; ++k) {
    Vector3d ad = Vector3d::Zero();
    Vector3d od = Vector3d::Zero();
    for (int i = 0; i < k; ++i) {
      ad += qd[i] * fc.axis[i].cross(fc.axis[k]);
      od += qd[i] * fc.axis[i].cross(fc.origin[k] - fc.origin[i]);
    }
    axis_dot[k] = ad;
    origin_dot[k] = od;
  }
  for (int i = 0; i < n; ++i)
    ee_dot += qd[i] * fc.axis[i].cross(fc.ee_position - fc.origin[i]);

  MatrixXd Jdot = MatrixXd::Zero(6, n);
  for (int k = 0; k < n; ++k) {
    Jdot.block<3, 1>(0, k) = axis_dot[k].cross(fc.ee_position - fc.origin[k]) +
                             fc.axis[k].cross(ee_dot - origin_dot[k]);
    Jdot.block<3, 1>(3, k) = axis_dot[k];
  }
  return Jdot;
}

namespace {

struct LinkJacobians {
  std::vector<MatrixXd> Jv;  ///< 3 x n linear Jacobian of each link COM
  std::vector<MatrixXd> Jw;  ///< 3 x n angular Jacobian of each link
};

LinkJacobians link_jacobians(const FrameCache& fc, int n) {
  LinkJacobians lj;
  lj.Jv.assign(n, MatrixXd::Zero(3, n));
  lj.Jw.assign(n, MatrixXd::Zero(3, n));
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k <= j; ++k) {
      lj.Jv[j].col(k) = fc.axis[k].cross(fc.com[j] - fc.origin[k]);
      lj.Jw[j].col(k) = fc.axis[k];
    }
  }
  return lj;
}

}  // namespace

MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q) {
  const int n = model.n();
  const FrameCache fc = compute_frames(model, q);
  const LinkJacobians lj = link_jacobians(fc, n);

  MatrixXd M = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const Matrix3d W = fc.rot[j] * model.links[j].inertia * fc.rot[j].transpose();
    M.noalias() += model.links[j].mass * lj.Jv[j].transpose() * lj.Jv[j];
    M.noalias() += lj.Jw[j].transpose() * W * lj.Jw[j];
  }
  // symmetrize away roundoff
  return 0.5 * (M + M.transpose());
}

std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model, const VectorXd& q) {
  const int n = model.n();
  const FrameCache fc = compute_frames(model, q);
  const LinkJacobians lj = link_jacobians(fc, n);

  std::vector<Matrix3d> W(n);
  for (int j = 0; j < n; ++j)
    W[j] = fc.rot[j] * model.links[j].inertia * fc.rot[j].transpose();

  std::vector<MatrixXd> dM(n, MatrixXd::Zero(n, n));
  MatrixXd dJv(3, n), dJw(3, n);
  for (int g = 0; g < n; ++g) {
    const Vector3d& ag = fc.axis[g];
    const Matrix3d Sg = skew(ag);
    for (int j = g; j < n; ++j) {
      // partial of link-j Jacobians w.r.t. q_g (zero when g > j)
      dJv.setZero();
      dJw.setZero();
      for (int k = 0; k <= j; ++k) {
        if (g < k) {
          // everything in column k rotates with joint g
          dJv.col(k) = ag.cross(Vector3d(lj.Jv[j].col(k)));
          dJw.col(k) = ag.cross(fc.axis[k]);
        } else {
          // axis k and its point are fixed; only the link COM moves
          dJv.col(k) = fc.axis[k].cross(ag.cross(fc.com[j] - fc.origin[g]));
        }
      }
      const Matrix3d dW = Sg * W[j] - W[j] * Sg;
      MatrixXd contrib =
          model.links[j].mass *
              (dJv.transpose() * lj.Jv[j] + lj.Jv[j].transpose() * dJv) +
          dJw.transpose() * W[j] * lj.Jw[j] +
          lj.Jw[j].transpose() * dW * lj.Jw[j] +
          lj.Jw[j].transpose() * W[j] * dJw;
      dM[g].noalias() += 0.5 * (contrib + contrib.transpose());
    }
  }
  return dM;
}

MatrixXd coriolis_matrix(const RobotModel& model, const VectorXd& q, const VectorXd& qd) {
  const int n = model.n();
  const std::vector<MatrixXd> dM = mass_matrix_partials(model, q);
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double cij = 0.0;
      for (int k = 0; k < n; ++k)
        cij += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * qd[k];
      C(i, j) = cij;
    }
  return C;
}

double potential_energy(const RobotModel& model, const VectorXd& q) {
  const FrameCache fc = compute_frames(model, q);
  double U = 0.0;
  for (int j = 0; j < model.n(); ++j)
    U -= model.links[j].mass * model.gravity.dot(fc.com[j]);
  return U;
}

VectorXd gravity_vector(const RobotModel& model, const VectorXd& q) {
  const int n = model.n();
  const FrameCache fc = compute_frames(model, q);
  const LinkJacobians lj = link_jacobians(fc, n);
  VectorXd G = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    G.noalias() -= model.links[j].mass * lj.Jv[j].transpose() * model.gravity;
  return G;
}

RobotModel perturb_model(const RobotModel& model, double level, std::uint64_t seed) {
  if (level < 0.0 || level > 0.9)
    throw ConfigError("perturbation level must be in [0, 0.9]");
  Rng rng(seed);
  RobotModel out = model;
  constexpr int kMaxAttempts = 100;
  for (auto& link : out.links) {
    link.mass *= rng.uniform(1.0 - level, 1.0 + level);
    for (int c = 0; c < 3; ++c) link.com[c] *= rng.uniform(1.0 - level, 1.0 + level);
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      Matrix3d I = link.inertia;
      for (int c = 0; c < 3; ++c) I(c, c) *= rng.uniform(1.0 - level, 1.0 + level);
      if (symmetric_positive_definite(I)) {
        link.inertia = I;
        ok = true;
      }
    }
    if (!ok)
      throw Fault("perturb_model: could not keep link inertia positive-definite at level " +
                  std::to_string(level));
  }
  out.validate();
  return out;
}

RobotModel load_robot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open robot file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("robot file " + path + ": " + e.what());
  }

  RobotModel model;
  try {
    for (const auto& jl : j.at("links")) {
      Link link;
      const auto& dh = jl.at("dh");
      link.a = dh.at(0).get<double>();
      link.alpha = dh.at(1).get<double>();
      link.d = dh.at(2).get<double>();
      link.theta_offset = dh.at(3).get<double>();
      link.mass = jl.at("mass").get<double>();
      const auto& com = jl.at("com");
      link.com = Vector3d(com.at(0).get<double>(), com.at(1).get<double>(),
                          com.at(2).get<double>());
      const auto& I = jl.at("inertia");  // [Ixx, Iyy, Izz, Ixy, Ixz, Iyz]
      link.inertia << I.at(0).get<double>(), I.at(3).get<double>(), I.at(4).get<double>(),
                      I.at(3).get<double>(), I.at(1).get<double>(), I.at(5).get<double>(),
                      I.at(4).get<double>(), I.at(5).get<double>(), I.at(2).get<double>();
      model.links.push_back(link);
    }
    const auto& g = j.at("gravity");
    model.gravity = Vector3d(g.at(0).get<double>(), g.at(1).get<double>(),
                             g.at(2).get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("robot file " + path + ": " + e.what());
  }
  model.validate();
  return model;
}

}  // namespace sail::rbd
