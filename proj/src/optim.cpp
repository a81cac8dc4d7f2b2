#include "sail/optim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace sail::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Two-phase simplex on the tableau, Bland's rule (deterministic, no cycling).
// Standard form: maximize c'x, x free, Ax <= b. Free variables are split.
// ---------------------------------------------------------------------------

struct Tableau {
  MatrixXd T;             // (m+1) x (cols+1); last row objective, last col rhs
  std::vector<int> basis; // basic variable per row
};

int pick_entering(const Tableau& t, int cols) {
  // Bland: smallest index with positive objective-row coefficient
  for (int j = 0; j < cols; ++j)
    if (t.T(t.T.rows() - 1, j) > 1e-10) return j;
  return -1;
}

int pick_leaving(const Tableau& t, int col) {
  const int m = static_cast<int>(t.T.rows()) - 1;
  int row = -1;
  double best = kInf;
  for (int i = 0; i < m; ++i) {
    const double a = t.T(i, col);
    if (a > 1e-10) {
      const double ratio = t.T(i, t.T.cols() - 1) / a;
      if (ratio < best - 1e-12 ||
          (std::abs(ratio - best) <= 1e-12 &&
           (row < 0 || t.basis[i] < t.basis[row]))) {
        best = ratio;
        row = i;
      }
    }
  }
  return row;
}

void pivot(Tableau& t, int row, int col) {
  t.T.row(row) /= t.T(row, col);
  for (int i = 0; i < t.T.rows(); ++i) {
    if (i == row) continue;
    const double f = t.T(i, col);
    if (f != 0.0) t.T.row(i) -= f * t.T.row(row);
  }
  t.basis[row] = col;
}

// returns false on iteration blow-up (treated as fault upstream)
bool run_simplex(Tableau& t, int cols, bool* unbounded) {
  *unbounded = false;
  const int cap = 200 * (static_cast<int>(t.T.rows()) + cols + 10);
  for (int it = 0; it < cap; ++it) {
    const int col = pick_entering(t, cols);
    if (col < 0) return true;  // optimal
    const int row = pick_leaving(t, col);
    if (row < 0) {
      *unbounded = true;
      return true;
    }
    pivot(t, row, col);
  }
  return false;
}

}  // namespace

LpSolution solve_lp(const VectorXd& c, const MatrixXd& A, const VectorXd& b) {
  const int d = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  LpSolution out;

  // columns: x+ (d), x- (d), slack (m), artificial (m)
  const int nx = 2 * d;
  const int cols = nx + 2 * m;
  Tableau t;
  t.T = MatrixXd::Zero(m + 1, cols + 1);
  t.basis.assign(m, -1);

  for (int i = 0; i < m; ++i) {
    double sgn = (b[i] < 0.0) ? -1.0 : 1.0;
    for (int j = 0; j < d; ++j) {
      t.T(i, j) = sgn * A(i, j);
      t.T(i, d + j) = -sgn * A(i, j);
    }
    t.T(i, nx + i) = sgn;  // slack
    t.T(i, nx + m + i) = 1.0;   // artificial
    t.T(i, cols) = sgn * b[i];
    t.basis[i] = nx + m + i;
  }

  // phase 1: maximize -sum(artificials); objective row holds reduced costs
  // (price out the basic artificials, then zero their own columns)
  for (int i = 0; i < m; ++i) t.T.row(m) += t.T.row(i);
  for (int i = 0; i < m; ++i) t.T(m, nx + m + i) -= 1.0;
  bool unbounded = false;
  if (!run_simplex(t, cols, &unbounded)) return out;  // fault
  const double phase1 = t.T(m, cols);
  if (phase1 > 1e-7) {
    out.status = SolveStatus::kInfeasible;
    return out;
  }
  // drive remaining artificial variables out of the basis when possible
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] >= nx + m) {
      for (int j = 0; j < nx + m; ++j) {
        if (std::abs(t.T(i, j)) > 1e-9) {
          pivot(t, i, j);
          break;
        }
      }
    }
  }

  // phase 2: rebuild the objective row for maximize c'(x+ - x-),
  // artificial columns frozen out
  t.T.row(m).setZero();
  for (int j = 0; j < d; ++j) {
    t.T(m, j) = c[j];
    t.T(m, d + j) = -c[j];
  }
  for (int i = 0; i < m; ++i) {
    const int bj = t.basis[i];
    const double coef = t.T(m, bj);
    if (coef != 0.0) t.T.row(m) -= coef * t.T.row(i);
  }
  for (int i = 0; i < m; ++i) t.T.col(nx + m + i).setZero();  // kill artificials

  if (!run_simplex(t, nx + m, &unbounded)) return out;
  if (unbounded) {
    out.status = SolveStatus::kUnbounded;
    return out;
  }

  VectorXd full = VectorXd::Zero(cols);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < cols) full[t.basis[i]] = t.T(i, cols);
  out.x = full.head(d) - full.segment(d, d);
  out.value = c.dot(out.x);
  out.residual = std::max(0.0, (A * out.x - b).maxCoeff());
  out.status = SolveStatus::kOptimal;
  return out;
}

bool lp_feasible(const MatrixXd& A, const VectorXd& b, VectorXd* point, double tol) {
  const int d = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  if (m == 0) {
    if (point) *point = VectorXd::Zero(d);
    return true;
  }
  // maximize -1't  s.t.  Az - t <= b, -t <= 0
  VectorXd c = VectorXd::Zero(d + m);
  c.tail(m).setConstant(-1.0);
  MatrixXd Ax = MatrixXd::Zero(2 * m, d + m);
  VectorXd bx = VectorXd::Zero(2 * m);
  Ax.block(0, 0, m, d) = A;
  Ax.block(0, d, m, m) = -MatrixXd::Identity(m, m);
  bx.head(m) = b;
  Ax.block(m, d, m, m) = -MatrixXd::Identity(m, m);
  const LpSolution sol = solve_lp(c, Ax, bx);
  if (sol.status != SolveStatus::kOptimal) return false;
  if (sol.value < -tol) return false;
  if (point) *point = sol.x.head(d);
  return true;
}

// ---------------------------------------------------------------------------
// Primal active-set QP
// ---------------------------------------------------------------------------

namespace {

struct EqpResult {
  VectorXd z;
  VectorXd lambda;  // one per working row
  bool ok = false;
};

// min 1/2 z'Hz + h'z  s.t.  A_W z = b_W
EqpResult solve_eqp(const QpProblem& p, const std::vector<int>& W) {
  const int d = static_cast<int>(p.H.rows());
  const int k = static_cast<int>(W.size());
  MatrixXd K = MatrixXd::Zero(d + k, d + k);
  VectorXd rhs(d + k);
  K.topLeftCorner(d, d) = p.H;
  for (int i = 0; i < k; ++i) {
    K.block(d + i, 0, 1, d) = p.A.row(W[i]);
    K.block(0, d + i, d, 1) = p.A.row(W[i]).transpose();
    rhs[d + i] = p.b[W[i]];
  }
  rhs.head(d) = -p.h;
  Eigen::FullPivLU<MatrixXd> lu(K);
  EqpResult r;
  if (!lu.isInvertible()) return r;
  const VectorXd sol = lu.solve(rhs);
  r.z = sol.head(d);
  r.lambda = sol.tail(k);
  r.ok = true;
  return r;
}

bool row_independent(const QpProblem& p, const std::vector<int>& W, int candidate) {
  const int d = static_cast<int>(p.H.cols());
  if (static_cast<int>(W.size()) >= d) return false;
  MatrixXd Aw(W.size() + 1, d);
  for (size_t i = 0; i < W.size(); ++i) Aw.row(static_cast<int>(i)) = p.A.row(W[i]);
  Aw.row(static_cast<int>(W.size())) = p.A.row(candidate);
  Eigen::FullPivLU<MatrixXd> lu(Aw);
  return lu.rank() == static_cast<int>(W.size()) + 1;
}

double kkt_residual_of(const QpProblem& p, const VectorXd& z, const VectorXd& duals) {
  double stat;
  if (p.A.rows() > 0)
    stat = (p.H * z + p.h + p.A.transpose() * duals).lpNorm<Eigen::Infinity>();
  else
    stat = (p.H * z + p.h).lpNorm<Eigen::Infinity>();
  double prim = 0.0, comp = 0.0;
  if (p.A.rows() > 0) {
    const VectorXd viol = p.A * z - p.b;
    prim = std::max(0.0, viol.maxCoeff());
    for (Eigen::Index i = 0; i < viol.size(); ++i)
      comp = std::max(comp, std::abs(duals[i] * viol[i]));
  }
  return std::max({stat, prim, comp});
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, double tol, const VectorXd* start,
                    const std::vector<int>* warm_working_set) {
  const int d = static_cast<int>(p.H.rows());
  const int m = static_cast<int>(p.A.rows());
  if (p.H.cols() != d || p.h.size() != d || (m > 0 && p.A.cols() != d) ||
      p.b.size() != m)
    throw Fault("solve_qp: dimension mismatch");

  QpSolution out;
  out.duals = VectorXd::Zero(m);

  const double feas_tol = 1e-9 * std::max(1.0, m > 0 ? p.b.cwiseAbs().maxCoeff() : 1.0);
  auto feasible = [&](const VectorXd& z) {
    return m == 0 || (p.A * z - p.b).maxCoeff() <= feas_tol * 10 + 1e-12;
  };

  // --- starting point -------------------------------------------------------
  VectorXd z;
  std::vector<int> W;
  bool started = false;

  if (warm_working_set && !warm_working_set->empty()) {
    std::vector<int> Wt;
    for (int idx : *warm_working_set)
      if (idx >= 0 && idx < m && static_cast<int>(Wt.size()) < d) Wt.push_back(idx);
    const EqpResult r = solve_eqp(p, Wt);
    if (r.ok && feasible(r.z)) {
      z = r.z;
      W = Wt;
      started = true;
    }
  }
  if (!started && start && start->size() == d && feasible(*start)) {
    z = *start;
    started = true;
  }
  if (!started) {
    if (m == 0) {
      z = VectorXd::Zero(d);
      started = true;
    } else {
      VectorXd z0;
      if (!lp_feasible(p.A, p.b, &z0, 1e-9)) {
        out.status = SolveStatus::kInfeasible;
        return out;
      }
      z = z0;
      started = true;
    }
  }

  // working set: active rows at z, kept linearly independent
  if (W.empty() && m > 0) {
    for (int i = 0; i < m && static_cast<int>(W.size()) < d; ++i)
      if (std::abs(p.A.row(i).dot(z) - p.b[i]) <= feas_tol * 10 + 1e-10 &&
          row_independent(p, W, i))
        W.push_back(i);
  }

  // --- main loop -------------------------------------------------------------
  const int cap = 100 * (m + d + 10);
  for (int it = 0; it < cap; ++it) {
    out.iterations = it + 1;
    const EqpResult r = solve_eqp(p, W);
    if (!r.ok) {
      // degenerate working set; drop the last added row
      if (W.empty()) {
        out.status = SolveStatus::kFault;
        return out;
      }
      W.pop_back();
      continue;
    }
    const VectorXd pstep = r.z - z;
    if (pstep.lpNorm<Eigen::Infinity>() <= tol) {
      // stationary on the working set: check multipliers
      int worst = -1;
      double worst_val = -tol;
      for (size_t i = 0; i < W.size(); ++i)
        if (r.lambda[static_cast<int>(i)] < worst_val) {
          worst_val = r.lambda[static_cast<int>(i)];
          worst = static_cast<int>(i);
        }
      if (worst < 0) {
        out.z = r.z;
        out.duals.setZero();
        for (size_t i = 0; i < W.size(); ++i)
          out.duals[W[i]] = std::max(0.0, r.lambda[static_cast<int>(i)]);
        out.working_set = W;
        out.kkt_residual = kkt_residual_of(p, out.z, out.duals);
        out.status = out.kkt_residual <= tol * 100 ? SolveStatus::kOptimal
                                                   : SolveStatus::kFault;
        return out;
      }
      W.erase(W.begin() + worst);
      continue;
    }
    // line search to the nearest blocking constraint
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < m; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double ap = p.A.row(i).dot(pstep);
      if (ap > 1e-12) {
        const double ai = (p.b[i] - p.A.row(i).dot(z)) / ap;
        if (ai < alpha - 1e-14) {
          alpha = std::max(0.0, ai);
          blocking = i;
        }
      }
    }
    z += alpha * pstep;
    if (blocking >= 0) {
      if (row_independent(p, W, blocking)) {
        W.push_back(blocking);
      } else if (!W.empty()) {
        // swap out a dependent row to make room
        W.erase(W.begin());
        if (row_independent(p, W, blocking)) W.push_back(blocking);
      }
    }
  }
  out.status = SolveStatus::kFault;
  out.z = z;
  out.kkt_residual = kkt_residual_of(p, z, out.duals);
  return out;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

void CommandQpConfig::validate() const {
  if (!(rho > 0.0)) throw ConfigError("command QP requires rho > 0");
  if (!(eps_s > 0.0)) throw ConfigError("command QP requires eps_s > 0");
}

namespace {

void append_row(std::vector<VectorXd>& rows, std::vector<double>& rhs,
                const VectorXd& a, double bi) {
  rows.push_back(a);
  rhs.push_back(bi);
}

QpProblem assemble(int d, const MatrixXd& H, const VectorXd& h,
                   const std::vector<VectorXd>& rows, const std::vector<double>& rhs) {
  QpProblem p;
  p.H = H;
  p.h = h;
  p.A = MatrixXd::Zero(static_cast<int>(rows.size()), d);
  p.b = VectorXd::Zero(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    p.A.row(static_cast<int>(i)) = rows[i].transpose();
    p.b[static_cast<int>(i)] = rhs[i];
  }
  return p;
}

}  // namespace

QpProblem build_command_qp(const VectorXd& qdd_nom, const VectorXd& lower,
                           const VectorXd& upper, const MatrixXd& M_hat,
                           const VectorXd& tau_base, const VectorXd& tau_min,
                           const VectorXd& tau_max, const CommandQpConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(qdd_nom.size());
  if (lower.size() != n || upper.size() != n || M_hat.rows() != n ||
      M_hat.cols() != n || tau_base.size() != n || tau_min.size() != n ||
      tau_max.size() != n)
    throw Fault("build_command_qp: dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (lower[i] > upper[i])
      throw Fault("build_command_qp: degenerate acceleration box on joint " +
                  std::to_string(i));

  const int d = 2 * n;
  MatrixXd H = MatrixXd::Zero(d, d);
  H.topLeftCorner(n, n).setIdentity();
  H.bottomRightCorner(n, n) = cfg.eps_s * MatrixXd::Identity(n, n);
  VectorXd h = VectorXd::Zero(d);
  h.head(n) = -qdd_nom;
  h.tail(n).setConstant(cfg.rho);

  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  VectorXd a = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {  // hard CBF box
    if (std::isfinite(upper[i])) {
      a.setZero();
      a[i] = 1.0;
      append_row(rows, rhs, a, upper[i]);
    }
    if (std::isfinite(lower[i])) {
      a.setZero();
      a[i] = -1.0;
      append_row(rows, rhs, a, -lower[i]);
    }
  }
  for (int i = 0; i < n; ++i) {  // softened torque rows
    if (std::isfinite(tau_max[i])) {
      a.setZero();
      a.head(n) = M_hat.row(i).transpose();
      a[n + i] = -1.0;
      append_row(rows, rhs, a, tau_max[i] + tau_base[i]);
    }
    if (std::isfinite(tau_min[i])) {
      a.setZero();
      a.head(n) = -M_hat.row(i).transpose();
      a[n + i] = -1.0;
      append_row(rows, rhs, a, -tau_min[i] - tau_base[i]);
    }
  }
  for (int i = 0; i < n; ++i) {  // s >= 0
    a.setZero();
    a[n + i] = -1.0;
    append_row(rows, rhs, a, 0.0);
  }
  return assemble(d, H, h, rows, rhs);
}

QpProblem build_hard_command_qp(const VectorXd& qdd_nom, const VectorXd& lower,
                                const VectorXd& upper, const MatrixXd& M_hat,
                                const VectorXd& tau_base, const VectorXd& tau_min,
                                const VectorXd& tau_max) {
  const int n = static_cast<int>(qdd_nom.size());
  MatrixXd H = MatrixXd::Identity(n, n);
  VectorXd h = -qdd_nom;
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  VectorXd a = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(upper[i])) {
      a.setZero();
      a[i] = 1.0;
      append_row(rows, rhs, a, upper[i]);
    }
    if (std::isfinite(lower[i])) {
      a.setZero();
      a[i] = -1.0;
      append_row(rows, rhs, a, -lower[i]);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(tau_max[i])) {
      append_row(rows, rhs, M_hat.row(i).transpose(), tau_max[i] + tau_base[i]);
    }
    if (std::isfinite(tau_min[i])) {
      append_row(rows, rhs, VectorXd(-M_hat.row(i).transpose()),
                 -tau_min[i] - tau_base[i]);
    }
  }
  return assemble(n, H, h, rows, rhs);
}

bool exact_penalty_check(const QpSolution& soft, int n, bool hard_feasible,
                         double slack_tol) {
  if (!hard_feasible) return true;
  if (soft.status != SolveStatus::kOptimal) return false;
  return soft.z.tail(n).lpNorm<Eigen::Infinity>() <= slack_tol;
}

double wrench_feasibility(const VectorXd& lower, const VectorXd& upper,
                          const MatrixXd& M_hat, const MatrixXd& J,
                          const VectorXd& tau_base_0, const VectorXd& tau_min,
                          const VectorXd& tau_max) {
  const int n = static_cast<int>(lower.size());
  double f_max = kInf;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sgn : {1.0, -1.0}) {
      Vector6d dir = Vector6d::Zero();
      dir[axis] = sgn;
      const VectorXd jd = J.transpose() * dir;  // n-vector

      // variables (qdd, F); maximize F
      std::vector<VectorXd> rows;
      std::vector<double> rhs;
      VectorXd a = VectorXd::Zero(n + 1);
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(upper[i])) {
          a.setZero();
          a[i] = 1.0;
          append_row(rows, rhs, a, upper[i]);
        }
        if (std::isfinite(lower[i])) {
          a.setZero();
          a[i] = -1.0;
          append_row(rows, rhs, a, -lower[i]);
        }
      }
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(tau_max[i])) {
          a.setZero();
          a.head(n) = M_hat.row(i).transpose();
          a[n] = -jd[i];
          append_row(rows, rhs, a, tau_max[i] + tau_base_0[i]);
        }
        if (std::isfinite(tau_min[i])) {
          a.setZero();
          a.head(n) = -M_hat.row(i).transpose();
          a[n] = jd[i];
          append_row(rows, rhs, a, -tau_min[i] - tau_base_0[i]);
        }
      }
      a.setZero();
      a[n] = -1.0;
      append_row(rows, rhs, a, 0.0);  // F >= 0

      MatrixXd A(static_cast<int>(rows.size()), n + 1);
      VectorXd b(static_cast<int>(rows.size()));
      for (size_t i = 0; i < rows.size(); ++i) {
        A.row(static_cast<int>(i)) = rows[i].transpose();
        b[static_cast<int>(i)] = rhs[i];
      }
      VectorXd c = VectorXd::Zero(n + 1);
      c[n] = 1.0;
      const LpSolution sol = solve_lp(c, A, b);
      double fd;
      switch (sol.status) {
        case SolveStatus::kOptimal:
          fd = sol.value;
          break;
        case SolveStatus::kUnbounded:
          fd = kInf;
          break;
        case SolveStatus::kInfeasible:
          fd = 0.0;
          break;
        default:
          throw Fault("wrench_feasibility: LP fault");
      }
      f_max = std::min(f_max, fd);
    }
  }
  return f_max;
}

double qp_lipschitz_probe(const std::function<VectorXd(const VectorXd&)>& command_map,
                          const VectorXd& x0, double radius, int samples,
                          std::uint64_t seed) {
  Rng rng(seed);
  const int dim = static_cast<int>(x0.size());
  double ratio = 0.0;
  VectorXd xa(dim), xb(dim);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < dim; ++i) {
      xa[i] = x0[i] + rng.uniform(-radius, radius);
      xb[i] = x0[i] + rng.uniform(-radius, radius);
    }
    const double dx = (xa - xb).norm();
    if (dx < 1e-12) continue;
    const double dy = (command_map(xa) - command_map(xb)).norm();
    ratio = std::max(ratio, dy / dx);
  }
  return ratio;
}

}  // namespace sail::optim
