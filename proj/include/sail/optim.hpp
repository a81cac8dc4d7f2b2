/**
 * @file optim.hpp
 * @brief Dense small-scale strictly convex QP (primal active set) and LP
 *        (two-phase simplex) with certified KKT residuals, plus builders for
 *        the command QP and the wrench-feasibility LP.
 */

#ifndef SAIL_OPTIM_HPP_
#define SAIL_OPTIM_HPP_

#include "sail/common.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace sail::optim {

/// min 1/2 z'Hz + h'z  s.t.  A z <= b, with H symmetric positive-definite.
struct QpProblem {
  MatrixXd H;
  VectorXd h;
  MatrixXd A;  ///< m x d, may have zero rows
  VectorXd b;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kFault };

struct QpSolution {
  VectorXd z;
  VectorXd duals;          ///< one multiplier per constraint row, >= 0
  double kkt_residual = std::numeric_limits<double>::infinity();
  SolveStatus status = SolveStatus::kFault;
  int iterations = 0;
  std::vector<int> working_set;  ///< active rows at the solution (warm-start seed)
};

/// Primal active-set solve. Optional feasible start and working-set seed for
/// warm starting; falls back to a phase-1 LP start when absent or invalid.
/// Deterministic for identical inputs.
QpSolution solve_qp(const QpProblem& p, double tol = 1e-8,
                    const VectorXd* start = nullptr,
                    const std::vector<int>* warm_working_set = nullptr);

struct LpSolution {
  VectorXd x;
  double value = 0.0;
  SolveStatus status = SolveStatus::kFault;
  double residual = std::numeric_limits<double>::infinity();
};

/// maximize c'x  s.t.  A x <= b (x free). Two-phase simplex, Bland's rule.
LpSolution solve_lp(const VectorXd& c, const MatrixXd& A, const VectorXd& b);

/// Phase-1 feasibility of {z : A z <= b}; returns a feasible point when one
/// exists within tolerance.
bool lp_feasible(const MatrixXd& A, const VectorXd& b, VectorXd* point = nullptr,
                 double tol = 1e-8);

struct CommandQpConfig {
  double rho = 1000.0;   ///< exact penalty weight on torque slack
  double eps_s = 1e-6;   ///< slack regularization

  void validate() const;
};

/// Soft-constrained command QP over z = (qdd, s):
///   min 1/2 |qdd - qdd_nom|^2 + rho 1's + eps_s/2 |s|^2
///   s.t. lower <= qdd <= upper (hard), tau rows softened by s, s >= 0.
/// Infinite bounds are omitted rows. Use +-infinity in lower/upper/tau to drop rows.
QpProblem build_command_qp(const VectorXd& qdd_nom, const VectorXd& lower,
                           const VectorXd& upper, const MatrixXd& M_hat,
                           const VectorXd& tau_base, const VectorXd& tau_min,
                           const VectorXd& tau_max, const CommandQpConfig& cfg);

/// Hard counterpart (decision qdd only, torque rows hard, no slack).
QpProblem build_hard_command_qp(const VectorXd& qdd_nom, const VectorXd& lower,
                                const VectorXd& upper, const MatrixXd& M_hat,
                                const VectorXd& tau_base, const VectorXd& tau_min,
                                const VectorXd& tau_max);

/// True iff hard feasibility implies the soft slack vanished.
bool exact_penalty_check(const QpSolution& soft, int n, bool hard_feasible,
                         double slack_tol = 1e-6);

/// Smallest over force directions {+-e1, +-e2, +-e3} of the largest wrench
/// magnitude keeping the CBF box and zero-slack torque constraints jointly
/// satisfiable. +infinity when unbounded in every direction; 0 contributions
/// from infeasible directions.
double wrench_feasibility(const VectorXd& lower, const VectorXd& upper,
                          const MatrixXd& M_hat, const MatrixXd& J,
                          const VectorXd& tau_base_0, const VectorXd& tau_min,
                          const VectorXd& tau_max);

/// Sampled local Lipschitz ratio of a state->command map in a ball around x0.
double qp_lipschitz_probe(const std::function<VectorXd(const VectorXd&)>& command_map,
                          const VectorXd& x0, double radius, int samples,
                          std::uint64_t seed);

}  // namespace sail::optim

#endif  // SAIL_OPTIM_HPP_
