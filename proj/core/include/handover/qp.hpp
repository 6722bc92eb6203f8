#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace handover
{

/**
 * Index layout of the decision vector chi = [qddot; obs_acc; wrench]:
 * joint accelerations, observer spatial acceleration and contact wrench.
 */
struct DecisionLayout
{
  Eigen::Index joints = 0;

  explicit DecisionLayout(Eigen::Index n_joints) : joints(n_joints) {}

  Eigen::Index size() const { return joints + 12; }
  Eigen::Index qdd() const { return 0; }
  Eigen::Index obs_acc() const { return joints; }
  Eigen::Index wrench() const { return joints + 6; }
};

/// Weighted residual w * ||E chi + F||^2.
struct TaskBlock
{
  std::string name;
  Eigen::MatrixXd E;
  Eigen::VectorXd F;
  double weight = 1.0;

  double residual_norm(const Eigen::VectorXd & x) const { return (E * x + F).norm(); }
};

/// Linear inequalities C chi <= d plus box bounds lower <= chi <= upper.
class ConstraintSet
{
public:
  explicit ConstraintSet(Eigen::Index dim);

  Eigen::Index dim() const { return lower_.size(); }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(d_.size()); }

  void add_row(const Eigen::RowVectorXd & c, double d, std::string label = {});

  /// Intersect the bounds of variable i with [lo, hi].
  void bound(Eigen::Index i, double lo, double hi);
  void bound_segment(Eigen::Index start, const Eigen::VectorXd & lo, const Eigen::VectorXd & hi);
  void append(const ConstraintSet & other);

  Eigen::MatrixXd C() const;
  Eigen::VectorXd d() const;
  const Eigen::VectorXd & lower() const { return lower_; }
  const Eigen::VectorXd & upper() const { return upper_; }
  const std::vector<std::string> & labels() const { return labels_; }
  const Eigen::RowVectorXd & row(Eigen::Index i) const { return rows_[static_cast<std::size_t>(i)]; }

  /// Largest violation of x over rows and bounds (0 when feasible).
  double max_violation(const Eigen::VectorXd & x) const;

private:
  std::vector<Eigen::RowVectorXd> rows_;
  std::vector<double> d_;
  std::vector<std::string> labels_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

enum class QpStatus
{
  optimal,
  max_iterations,
  infeasible,
};

const char * to_string(QpStatus status);

struct QpOptions
{
  /// Tie-break term regularization * ||chi||^2 added to every problem.
  double regularization = 1e-12;
  /// 0 selects 10 * dim(chi).
  int max_iterations = 0;
  double feasibility_tolerance = 1e-10;
};

struct QpSolution
{
  Eigen::VectorXd x;
  double objective = 0.0; ///< sum_i w_i ||E_i x + F_i||^2 + regularization ||x||^2
  double task_cost = 0.0; ///< same without the regularization term
  int iterations = 0;
  QpStatus status = QpStatus::optimal;
  Eigen::VectorXd multipliers; ///< one per row of C, >= 0
  Eigen::VectorXd bound_multipliers; ///< > 0 on an active upper bound, < 0 on an active lower bound
  std::string violated; ///< most violated constraint when infeasible
};

/**
 * Dense strictly convex QP  min 1/2 x'Hx + g'x  s.t.  A x <= b, solved with
 * the Goldfarb-Idnani dual active-set method. H must be positive-definite.
 * `multipliers` in the result has one entry per row of A.
 */
QpSolution solve_quadratic_program(const Eigen::MatrixXd & H,
                                   const Eigen::VectorXd & g,
                                   const Eigen::MatrixXd & A,
                                   const Eigen::VectorXd & b,
                                   const QpOptions & options = {});

/// min sum_i w_i ||E_i chi + F_i||^2 + reg ||chi||^2 subject to `constraints`.
QpSolution solve_qp(std::span<const TaskBlock> blocks, const ConstraintSet & constraints, const QpOptions & options = {});

} // namespace handover
