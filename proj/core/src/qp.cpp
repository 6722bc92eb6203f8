#include "handover/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <stdexcept>

namespace handover
{

ConstraintSet::ConstraintSet(Eigen::Index dim)
: lower_(Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity())),
  upper_(Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity()))
{
}

void ConstraintSet::add_row(const Eigen::RowVectorXd & c, double d, std::string label)
{
  if(c.size() != dim())
  {
    throw std::invalid_argument(fmt::format("constraint row has {} columns, expected {}", c.size(), dim()));
  }
  if(!c.allFinite() || !std::isfinite(d))
  {
    throw std::invalid_argument("constraint row must be finite");
  }
  rows_.push_back(c);
  d_.push_back(d);
  labels_.push_back(label.empty() ? fmt::format("row {}", rows_.size() - 1) : std::move(label));
}

void ConstraintSet::bound(Eigen::Index i, double lo, double hi)
{
  lower_(i) = std::max(lower_(i), lo);
  upper_(i) = std::min(upper_(i), hi);
}

void ConstraintSet::bound_segment(Eigen::Index start, const Eigen::VectorXd & lo, const Eigen::VectorXd & hi)
{
  for(Eigen::Index k = 0; k < lo.size(); ++k)
  {
    bound(start + k, lo(k), hi(k));
  }
}

void ConstraintSet::append(const ConstraintSet & other)
{
  for(std::size_t i = 0; i < other.rows_.size(); ++i)
  {
    add_row(other.rows_[i], other.d_[i], other.labels_[i]);
  }
  for(Eigen::Index i = 0; i < dim(); ++i)
  {
    bound(i, other.lower_(i), other.upper_(i));
  }
}

Eigen::MatrixXd ConstraintSet::C() const
{
  Eigen::MatrixXd C(rows(), dim());
  for(Eigen::Index i = 0; i < rows(); ++i)
  {
    C.row(i) = rows_[static_cast<std::size_t>(i)];
  }
  return C;
}

Eigen::VectorXd ConstraintSet::d() const
{
  return Eigen::Map<const Eigen::VectorXd>(d_.data(), rows());
}

double ConstraintSet::max_violation(const Eigen::VectorXd & x) const
{
  double worst = 0.0;
  for(std::size_t i = 0; i < rows_.size(); ++i)
  {
    worst = std::max(worst, rows_[i].dot(x) - d_[i]);
  }
  worst = std::max(worst, (x - upper_).maxCoeff());
  worst = std::max(worst, (lower_ - x).maxCoeff());
  return worst;
}

const char * to_string(QpStatus status)
{
  switch(status)
  {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::max_iterations:
      return "max_iterations";
    case QpStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

namespace
{

/**
 * Factorization state of the dual method. With N the matrix of active
 * constraint normals, J^T N = [R; 0] where J = L^-T Q and R is upper
 * triangular. The trailing columns of J span the null space of the active
 * normals in the H metric.
 */
class ActiveSetFactor
{
public:
  ActiveSetFactor(const Eigen::MatrixXd & J0) : J_(J0), R_(Eigen::MatrixXd::Zero(J0.rows(), J0.rows())) {}

  Eigen::Index active() const { return q_; }
  const Eigen::MatrixXd & J() const { return J_; }

  /// Solve R r = d.head(q).
  Eigen::VectorXd solve_r(const Eigen::VectorXd & d) const
  {
    return R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d.head(q_));
  }

  /// Append a normal whose J^T image is d (d is consumed).
  void add(Eigen::VectorXd d)
  {
    const Eigen::Index n = J_.rows();
    for(Eigen::Index j = n - 1; j > q_; --j)
    {
      const double a = d(j - 1);
      const double b = d(j);
      const double h = std::hypot(a, b);
      if(h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      d(j - 1) = h;
      d(j) = 0.0;
      rotate_columns(j - 1, j, c, s);
    }
    R_.col(q_).head(q_ + 1) = d.head(q_ + 1);
    ++q_;
  }

  /// Remove the active constraint at position l and restore triangularity.
  void remove(Eigen::Index l)
  {
    for(Eigen::Index j = l; j + 1 < q_; ++j)
    {
      R_.col(j) = R_.col(j + 1);
    }
    R_.col(q_ - 1).setZero();
    --q_;
    for(Eigen::Index j = l; j < q_; ++j)
    {
      const double a = R_(j, j);
      const double b = R_(j + 1, j);
      const double h = std::hypot(a, b);
      if(h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      for(Eigen::Index k = j; k < q_; ++k)
      {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = c * t1 + s * t2;
        R_(j + 1, k) = s * t1 - c * t2;
      }
      rotate_columns(j, j + 1, c, s);
    }
  }

private:
  // symmetric Givens reflection [c s; s -c] applied to columns (i, k) of J
  void rotate_columns(Eigen::Index i, Eigen::Index k, double c, double s)
  {
    for(Eigen::Index r = 0; r < J_.rows(); ++r)
    {
      const double t1 = J_(r, i);
      const double t2 = J_(r, k);
      J_(r, i) = c * t1 + s * t2;
      J_(r, k) = s * t1 - c * t2;
    }
  }

  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::Index q_ = 0;
};

/**
 * Goldfarb-Idnani iterations from the unconstrained minimizer x0, given
 * J0 = L^-T for a factorization H = L L^T. The objective is left to the caller.
 */
QpSolution solve_dual(const Eigen::MatrixXd & J0,
                      const Eigen::VectorXd & x0,
                      const Eigen::MatrixXd & A,
                      const Eigen::VectorXd & b,
                      const QpOptions & options)
{
  const Eigen::Index n = J0.rows();
  const Eigen::Index m = A.rows();
  ActiveSetFactor factor(J0);

  QpSolution sol;
  sol.x = x0;
  sol.multipliers = Eigen::VectorXd::Zero(m);
  const int max_iter = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);

  std::vector<Eigen::Index> active;
  std::vector<double> u; // multipliers of `active`
  std::vector<char> is_active(static_cast<std::size_t>(m), 0);

  // slack of row i: b_i - a_i x, >= 0 when satisfied
  auto slack = [&](Eigen::Index i) { return b(i) - A.row(i).dot(sol.x); };
  auto violated = [&](Eigen::Index i, double s) { return s < -options.feasibility_tolerance * std::max(1.0, std::abs(b(i))); };

  auto finish = [&](QpStatus status) {
    sol.status = status;
    for(std::size_t k = 0; k < active.size(); ++k)
    {
      sol.multipliers(active[k]) = u[k];
    }
    return sol;
  };

  while(true)
  {
    // pick the most violated inactive constraint
    Eigen::Index p = -1;
    double s_p = 0.0;
    for(Eigen::Index i = 0; i < m; ++i)
    {
      if(is_active[static_cast<std::size_t>(i)]) continue;
      const double s = slack(i);
      if(violated(i, s) && (p < 0 || s < s_p))
      {
        p = i;
        s_p = s;
      }
    }
    if(p < 0)
    {
      return finish(QpStatus::optimal);
    }

    // normal of the violated constraint written as np' x >= -b_p
    const Eigen::VectorXd np = -A.row(p).transpose();
    double u_p = 0.0;

    while(true)
    {
      if(++sol.iterations > max_iter)
      {
        sol.violated = fmt::format("row {}", p);
        return finish(QpStatus::max_iterations);
      }
      const Eigen::Index q = factor.active();
      const Eigen::VectorXd d = factor.J().transpose() * np;
      const Eigen::VectorXd z = factor.J().rightCols(n - q) * d.tail(n - q);
      const Eigen::VectorXd r = factor.solve_r(d);

      // partial step: largest dual step keeping active multipliers >= 0
      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index l = -1;
      for(Eigen::Index j = 0; j < q; ++j)
      {
        if(r(j) > 0.0)
        {
          const double ratio = u[static_cast<std::size_t>(j)] / r(j);
          if(ratio < t1)
          {
            t1 = ratio;
            l = j;
          }
        }
      }

      // full step: primal step that satisfies constraint p exactly
      const double zz = d.tail(n - q).squaredNorm();
      const bool dependent = zz <= 1e-24 * std::max(1.0, np.squaredNorm());
      const double t2 = dependent ? std::numeric_limits<double>::infinity() : std::max(0.0, -s_p / zz);
      const double t = std::min(t1, t2);

      if(!std::isfinite(t))
      {
        sol.violated = fmt::format("row {}", p);
        return finish(QpStatus::infeasible);
      }

      for(Eigen::Index j = 0; j < q; ++j)
      {
        u[static_cast<std::size_t>(j)] -= t * r(j);
      }
      u_p += t;

      if(!dependent)
      {
        sol.x += t * z;
      }

      if(!dependent && t2 <= t1)
      {
        factor.add(d);
        active.push_back(p);
        u.push_back(u_p);
        is_active[static_cast<std::size_t>(p)] = 1;
        break;
      }

      // drop the blocking constraint and retry p
      u[static_cast<std::size_t>(l)] = 0.0;
      is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)])] = 0;
      factor.remove(l);
      active.erase(active.begin() + l);
      u.erase(u.begin() + l);
      s_p = slack(p);
    }
  }
}

} // namespace

QpSolution solve_quadratic_program(const Eigen::MatrixXd & H,
                                   const Eigen::VectorXd & g,
                                   const Eigen::MatrixXd & A,
                                   const Eigen::VectorXd & b,
                                   const QpOptions & options)
{
  const Eigen::Index n = H.rows();
  const Eigen::Index m = A.rows();
  if(H.cols() != n || g.size() != n || (m > 0 && A.cols() != n) || b.size() != m)
  {
    throw std::invalid_argument("solve_quadratic_program: inconsistent dimensions");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if(llt.info() != Eigen::Success)
  {
    throw std::invalid_argument("solve_quadratic_program: Hessian is not positive-definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd J0 = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
  QpSolution sol = solve_dual(J0, -llt.solve(g), A, b, options);
  sol.objective = 0.5 * sol.x.dot(H * sol.x) + g.dot(sol.x);
  return sol;
}

QpSolution solve_qp(std::span<const TaskBlock> blocks, const ConstraintSet & constraints, const QpOptions & options)
{
  const Eigen::Index dim = constraints.dim();
  if(!(options.regularization > 0.0))
  {
    throw std::invalid_argument("solve_qp: regularization must be positive");
  }
  // The Hessian is S^T S with S = [sqrt(2 w_i) E_i; sqrt(2 reg) I]. Factoring S
  // by QR instead of H by Cholesky keeps the condition number at sqrt(cond H),
  // which matters when the regularization is tiny.
  Eigen::Index rows = dim;
  for(const TaskBlock & blk : blocks)
  {
    if(blk.E.cols() != dim || blk.E.rows() != blk.F.size())
    {
      throw std::invalid_argument(fmt::format("task block '{}' has inconsistent dimensions", blk.name));
    }
    if(!(blk.weight > 0.0))
    {
      throw std::invalid_argument(fmt::format("task block '{}' needs a positive weight", blk.name));
    }
    rows += blk.E.rows();
  }
  Eigen::MatrixXd S(rows, dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(rows);
  Eigen::Index r0 = 0;
  for(const TaskBlock & blk : blocks)
  {
    const double sw = std::sqrt(2.0 * blk.weight);
    S.middleRows(r0, blk.E.rows()) = sw * blk.E;
    c.segment(r0, blk.E.rows()) = sw * blk.F;
    r0 += blk.E.rows();
  }
  S.bottomRows(dim) = std::sqrt(2.0 * options.regularization) * Eigen::MatrixXd::Identity(dim, dim);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(S);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(dim).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qtc = (qr.householderQ().transpose() * c).head(dim);
  const auto Rt = R.triangularView<Eigen::Upper>();
  const Eigen::VectorXd x0 = -Rt.solve(qtc);
  const Eigen::MatrixXd J0 = Rt.solve(Eigen::MatrixXd::Identity(dim, dim));

  // stack general rows, then finite upper bounds, then finite lower bounds
  std::vector<Eigen::Index> upper_idx, lower_idx;
  for(Eigen::Index i = 0; i < dim; ++i)
  {
    if(constraints.lower()(i) > constraints.upper()(i))
    {
      QpSolution sol;
      sol.x = Eigen::VectorXd::Zero(dim);
      sol.status = QpStatus::infeasible;
      sol.violated = fmt::format("bounds of variable {} ([{}, {}])", i, constraints.lower()(i), constraints.upper()(i));
      sol.multipliers = Eigen::VectorXd::Zero(constraints.rows());
      sol.bound_multipliers = Eigen::VectorXd::Zero(dim);
      return sol;
    }
    if(std::isfinite(constraints.upper()(i))) upper_idx.push_back(i);
    if(std::isfinite(constraints.lower()(i))) lower_idx.push_back(i);
  }
  const Eigen::Index k = constraints.rows();
  const auto nu = static_cast<Eigen::Index>(upper_idx.size());
  const auto nl = static_cast<Eigen::Index>(lower_idx.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k + nu + nl, dim);
  Eigen::VectorXd b(k + nu + nl);
  A.topRows(k) = constraints.C();
  b.head(k) = constraints.d();
  for(Eigen::Index j = 0; j < nu; ++j)
  {
    A(k + j, upper_idx[static_cast<std::size_t>(j)]) = 1.0;
    b(k + j) = constraints.upper()(upper_idx[static_cast<std::size_t>(j)]);
  }
  for(Eigen::Index j = 0; j < nl; ++j)
  {
    A(k + nu + j, lower_idx[static_cast<std::size_t>(j)]) = -1.0;
    b(k + nu + j) = -constraints.lower()(lower_idx[static_cast<std::size_t>(j)]);
  }

  QpSolution raw = solve_dual(J0, x0, A, b, options);

  QpSolution sol;
  sol.x = raw.x;
  sol.iterations = raw.iterations;
  sol.status = raw.status;
  sol.task_cost = 0.0;
  for(const TaskBlock & blk : blocks)
  {
    sol.task_cost += blk.weight * (blk.E * raw.x + blk.F).squaredNorm();
  }
  sol.objective = sol.task_cost + options.regularization * raw.x.squaredNorm();
  sol.multipliers = raw.multipliers.head(k);
  sol.bound_multipliers = Eigen::VectorXd::Zero(dim);
  for(Eigen::Index j = 0; j < nu; ++j)
  {
    sol.bound_multipliers(upper_idx[static_cast<std::size_t>(j)]) += raw.multipliers(k + j);
  }
  for(Eigen::Index j = 0; j < nl; ++j)
  {
    sol.bound_multipliers(lower_idx[static_cast<std::size_t>(j)]) -= raw.multipliers(k + nu + j);
  }
  if(!raw.violated.empty())
  {
    // translate "row i" of the stacked system back to a readable label
    const Eigen::Index row = std::stol(raw.violated.substr(4));
    if(row < k)
      sol.violated = constraints.labels()[static_cast<std::size_t>(row)];
    else if(row < k + nu)
      sol.violated = fmt::format("upper bound of variable {}", upper_idx[static_cast<std::size_t>(row - k)]);
    else
      sol.violated = fmt::format("lower bound of variable {}", lower_idx[static_cast<std::size_t>(row - k - nu)]);
  }
  return sol;
}

} // namespace handover
