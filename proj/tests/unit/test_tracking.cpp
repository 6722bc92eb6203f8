#include "handover/controller.hpp"
#include "handover/simulation.hpp"
#include "handover/tracking.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

using namespace handover;
namespace oc = handover::oracle;

namespace
{

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd & A)
{
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::VectorXd inv = s;
  for(Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > 1e-12 * s(0) ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// V diag(s / (s^2 + lambda)) U^T from the SVD, without forming J^T J.
Eigen::MatrixXd damped_pseudo_inverse(const Eigen::MatrixXd & A, double lambda)
{
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd f = s.cwiseQuotient((s.array().square() + lambda).matrix());
  return svd.matrixV() * f.asDiagonal() * svd.matrixU().transpose();
}

} // namespace

TEST(Tracking, DefaultGains)
{
  const TrackingGains g = default_tracking_gains();
  EXPECT_TRUE(g.stiffness.head<3>().isApprox(Vec3::Ones()));
  EXPECT_TRUE(g.stiffness.tail<3>().isApprox(Vec3::Constant(2.0)));
  EXPECT_TRUE(g.damping.head<3>().isApprox(Vec3::Constant(2.0)));
  EXPECT_NEAR(g.damping(3), 2.0 * std::sqrt(2.0), 1e-15);
}

TEST(Tracking, MaskParsing)
{
  EXPECT_TRUE(OrientationMask::parse("xyz").full());
  const OrientationMask z = OrientationMask::parse("z");
  EXPECT_FALSE(z.x);
  EXPECT_FALSE(z.y);
  EXPECT_TRUE(z.z);
  EXPECT_EQ(OrientationMask::parse("zx").to_string(), "xz");
  EXPECT_THROW(OrientationMask::parse(""), std::invalid_argument);
  EXPECT_THROW(OrientationMask::parse("xw"), std::invalid_argument);
}

TEST(Tracking, GraspFrameOfRotatingObject)
{
  FullState obj = FullState::at_rest(Pose::identity());
  obj.pose.position = Vec3(1, 0, 0);
  obj.twist(5) = 2.0;
  GraspSpec grasp;
  grasp.local.position = Vec3(0, 0.1, 0);
  grasp.local.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitX(), oc::pi);
  const FullState g = grasp_frame_state(obj, grasp);
  EXPECT_TRUE(g.pose.position.isApprox(Vec3(1, 0.1, 0)));
  EXPECT_TRUE(g.twist.head<3>().isApprox(Vec3(-0.2, 0, 0)));
  EXPECT_TRUE(g.accel.head<3>().isApprox(Vec3(0, -0.4, 0)));
  EXPECT_LT(oc::geodesic_angle(oc::rotation_of(g.pose.orientation), oc::rodrigues(Vec3::UnitX(), oc::pi)), 1e-7);
}

TEST(Tracking, ErrorComponents)
{
  Pose ee, grasp;
  ee.position = Vec3(0.3, 0, 0.5);
  grasp.position = Vec3(0.3, 0.1, 0.5);
  grasp.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitY(), 0.2);
  const Vec6 e = tracking_error(ee, grasp);
  EXPECT_TRUE(e.head<3>().isApprox(Vec3(0, -0.1, 0)));
  EXPECT_NEAR(e(4), -std::sin(0.1), 1e-15);
  // the same rotation written with the opposite quaternion sign gives the same error
  grasp.orientation = grasp.orientation.negated();
  EXPECT_LT((tracking_error(ee, grasp) - e).norm(), 1e-15);
}

TEST(Tracking, MaskedAxisIsFree)
{
  Pose ee, grasp;
  ee.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 0.5);
  // rotation about the free z axis only: no error
  EXPECT_TRUE(tracking_error(ee, grasp, OrientationMask::parse("xy")).isZero(1e-15));
  EXPECT_GT(tracking_error(ee, grasp, OrientationMask::parse("z")).norm(), 0.2);

  // the selector works in the grasp frame
  grasp.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitX(), oc::pi / 2); // grasp z = world -y
  ee.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitY(), 0.3) * grasp.orientation;
  EXPECT_TRUE(tracking_error(ee, grasp, OrientationMask::parse("xy")).isZero(1e-15));
}

TEST(Tracking, MaskedRowsLeaveTheResidual)
{
  const RobotModel & m = oc::panda();
  const JointState st = JointState::at_rest(m.ready_posture());
  FullState grasp = FullState::at_rest(forward_kinematics(m, st.q));
  grasp.pose.orientation = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 0.4) * grasp.pose.orientation;
  const DecisionLayout layout(m.dof());
  const TaskBlock blk =
      tracking_task_residual(m, st, grasp, default_tracking_gains(), OrientationMask::parse("xy"), layout);
  const Vec3 z_axis = grasp.pose.rotation().col(2);
  EXPECT_LT((z_axis.transpose() * blk.E.bottomRows<3>()).norm(), 1e-12);
  EXPECT_LT(std::abs(z_axis.dot(blk.F.tail<3>())), 1e-12);
}

TEST(Tracking, ResidualVanishesWhenAlignedAtRest)
{
  const RobotModel & m = oc::panda();
  const JointState st = JointState::at_rest(m.ready_posture());
  const FullState grasp = FullState::at_rest(forward_kinematics(m, st.q));
  const DecisionLayout layout(m.dof());
  const TaskBlock blk = tracking_task_residual(m, st, grasp, default_tracking_gains(), {}, layout, 100.0);
  EXPECT_EQ(blk.E.cols(), layout.size());
  EXPECT_TRUE(blk.F.isZero(1e-12));
  EXPECT_TRUE(blk.E.middleCols(layout.obs_acc(), 12).isZero(0.0));
  EXPECT_EQ(blk.weight, 100.0);
}

TEST(Tracking, QpMatchesPseudoInverse)
{
  const RobotModel & m = oc::panda();
  oc::Sampler s(31);
  const DecisionLayout layout(m.dof());
  for(int trial = 0; trial < 20; ++trial)
  {
    JointState st{s.uniform_vector(m.q_min() * 0.8, m.q_max() * 0.8), 0.3 * s.normal_vector(m.dof())};
    FullState grasp = FullState::at_rest(forward_kinematics(m, st.q));
    grasp.pose.position += 0.05 * s.normal_vector(3);
    grasp.twist = 0.1 * s.normal_vector(6);
    grasp.accel = 0.1 * s.normal_vector(6);
    const double w = 100.0;
    const TaskBlock blk = tracking_task_residual(m, st, grasp, default_tracking_gains(), {}, layout, w);
    const Eigen::MatrixXd J = blk.E.leftCols(m.dof());
    const std::vector<TaskBlock> blocks{blk};
    const QpOptions opts;
    const QpSolution sol = solve_qp(blocks, ConstraintSet(layout.size()), opts);
    ASSERT_EQ(sol.status, QpStatus::optimal);
    // damped least squares with the solver's tie-break weight
    const Eigen::VectorXd dls = -damped_pseudo_inverse(J, opts.regularization / w) * blk.F;
    EXPECT_LT((sol.x.head(m.dof()) - dls).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    EXPECT_TRUE(sol.x.tail(12).isZero(1e-12));
    // and the plain pseudo-inverse law away from singular configurations
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    if(svd.singularValues().minCoeff() > 0.05)
    {
      EXPECT_LT((sol.x.head(m.dof()) - (-pseudo_inverse(J) * blk.F)).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    }
  }
}

TEST(Tracking, ClosedLoopIsHurwitz)
{
  const TrackingGains g = default_tracking_gains();
  EXPECT_LT(spectral_abscissa(closed_loop_matrix(g.stiffness, g.damping)), 0.0);
  const TrackingGains stiff = default_tracking_gains(4.0, 2.0);
  EXPECT_LT(spectral_abscissa(closed_loop_matrix(stiff.stiffness, stiff.damping)), 0.0);
}

TEST(Tracking, ExactTrackingDecaysLikeCriticallyDampedSystem)
{
  // arm driven by the residual's exact solution toward a static grasp 5 cm away
  const RobotModel & m = oc::panda();
  const DecisionLayout layout(m.dof());
  JointState st = JointState::at_rest(m.ready_posture());
  FullState grasp = FullState::at_rest(forward_kinematics(m, st.q));
  const Vec3 offset(0.03, -0.04, 0.0);
  grasp.pose.position += offset;
  const double dt = 1e-3, x0 = offset.norm();
  double worst = 0.0;
  for(int k = 1; k <= 5000; ++k)
  {
    const TaskBlock blk = tracking_task_residual(m, st, grasp, default_tracking_gains(), {}, layout);
    const Eigen::VectorXd qdd = -pseudo_inverse(blk.E.leftCols(m.dof())) * blk.F;
    st = step_arm(st, qdd, dt);
    const double err = (forward_kinematics(m, st.q).position - grasp.pose.position).norm();
    worst = std::max(worst, std::abs(err - oc::critically_damped(x0, 1.0, k * dt)));
  }
  EXPECT_LT(worst, 0.05 * x0);
}
