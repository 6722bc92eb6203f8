// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "handover/controller.hpp"
#include "handover/simulation.hpp"

#include "oracles.hpp"

#include <Eigen/SVD>

#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <sstream>

using namespace handover;
namespace oc = handover::oracle;
using Clock = std::chrono::steady_clock;

namespace
{

int failures = 0;

void report(const std::string & name, bool pass, const std::string & detail)
{
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if(!pass) ++failures;
}

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Scenario scenario(const std::string & name)
{
  return load_scenario(oc::data_dir() / "scenarios" / (name + ".json"));
}

std::string csv_of(const RunLog & log)
{
  std::ostringstream out;
  write_csv(out, log);
  return out.str();
}

/// Hamilton product written out component by component.
Eigen::Vector4d hamilton(const Eigen::Vector4d & a, const Eigen::Vector4d & b)
{
  return {a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
          a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
          a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
          a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0)};
}

/// Rotation angle of Ra Rb^T by atan2 (well conditioned at 0 and pi).
double matrix_angle(const Mat3 & Ra, const Mat3 & Rb)
{
  const Mat3 R = Ra * Rb.transpose();
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (R.trace() - 1.0));
}

Eigen::MatrixXd damped_pseudo_inverse(const Eigen::MatrixXd & A, double lambda)
{
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd f = s.cwiseQuotient((s.array().square() + lambda).matrix());
  return svd.matrixV() * f.asDiagonal() * svd.matrixU().transpose();
}

/// True grasp pose (from the true object pose) of a logged cycle.
Pose true_grasp(const CycleRecord & r, const Scenario & s)
{
  return r.object * s.grasp.local;
}

// --- criteria -----------------------------------------------------------------

void quaternion_suite()
{
  const auto t0 = Clock::now();
  oc::Sampler s(1001);
  double inverse_err = 0.0, product_err = 0.0, angle_err = 0.0;
  for(int i = 0; i < 10000; ++i)
  {
    const Eigen::Vector4d wa = s.unit_wxyz(), wb = s.unit_wxyz();
    const UnitQuaternion a(wa(0), wa(1), wa(2), wa(3)), b(wb(0), wb(1), wb(2), wb(3));
    inverse_err = std::max(inverse_err, ominus(a, a.inverse()).norm());
    const Eigen::Vector4d p = hamilton(a.wxyz(), b.wxyz());
    product_err = std::max(product_err, (ominus(a, b) - p.tail<3>()).norm());
    // |q_a (-) q_b^-1| = sin(theta / 2) with theta the geodesic angle between the rotations
    const double theta = matrix_angle(oc::rotation_of(a), oc::rotation_of(b));
    angle_err = std::max(angle_err, std::abs(ominus(a, b.inverse()).norm() - std::sin(theta / 2.0)));
    angle_err = std::max(angle_err, std::abs(geodesic_angle(a, b) - theta));
  }
  const double elapsed = seconds_since(t0);
  report("quaternion algebra",
         inverse_err <= 1e-12 && product_err <= 1e-12 && angle_err <= 1e-9 && elapsed < 1.0,
         fmt::format("1e4 pairs: inverse {:.1e}, product {:.1e}, geodesic {:.1e}, {:.3f} s", inverse_err, product_err,
                     angle_err, elapsed));
}

void kinematics_suite()
{
  const auto t0 = Clock::now();
  const RobotModel & m = oc::panda();
  oc::Sampler s(1002);
  double jac_err = 0.0, drift_err = 0.0;
  for(int i = 0; i < 1000; ++i)
  {
    const Eigen::VectorXd q = s.uniform_vector(m.q_min(), m.q_max());
    const Eigen::VectorXd qd = s.uniform_vector(-m.v_max(), m.v_max());
    jac_err = std::max(jac_err, (jacobian(m, q) - oc::fd_jacobian(m, q, 1e-6)).cwiseAbs().maxCoeff());
    drift_err = std::max(drift_err, (jacobian_dot_times_qdot(m, q, qd) - oc::fd_drift(m, q, qd, 1e-6)).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(t0);
  report("kinematics oracle", jac_err <= 1e-5 && drift_err <= 1e-4 && elapsed < 10.0,
         fmt::format("1e3 states: Jacobian {:.1e}, Jdot qdot {:.1e}, {:.2f} s", jac_err, drift_err, elapsed));
}

void dynamics_suite()
{
  const double mass = 2.5, L = 0.7, g = 9.81;
  const RobotModel p = load_model(oc::pendulum_document(mass, L, g));
  double pend_err = 0.0;
  oc::Sampler s(1003);
  for(int i = 0; i < 100; ++i)
  {
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, s.uniform(-3.0, 3.0));
    const Eigen::VectorXd qd = Eigen::VectorXd::Constant(1, s.uniform(-5.0, 5.0));
    pend_err = std::max(pend_err, std::abs(mass_matrix(p, q)(0, 0) - mass * L * L));
    // a single point mass on a revolute joint has no velocity-dependent torque
    pend_err = std::max(pend_err, std::abs(nonlinear_terms(p, q, qd)(0) - mass * g * L * std::sin(q(0))));
  }

  std::ifstream in(oc::data_dir() / "models" / "panda.json");
  std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  doc.replace(doc.find("-9.81"), 5, "0.0");
  const RobotModel arm = load_model(doc);
  Eigen::VectorXd qd0(7);
  qd0 << 0.3, -0.2, 0.4, 0.1, -0.5, 0.2, 0.6;
  auto tau = [](double t) {
    Eigen::VectorXd u(7);
    for(int i = 0; i < 7; ++i) u(i) = (i < 4 ? 2.0 : 0.3) * std::sin(1.3 * t + i);
    return u;
  };
  const oc::EnergyBalance e = oc::energy_balance(arm, arm.ready_posture(), qd0, tau, 5.0, 1e-3);
  const double scale = std::max({std::abs(e.actuator_work), std::abs(e.kinetic_change), 1e-12});
  const double energy_rel = std::abs(e.kinetic_change - e.actuator_work) / scale;
  report("dynamics", pend_err <= 1e-10 && energy_rel <= 1e-3,
         fmt::format("pendulum M/N {:.1e}; 5 s energy balance dT {:.6f} J vs work {:.6f} J (rel {:.1e})", pend_err,
                     e.kinetic_change, e.actuator_work, energy_rel));
}

void observer_decay()
{
  const double dt = 1e-3, k = 1500.0, x0 = 0.1;
  PoseObserver obs;
  obs.reset(Pose::identity());
  Pose target;
  target.position = Vec3(x0, 0, 0);
  double envelope = 0.0;
  for(int i = 1; i <= 1000; ++i)
  {
    obs.set_measurement(target);
    obs.step(obs.feedback(), dt);
    const double err = target.position.x() - obs.state().pose.position.x();
    envelope = std::max(envelope, std::abs(err - oc::critically_damped(x0, k, i * dt)) / x0);
  }

  const double v = 0.1;
  PoseObserver ramp;
  ramp.reset(Pose::identity());
  Pose moving;
  for(int i = 0; i < 2000; ++i)
  {
    moving.position.x() = v * i * dt;
    ramp.set_measurement(moving);
    ramp.step(ramp.feedback(), dt);
  }
  const double lag = moving.position.x() - ramp.state().pose.position.x();
  const double lag_rel = std::abs(lag - oc::ramp_lag(k, v)) / oc::ramp_lag(k, v);
  report("observer decay", envelope <= 0.05 && lag_rel <= 0.02,
         fmt::format("step envelope {:.2f}% of x0; ramp lag {:.4f} mm vs {:.4f} mm ({:.2f}%)", 100 * envelope, 1e3 * lag,
                     1e3 * oc::ramp_lag(k, v), 100 * lag_rel));
}

void hurwitz()
{
  const ObserverGains obs = default_observer_gains();
  const TrackingGains tt = default_tracking_gains();
  const PostureGains pos = PostureGains::defaults(oc::panda());
  const double a_obs = spectral_abscissa(closed_loop_matrix(obs.stiffness, obs.damping));
  const double a_tt = spectral_abscissa(closed_loop_matrix(tt.stiffness, tt.damping));
  const double a_pos = spectral_abscissa(closed_loop_matrix(pos.stiffness, pos.damping));
  // orientation rows act on sin(theta / 2): half the nominal stiffness
  Vec6 half = obs.stiffness;
  half.tail<3>() *= 0.5;
  Vec6 half_tt = tt.stiffness;
  half_tt.tail<3>() *= 0.5;
  const double a_obs_eff = spectral_abscissa(closed_loop_matrix(half, obs.damping));
  const double a_tt_eff = spectral_abscissa(closed_loop_matrix(half_tt, tt.damping));
  report("Hurwitz", std::max({a_obs, a_tt, a_pos, a_obs_eff, a_tt_eff}) < 0.0,
         fmt::format("max Re: A_obs {:.3f}, A_tt {:.3f}, A_pos {:.3f} (effective orientation: {:.3f}, {:.3f})", a_obs, a_tt,
                     a_pos, a_obs_eff, a_tt_eff));
}

void qp_oracle()
{
  oc::Sampler s(1006);
  double worst_obj = 0.0, worst_kkt = 0.0;
  int not_optimal = 0;
  for(int i = 0; i < 100; ++i)
  {
    const oc::DenseQp p = oc::random_qp(s, 20, 30);
    const QpSolution sol = solve_quadratic_program(p.H, p.g, p.A, p.b);
    if(sol.status != QpStatus::optimal) ++not_optimal;
    const oc::OracleResult ref = oc::projected_gradient(p, 1e-12);
    worst_obj = std::max(worst_obj, std::abs(sol.objective - ref.objective) / std::max(1.0, std::abs(ref.objective)));
    worst_kkt = std::max(worst_kkt, oc::kkt(p, sol.x, sol.multipliers).worst());
  }

  // control-cycle QP on the 7-joint layout along an S1 run
  Scenario sc = scenario("s1_fixed_hol");
  sc.duration = 3.0;
  const RunLog log = run_scenario(sc);
  std::vector<double> times;
  GraspSpec grasp = sc.grasp;
  for(std::size_t i = 0; i < log.records.size(); i += 3)
  {
    const CycleRecord & r = log.records[i];
    const JointState st{r.q, r.qdot};
    const auto t0 = Clock::now();
    const CycleOutput out = control_cycle(*sc.model, st, r.observer, r.object, grasp, sc.controller);
    times.push_back(seconds_since(t0));
    if(out.failed) ++not_optimal;
  }
  const double med = median(times);
  report("QP oracle", not_optimal == 0 && worst_obj <= 1e-6 && worst_kkt <= 1e-6 && med < 1e-3,
         fmt::format("100 problems: objective {:.1e} rel, KKT {:.1e}; full control cycle median {:.1f} us over {} cycles",
                     worst_obj, worst_kkt, 1e6 * med, times.size()));
}

void closed_form_equivalence()
{
  const RobotModel & m = oc::panda();
  const DecisionLayout layout(m.dof());
  const TaskWeights w;
  const QpOptions opts;
  oc::Sampler s(1007);
  double obs_err = 0.0, tt_err = 0.0, pos_err = 0.0;
  for(int i = 0; i < 200; ++i)
  {
    TaskState eta;
    eta.error = 0.1 * s.normal_vector(6);
    eta.error_rate = 0.5 * s.normal_vector(6);
    const std::vector<TaskBlock> ob{observation_task_block(eta, default_observer_gains(), layout, w.observation)};
    const QpSolution so = solve_qp(ob, ConstraintSet(layout.size()), opts);
    obs_err = std::max(obs_err, (so.x.segment<6>(layout.obs_acc()) - observer_feedback(eta, default_observer_gains()))
                                    .cwiseAbs()
                                    .maxCoeff());

    const JointState st{s.uniform_vector(m.q_min(), m.q_max()), s.uniform_vector(-m.v_max(), m.v_max())};
    const PostureGains pg = PostureGains::defaults(m);
    const std::vector<TaskBlock> pb{posture_residual(st, pg, layout, w.posture)};
    const QpSolution sp = solve_qp(pb, ConstraintSet(layout.size()), opts);
    const Eigen::VectorXd pd = -(pg.stiffness.cwiseProduct(st.q - pg.reference) + pg.damping.cwiseProduct(st.qdot));
    pos_err = std::max(pos_err, (sp.x.head(m.dof()) - pd).cwiseAbs().maxCoeff());

    FullState grasp = FullState::at_rest(forward_kinematics(m, st.q));
    grasp.pose.position += 0.05 * s.normal_vector(3);
    grasp.pose.orientation = UnitQuaternion::exp(0.2 * Vec3(s.normal_vector(3))) * grasp.pose.orientation;
    grasp.twist = 0.1 * s.normal_vector(6);
    grasp.accel = 0.1 * s.normal_vector(6);
    const TrackingGains tg = default_tracking_gains();
    const std::vector<TaskBlock> tb{tracking_task_residual(m, st, grasp, tg, {}, layout, w.tracking)};
    const QpSolution stt = solve_qp(tb, ConstraintSet(layout.size()), opts);
    // qdd = J+ (-Jdot qdot + grasp accel - K_tt eta_tt), with the solver's tie-break as the damping
    const Eigen::MatrixXd J = jacobian(m, st.q);
    const Vec6 ee_twist = J * st.qdot;
    const TaskState eta_tt = tracking_task_state(forward_kinematics(m, st.q), ee_twist, grasp);
    const Vec6 rhs = -jacobian_dot_times_qdot(m, st.q, st.qdot) + grasp.accel + pd_feedback(eta_tt, tg);
    const Eigen::VectorXd law = damped_pseudo_inverse(J, opts.regularization / w.tracking) * rhs;
    tt_err = std::max(tt_err, (stt.x.head(m.dof()) - law).cwiseAbs().maxCoeff());
  }
  report("closed-form equivalence", obs_err <= 1e-8 && tt_err <= 1e-8 && pos_err <= 1e-8,
         fmt::format("200 states: observation {:.1e}, tracking {:.1e}, posture {:.1e}", obs_err, tt_err, pos_err));
}

struct Trace
{
  std::vector<double> t, position_error, orientation_error;
};

Trace errors_of(const RunLog & log, const Scenario & s)
{
  Trace tr;
  for(const CycleRecord & r : log.records)
  {
    const Pose g = true_grasp(r, s);
    tr.t.push_back(r.t);
    tr.position_error.push_back((r.ee.position - g.position).norm());
    tr.orientation_error.push_back(masked_orientation_error(r.ee, g, s.grasp.mask));
  }
  return tr;
}

/// First time after which `v` stays below `tol` (inf if never).
double settles_at(const std::vector<double> & t, const std::vector<double> & v, double tol)
{
  double at = std::numeric_limits<double>::infinity();
  for(std::size_t i = v.size(); i-- > 0;)
  {
    if(v[i] >= tol) break;
    at = t[i];
  }
  return at;
}

void scenario_s1(std::string & csv_first)
{
  const Scenario s = scenario("s1_fixed_hol");
  const auto t0 = Clock::now();
  const RunLog log = run_scenario(s);
  const double elapsed = seconds_since(t0);
  csv_first = csv_of(log);
  const Trace tr = errors_of(log, s);
  const double pos = tr.position_error.back(), ori = tr.orientation_error.back();
  const double t_pos = settles_at(tr.t, tr.position_error, s.meet.position_tolerance);
  const double t_ori = settles_at(tr.t, tr.orientation_error, s.meet.orientation_tolerance);

  const double t_hol = s.hand_trajectory().end_time();
  const std::size_t i_hol = static_cast<std::size_t>(std::llround(t_hol / s.controller.dt));
  const Vec3 p0 = log.records.front().ee.position;
  const double proactivity =
      (log.records.at(i_hol).ee.position - p0).norm() / (log.records.back().ee.position - p0).norm();

  const bool pass = log.metrics.meet && pos < 0.005 && ori < 3.0 * oc::pi / 180.0 && log.metrics.limit_violations == 0 &&
                    log.metrics.solver_failures == 0 && t_ori < t_pos && proactivity > 0.8 && elapsed < 30.0;
  report("scenario S1", pass,
         fmt::format("meet {} at {:.3f} s; terminal {:.2f} mm / {:.2f} deg; violations {}; orientation settles {:.3f} s, "
                     "position {:.3f} s; proactivity {:.1f}%; {:.2f} s",
                     log.metrics.meet, log.metrics.meet_time, 1e3 * pos, ori * 180.0 / oc::pi, log.metrics.limit_violations,
                     t_ori, t_pos, 100.0 * proactivity, elapsed));
}

void scenario_s2()
{
  const Scenario s = scenario("s2_hol_change");
  const RunLog log = run_scenario(s);
  const HandEvent & change = s.events.at(0);
  const Pose new_grasp = change.goal * s.tracked_offset() * s.grasp.local;
  const CycleRecord & end = log.records.back();
  const double at_new = (end.ee.position - new_grasp.position).norm();
  const bool pass = log.metrics.meet && log.metrics.meet_time > change.time && at_new < 0.005 &&
                    log.metrics.solver_failures == 0;
  report("scenario S2", pass,
         fmt::format("meet {} at {:.3f} s (change at {:.1f} s); end effector {:.2f} mm from the new grasp; solver failures {}",
                     log.metrics.meet, log.metrics.meet_time, change.time, 1e3 * at_new, log.metrics.solver_failures));
}

void scenario_s3()
{
  const Scenario s = scenario("s3_abort");
  const RunLog log = run_scenario(s);
  const double t_abort = s.events.at(0).time;
  double peak_after = 0.0, tail_speed = 0.0;
  for(const CycleRecord & r : log.records)
  {
    if(r.t >= t_abort) peak_after = std::max(peak_after, r.qdot.cwiseAbs().maxCoeff());
    if(r.t >= s.duration - 1.0) tail_speed = std::max(tail_speed, r.qdot.cwiseAbs().maxCoeff());
  }
  // decelerated: the last second runs at no more than 1% of the post-abort peak
  const bool pass = peak_after > 0.0 && tail_speed <= 0.01 * peak_after && log.metrics.limit_violations == 0 && !log.metrics.meet &&
                    log.metrics.solver_failures == 0;
  report("scenario S3", pass,
         fmt::format("abort at {:.1f} s; peak joint speed after abort {:.3f} rad/s, over the last second {:.1e} rad/s; "
                     "violations {}; meet {}",
                     t_abort, peak_after, tail_speed, log.metrics.limit_violations, log.metrics.meet));
}

void scenario_s4()
{
  const Scenario s = scenario("s4_receiver");
  const RunLog log = run_scenario(s);
  const Trace tr = errors_of(log, s);
  const double pos = tr.position_error.back();
  report("scenario S4", pos < 0.005 && log.metrics.solver_failures == 0,
         fmt::format("receiver mode, static hand: terminal {:.2f} mm, {:.2f} deg", 1e3 * pos,
                     tr.orientation_error.back() * 180.0 / oc::pi));
}

void determinism(const std::string & csv_first)
{
  const std::string again = csv_of(run_scenario(scenario("s1_fixed_hol")));
  report("determinism", !csv_first.empty() && again == csv_first,
         fmt::format("two S1 runs, {} bytes of CSV, identical: {}", again.size(), again == csv_first));
}

} // namespace

int main()
{
  quaternion_suite();
  kinematics_suite();
  dynamics_suite();
  observer_decay();
  hurwitz();
  qp_oracle();
  closed_form_equivalence();
  std::string s1_csv;
  scenario_s1(s1_csv);
  scenario_s2();
  scenario_s3();
  scenario_s4();
  determinism(s1_csv);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
