#include <catch2/catch_amalgamated.hpp>

#include <brflow/flow.hpp>
#include <brflow/game.hpp>
#include <brflow/random.hpp>

#include <cmath>
#include <vector>

using Catch::Matchers::WithinAbs;
using namespace brflow;

namespace {

NormalFormGame coordination_2x2() {
  GameShape shape({2, 2});
  Tensor u{1.0, 0.0, 0.0, 2.0};
  return {shape, {u, u}};
}

NormalFormGame coordination_2x3() {
  GameShape shape({2, 3});
  Tensor u{1.0, 0.0, 0.0, 0.0, 2.0, 0.0};
  return {shape, {u, u}};
}

NormalFormGame three_player_shifted() {
  GameShape shape({2, 2, 2});
  Tensor u{1.0, 6.0, 0.0, 0.0, 0.0, 0.0, 2.0, 3.0};
  return {shape, {u, u, u}};
}

NormalFormGame half_tied() {
  GameShape shape({2, 2});
  Tensor u{1.0, 0.0, 1.0, 2.0};
  return {shape, {u, u}};
}

NormalFormGame weighted_random(std::uint64_t seed) {
  GameShape shape({2, 2, 2});
  std::mt19937_64 eng = make_stream(seed, 0);
  Tensor phi(shape.profiles);
  for (double& v : phi) v = uniform_in(eng, -1.0, 1.0);
  const std::vector<double> w{1.0, 2.0, 0.5};
  std::vector<Tensor> u(3, Tensor(shape.profiles));
  for (int i = 0; i < 3; ++i) {
    Tensor off(shape.profiles, 0.0);
    for (std::size_t t = 0; t < shape.profiles; ++t)
      if (shape.profile_of(t)[i] == 0) off[t] = uniform_in(eng, -1.0, 1.0);
    for (std::size_t t = 0; t < shape.profiles; ++t) {
      const std::size_t base = t - shape.strides[i] * static_cast<std::size_t>(shape.profile_of(t)[i]);
      u[static_cast<std::size_t>(i)][t] = w[static_cast<std::size_t>(i)] * phi[t] + off[base];
    }
  }
  return {shape, std::move(u)};
}

}  // namespace

TEST_CASE("straight-line absorption without events") {
  NormalFormGame g = coordination_2x2();
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.9, 0.9));
  REQUIRE(traj.status == FlowStatus::ConvergedPure);
  REQUIRE(traj.switches == 0);
  REQUIRE(traj.segments.size() == 1u);
  REQUIRE(std::isinf(traj.segments[0].duration));
  REQUIRE(std::isinf(traj.end_time));
  REQUIRE(traj.end_point == Eigen::Vector2d(1.0, 1.0));
  // x(t) = 1 - 0.1 exp(-t) in both coordinates
  const Eigen::VectorXd xt = state_at(traj, std::log(2.0));
  REQUIRE_THAT(xt[0], WithinAbs(0.95, 1e-12));
  REQUIRE_THAT(xt[1], WithinAbs(0.95, 1e-12));
  const Eigen::VectorXd x0 = state_at(traj, 0.0);
  REQUIRE_THAT(x0[0], WithinAbs(0.9, 1e-12));

  // starting exactly at a strict equilibrium vertex stays there
  Trajectory fixed = integrate_trajectory(g, Eigen::Vector2d(0.0, 0.0));
  REQUIRE(fixed.status == FlowStatus::ConvergedPure);
  REQUIRE(fixed.end_point == Eigen::Vector2d(0.0, 0.0));
  REQUIRE(fixed.switches == 0);
}

TEST_CASE("one switch with the crossing resolved away from the old target") {
  NormalFormGame g = coordination_2x2();
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.9, 0.2));
  REQUIRE(traj.status == FlowStatus::ConvergedPure);
  REQUIRE(traj.switches == 1);
  REQUIRE(traj.segments.size() == 2u);
  REQUIRE(traj.segments[0].target == std::vector<int>{0, 1});
  REQUIRE_THAT(traj.segments[0].duration, WithinAbs(std::log(1.2), 1e-12));
  REQUIRE(traj.segments[0].events.size() == 1u);
  REQUIRE(traj.segments[0].events[0].player == 0);
  REQUIRE(traj.segments[0].events[0].action == 1);
  REQUIRE_THAT(traj.segments[1].start_point[0], WithinAbs(0.75, 1e-12));
  REQUIRE_THAT(traj.segments[1].start_point[1], WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE(traj.segments[1].target == std::vector<int>{1, 1});
  REQUIRE(traj.end_point == Eigen::Vector2d(1.0, 1.0));

  Trajectory other = integrate_trajectory(g, Eigen::Vector2d(0.2, 0.9));
  REQUIRE(other.status == FlowStatus::ConvergedPure);
  REQUIRE(other.switches == 1);
  REQUIRE_THAT(other.segments[0].duration, WithinAbs(std::log(1.2), 1e-12));
  REQUIRE(other.segments[0].events[0].player == 1);
  REQUIRE_THAT(other.segments[1].start_point[0], WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(other.segments[1].start_point[1], WithinAbs(0.75, 1e-12));
  REQUIRE(other.end_point == Eigen::Vector2d(1.0, 1.0));
}

TEST_CASE("reversal events continue on the incoming side") {
  // player 1 crosses its own indifference surface while flowing toward the
  // second action and must turn back toward the first
  NormalFormGame g = coordination_2x2();
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.1, 0.4));
  REQUIRE(traj.status == FlowStatus::ConvergedPure);
  REQUIRE(traj.switches == 1);
  REQUIRE(traj.segments[0].target == std::vector<int>{1, 0});
  REQUIRE(traj.segments[0].events.size() == 1u);
  REQUIRE(traj.segments[0].events[0].player == 0);
  REQUIRE(traj.segments[0].events[0].action == 0);
  REQUIRE_THAT(traj.segments[1].start_point[0], WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(traj.segments[1].start_point[1], WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE(traj.segments[1].target == std::vector<int>{0, 0});
  REQUIRE(traj.end_point == Eigen::Vector2d(0.0, 0.0));
}

TEST_CASE("stable-manifold starts land on the mixed equilibrium") {
  NormalFormGame g = coordination_2x2();
  Eigen::Vector2d x0(1.0 / 3.0 - 0.2, 1.0 / 3.0 + 0.1);
  Trajectory traj = integrate_trajectory(g, x0);
  REQUIRE(traj.status == FlowStatus::ReachedMixedEquilibrium);
  REQUIRE(traj.segments.size() == 1u);
  REQUIRE_THAT(traj.end_time, WithinAbs(std::log(1.3), 1e-9));
  REQUIRE_THAT(traj.end_point[0], WithinAbs(1.0 / 3.0, 1e-9));
  REQUIRE_THAT(traj.end_point[1], WithinAbs(1.0 / 3.0, 1e-9));
  REQUIRE(traj.segments[0].events.size() == 2u);  // both players tie at once

  // starting exactly at the mixed equilibrium stops immediately
  Trajectory fixed = integrate_trajectory(g, Eigen::Vector2d(1.0 / 3.0, 1.0 / 3.0));
  REQUIRE(fixed.status == FlowStatus::ReachedMixedEquilibrium);
  REQUIRE(fixed.end_time == 0.0);
  REQUIRE(fixed.segments.empty());
}

TEST_CASE("three-action target switch") {
  NormalFormGame g = coordination_2x3();
  Eigen::Vector3d x0(0.5, 0.1, 0.1);
  Trajectory traj = integrate_trajectory(g, x0);
  REQUIRE(traj.status == FlowStatus::ConvergedPure);
  REQUIRE(traj.switches == 1);
  REQUIRE(traj.segments[0].target == std::vector<int>{0, 1});
  REQUIRE_THAT(traj.segments[0].duration, WithinAbs(std::log(1.3), 1e-12));
  REQUIRE(traj.segments[0].events[0].player == 0);
  REQUIRE(traj.segments[0].events[0].action == 1);
  REQUIRE(traj.segments[1].target == std::vector<int>{1, 1});
  REQUIRE(traj.end_point == vertex_point(g.shape, {1, 1}));
}

TEST_CASE("tie points that verify as equilibria stop the flow") {
  NormalFormGame g = half_tied();
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.2, 0.0));
  REQUIRE(traj.status == FlowStatus::ReachedMixedEquilibrium);
  REQUIRE(traj.end_time == 0.0);
  REQUIRE(traj.end_point == Eigen::Vector2d(0.2, 0.0));
}

TEST_CASE("unresolvable ties report a degenerate point") {
  // player 1 is indifferent everywhere, so no candidate target is ever the
  // unique best response of its own future
  GameShape shape({2, 2});
  NormalFormGame g(shape, {Tensor{1.0, 1.0, 1.0, 1.0}, Tensor{1.0, 0.0, 0.0, 2.0}});
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.5, 0.2));
  REQUIRE(traj.status == FlowStatus::ReachedDegeneratePoint);
  REQUIRE(traj.end_time == 0.0);
  REQUIRE(traj.end_point == Eigen::Vector2d(0.5, 0.2));
}

TEST_CASE("time and switch budgets truncate honestly") {
  NormalFormGame g = coordination_2x2();
  FlowOptions tight;
  tight.t_max = 0.1;
  Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.9, 0.2), tight);
  REQUIRE(traj.status == FlowStatus::MaxTimeExceeded);
  REQUIRE(traj.end_time == 0.1);
  REQUIRE(traj.segments.size() == 1u);
  REQUIRE(traj.segments[0].duration == 0.1);
  REQUIRE_THAT(traj.end_point[0], WithinAbs(0.9 * std::exp(-0.1), 1e-12));
  REQUIRE_THAT(traj.end_point[1], WithinAbs(1.0 - 0.8 * std::exp(-0.1), 1e-12));

  FlowOptions noswitch;
  noswitch.max_switches = 0;
  Trajectory cut = integrate_trajectory(g, Eigen::Vector2d(0.9, 0.2), noswitch);
  REQUIRE(cut.status == FlowStatus::MaxSwitchesExceeded);
  REQUIRE(cut.segments.size() == 1u);
  REQUIRE_THAT(cut.end_point[0], WithinAbs(0.75, 1e-12));
}

TEST_CASE("trajectory invariants on example and weighted games") {
  std::vector<NormalFormGame> games{coordination_2x2(), coordination_2x3(), three_player_shifted(),
                                    weighted_random(11), weighted_random(12), weighted_random(13)};
  for (std::size_t gi = 0; gi < games.size(); ++gi) {
    const NormalFormGame& g = games[gi];
    const auto decomp = infer_potential(g);
    REQUIRE(decomp.has_value());
    std::mt19937_64 eng = make_stream(9000, gi);
    for (int rep = 0; rep < 8; ++rep) {
      const Eigen::VectorXd x0 = sample_point(g.shape, eng);
      const Trajectory traj = integrate_trajectory(g, x0);
      INFO("game " << gi << " rep " << rep);
      REQUIRE((traj.status == FlowStatus::ConvergedPure || traj.status == FlowStatus::ReachedMixedEquilibrium));
      if (gi < 3) REQUIRE(traj.switches <= 5);

      double last_potential = -std::numeric_limits<double>::infinity();
      for (const TrajectorySegment& seg : traj.segments) {
        const double horizon = std::isfinite(seg.duration) ? seg.duration : 5.0;
        for (double frac : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
          const double t = seg.start_time + frac * horizon;
          const Eigen::VectorXd xt = segment_state(seg, t);
          REQUIRE(in_domain(g.shape, xt, 1e-12));
          // potential is a Lyapunov function
          const double pot = eval_multilinear(g.shape, decomp->potential, xt);
          REQUIRE(pot >= last_potential - 1e-10);
          last_potential = pot;
          // exact dynamics: dx/dt equals target minus state
          const double h = 1e-7;
          const Eigen::VectorXd fd = (segment_state(seg, t + h) - segment_state(seg, t - h)) / (2.0 * h);
          REQUIRE((fd - (seg.target_point - xt)).lpNorm<Eigen::Infinity>() <= 1e-6);
          // the target profile is optimal on the segment interior
          if (frac > 0.0) {
            for (int i = 0; i < g.shape.num_players(); ++i) {
              const Eigen::VectorXd v = action_values(g.shape, g.payoffs[static_cast<std::size_t>(i)], i, xt);
              REQUIRE(v[seg.target[static_cast<std::size_t>(i)]] >= v.maxCoeff() - 1e-9);
            }
          }
        }
        if (std::isfinite(seg.duration)) {
          // integrating the segment backwards recovers its start
          const Eigen::VectorXd xe = segment_state(seg, seg.start_time + seg.duration);
          const Eigen::VectorXd back =
              seg.target_point + (xe - seg.target_point) * std::exp(seg.duration);
          REQUIRE((back - seg.start_point).lpNorm<Eigen::Infinity>() <= 1e-9);
          // events really are payoff ties
          for (const FlowEvent& ev : seg.events) {
            const Eigen::VectorXd v =
                action_values(g.shape, g.payoffs[static_cast<std::size_t>(ev.player)], ev.player, xe);
            REQUIRE_THAT(v[ev.action], WithinAbs(v[seg.target[static_cast<std::size_t>(ev.player)]], 1e-9));
          }
        }
      }
    }
  }
}

TEST_CASE("integration is deterministic") {
  NormalFormGame g = three_player_shifted();
  std::mt19937_64 eng = make_stream(9100, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x0 = sample_point(g.shape, eng);
    const Trajectory a = integrate_trajectory(g, x0);
    const Trajectory b = integrate_trajectory(g, x0);
    REQUIRE(a.segments.size() == b.segments.size());
    REQUIRE(a.end_point == b.end_point);
    REQUIRE(a.end_time == b.end_time);
    for (std::size_t k = 0; k < a.segments.size(); ++k) {
      REQUIRE(a.segments[k].duration == b.segments[k].duration);
      REQUIRE(a.segments[k].start_point == b.segments[k].start_point);
    }
  }
}

TEST_CASE("rate estimation recovers the unit decay exactly") {
  NormalFormGame g = coordination_2x2();
  const Trajectory traj = integrate_trajectory(g, Eigen::Vector2d(0.9, 0.2));
  const auto est = estimate_convergence_rate(traj);
  REQUIRE(est.has_value());
  REQUIRE_THAT(est->rho, WithinAbs(1.0, 1e-6));
  REQUIRE_THAT(est->t_last_switch, WithinAbs(std::log(1.2), 1e-12));
  // prefactor is attained at the switch point here
  const double expected_c = 1.2 * (Eigen::Vector2d(0.75, 1.0 / 3.0) - Eigen::Vector2d(1.0, 1.0)).norm();
  REQUIRE_THAT(est->c, WithinAbs(expected_c, 1e-9));
  // and the bound holds along the whole trajectory
  for (double t = 0.0; t <= 5.0; t += 0.05) {
    const double d = (state_at(traj, t) - traj.end_point).norm();
    REQUIRE(d <= est->c * std::exp(-est->rho * t) + 1e-9);
  }

  const Trajectory mixed = integrate_trajectory(g, Eigen::Vector2d(1.0 / 3.0 - 0.2, 1.0 / 3.0 + 0.1));
  REQUIRE_FALSE(estimate_convergence_rate(mixed).has_value());
}

TEST_CASE("discrete fictitious-play updates contract harmonically") {
  NormalFormGame g = coordination_2x2();
  const int steps = 99;
  const EulerResult run = euler_fictitious_play(g, Eigen::Vector2d(0.9, 0.9), steps);
  REQUIRE(run.points.size() == static_cast<std::size_t>(steps) + 1);
  // the target never changes, so the gap scales by exactly 1/(N+1)
  const double expected = 0.1 / static_cast<double>(steps + 1);
  REQUIRE_THAT((run.points.back() - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>(),
               WithinAbs(expected, 1e-12));

  const EulerResult far = euler_fictitious_play(g, Eigen::Vector2d(0.9, 0.2), 5000);
  REQUIRE((far.points.back() - Eigen::Vector2d(1.0, 1.0)).norm() < 0.01);
}
