#pragma once

// Continuous-time best-response dynamics integrated exactly: between events
// every player relaxes toward a fixed pure best response, so the state is an
// explicit exponential curve. Events are the times at which some player's
// best response stops being unique; they are located by sign-bracketed
// bisection on payoff differences along the segment.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "game.hpp"

namespace brflow {

struct FlowOptions {
  double t_max = 100.0;
  double tie_tol = 1e-9;      // payoff ties for best-response sets
  double cross_eps = 1e-6;    // probe time used to test candidate targets at a tie
  double event_tol = 1e-14;   // bisection width on s = exp(-dt)
  double eq_stop_tol = 1e-9;  // equilibrium gap that stops the flow at a tie point
  int grid_cells = 64;        // sign-scan resolution along a segment
  int max_bisections = 200;
  int max_switches = 1000;
};

enum class FlowStatus {
  ConvergedPure,             // absorbed into a pure profile
  ReachedMixedEquilibrium,   // hit a tie point that verifies as an equilibrium
  ReachedDegeneratePoint,    // tie point with no single consistent continuation
  MaxSwitchesExceeded,
  MaxTimeExceeded,
};

/// A challenger action that reached the segment target's payoff.
struct FlowEvent {
  int player = -1;
  int action = -1;
};

struct TrajectorySegment {
  double start_time = 0.0;
  double duration = 0.0;  // +infinity for an absorbing tail
  Eigen::VectorXd start_point;
  std::vector<int> target;  // pure profile every player relaxes toward
  Eigen::VectorXd target_point;
  std::vector<FlowEvent> events;  // what ended the segment (empty for tail or truncation)
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
  FlowStatus status = FlowStatus::MaxTimeExceeded;
  double end_time = 0.0;      // +infinity when absorbed
  Eigen::VectorXd end_point;  // limit point when absorbed, final state otherwise
  int switches = 0;
};

/// State on a segment at absolute time t: exponential relaxation toward the
/// target vertex.
inline Eigen::VectorXd segment_state(const TrajectorySegment& seg, double t) {
  if (t == seg.start_time) return seg.start_point;  // exact at the segment's own start
  return seg.target_point + (seg.start_point - seg.target_point) * std::exp(-(t - seg.start_time));
}

inline Eigen::VectorXd state_at(const Trajectory& traj, double t) {
  for (const TrajectorySegment& seg : traj.segments)
    if (t - seg.start_time <= seg.duration) return segment_state(seg, t);
  return traj.end_point;  // flow is frozen once it stops
}

namespace detail {

struct EventHit {
  double s = -1.0;  // e^{-dt} of the earliest event; larger s is earlier
  std::vector<FlowEvent> events;
};

/// Earliest event along the segment from x0 toward vertex a of profile
/// `target`: the largest s in (0, 1) where some challenger's payoff reaches
/// the target action's payoff. The top of the scan stays strictly below one
/// so a tie just resolved at the segment start is not re-detected.
inline std::optional<EventHit> next_event(const NormalFormGame& g, const Eigen::VectorXd& x0,
                                          const std::vector<int>& target, const Eigen::VectorXd& a,
                                          const FlowOptions& o) {
  const GameShape& shape = g.shape;
  const double s_hi = 1.0 - 1e-12;
  const int cells = o.grid_cells;
  std::vector<std::vector<Eigen::VectorXd>> vals(static_cast<std::size_t>(cells) + 1);
  for (int j = 0; j <= cells; ++j) {
    const double sj = s_hi * static_cast<double>(j) / static_cast<double>(cells);
    const Eigen::VectorXd xj = a + (x0 - a) * sj;
    auto& per_player = vals[static_cast<std::size_t>(j)];
    per_player.reserve(static_cast<std::size_t>(shape.num_players()));
    for (int i = 0; i < shape.num_players(); ++i)
      per_player.push_back(action_values(shape, g.payoffs[static_cast<std::size_t>(i)], i, xj));
  }
  EventHit best;
  std::vector<std::pair<double, FlowEvent>> roots;
  for (int i = 0; i < shape.num_players(); ++i) {
    const Tensor& u = g.payoffs[static_cast<std::size_t>(i)];
    for (int b = 0; b < shape.counts[i]; ++b) {
      if (b == target[static_cast<std::size_t>(i)]) continue;
      const auto h_grid = [&](int j) {
        return vals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][b] -
               vals[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][target[static_cast<std::size_t>(i)]];
      };
      const auto h_at = [&](double sv) {
        const Eigen::VectorXd xs = a + (x0 - a) * sv;
        return eval_multilinear(shape, u, xs, Pin{i, b}) -
               eval_multilinear(shape, u, xs, Pin{i, target[static_cast<std::size_t>(i)]});
      };
      for (int k = cells - 1; k >= 0; --k) {
        if (!(h_grid(k + 1) < 0.0 && h_grid(k) >= 0.0)) continue;
        double lo = s_hi * static_cast<double>(k) / static_cast<double>(cells);      // h >= 0, later event side
        double hi = s_hi * static_cast<double>(k + 1) / static_cast<double>(cells);  // h < 0, earlier in time
        for (int it = 0; it < o.max_bisections && hi - lo > o.event_tol; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (h_at(mid) < 0.0)
            hi = mid;
          else
            lo = mid;
        }
        roots.emplace_back(0.5 * (lo + hi), FlowEvent{i, b});
        break;
      }
    }
  }
  for (const auto& [s, ev] : roots) best.s = std::max(best.s, s);
  if (best.s < 0.0) return std::nullopt;
  for (const auto& [s, ev] : roots)
    if (s >= best.s - 1e-12) best.events.push_back(ev);
  return best;
}

/// Unique pure best-response profile at x, if every player's set is a
/// singleton.
inline std::optional<std::vector<int>> unique_target(const NormalFormGame& g, const Eigen::VectorXd& x,
                                                     double tie_tol) {
  std::vector<int> target(static_cast<std::size_t>(g.shape.num_players()));
  for (int i = 0; i < g.shape.num_players(); ++i) {
    const std::vector<int> br = best_response_set(g, i, x, tie_tol);
    if (br.size() != 1) return std::nullopt;
    target[static_cast<std::size_t>(i)] = br[0];
  }
  return target;
}

}  // namespace detail

/// Pure profile the flow moves toward from x, when unambiguous.
inline std::optional<std::vector<int>> best_response_target(const NormalFormGame& g, const Eigen::VectorXd& x,
                                                            double tie_tol = 1e-9) {
  return detail::unique_target(g, x, tie_tol);
}

/// Integrate the best-response flow from x0 as exact exponential segments.
/// At a tie point the flow stops if the point verifies as an equilibrium;
/// otherwise each selection of tied best responses is probed a short time
/// forward and the flow continues only when exactly one selection remains a
/// best response of its own future.
inline Trajectory integrate_trajectory(const NormalFormGame& g, const Eigen::VectorXd& x0,
                                       const FlowOptions& o = {}) {
  const GameShape& shape = g.shape;
  Trajectory traj;
  Eigen::VectorXd x = x0;
  double t = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  while (true) {
    if (traj.switches > o.max_switches) {
      traj.status = FlowStatus::MaxSwitchesExceeded;
      break;
    }
    std::vector<int> target;
    if (auto unique = detail::unique_target(g, x, o.tie_tol)) {
      target = *unique;
    } else {
      if (verify_equilibrium(g, x, o.eq_stop_tol)) {
        traj.status = carrier_of(shape, x, o.tie_tol).is_pure() ? FlowStatus::ConvergedPure
                                                                : FlowStatus::ReachedMixedEquilibrium;
        break;
      }
      // enumerate the selections of tied best responses and keep the
      // self-consistent ones
      std::vector<std::vector<int>> br(static_cast<std::size_t>(shape.num_players()));
      for (int i = 0; i < shape.num_players(); ++i) br[static_cast<std::size_t>(i)] = best_response_set(g, i, x, o.tie_tol);
      std::vector<std::vector<int>> consistent;
      std::vector<std::size_t> pick(static_cast<std::size_t>(shape.num_players()), 0);
      while (true) {
        std::vector<int> cand(static_cast<std::size_t>(shape.num_players()));
        for (int i = 0; i < shape.num_players(); ++i)
          cand[static_cast<std::size_t>(i)] = br[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
        const Eigen::VectorXd va = vertex_point(shape, cand);
        const Eigen::VectorXd probe = va + (x - va) * std::exp(-o.cross_eps);
        if (auto next = detail::unique_target(g, probe, o.tie_tol); next && *next == cand)
          consistent.push_back(cand);
        int i = shape.num_players() - 1;
        for (; i >= 0; --i) {
          if (++pick[static_cast<std::size_t>(i)] < br[static_cast<std::size_t>(i)].size()) break;
          pick[static_cast<std::size_t>(i)] = 0;
        }
        if (i < 0) break;
      }
      if (consistent.size() != 1) {
        traj.status = FlowStatus::ReachedDegeneratePoint;
        break;
      }
      target = consistent.front();
    }

    TrajectorySegment seg;
    seg.start_time = t;
    seg.start_point = x;
    seg.target = target;
    seg.target_point = vertex_point(shape, target);

    const auto hit = detail::next_event(g, x, target, seg.target_point, o);
    if (!hit) {
      seg.duration = inf;
      traj.segments.push_back(std::move(seg));
      traj.status = FlowStatus::ConvergedPure;
      traj.end_time = inf;
      traj.end_point = traj.segments.back().target_point;
      return traj;
    }
    const double dt = -std::log(hit->s);
    if (t + dt >= o.t_max) {
      seg.duration = o.t_max - t;
      x = seg.target_point + (x - seg.target_point) * std::exp(-(o.t_max - t));
      t = o.t_max;
      traj.segments.push_back(std::move(seg));
      traj.status = FlowStatus::MaxTimeExceeded;
      break;
    }
    seg.duration = dt;
    seg.events = hit->events;
    x = seg.target_point + (x - seg.target_point) * hit->s;
    t += dt;
    traj.segments.push_back(std::move(seg));
    ++traj.switches;
  }
  traj.end_time = t;
  traj.end_point = x;
  return traj;
}

/// Least-squares decay estimate for a trajectory absorbed into a pure
/// equilibrium, plus the smallest prefactor c that makes
/// dist(x(t), x*) <= c * exp(-rho * t) hold at every segment endpoint.
struct RateEstimate {
  double rho = 0.0;
  double c = 0.0;
  double t_last_switch = 0.0;
};

inline std::optional<RateEstimate> estimate_convergence_rate(const Trajectory& traj, double fit_horizon = 10.0,
                                                             int fit_samples = 50) {
  if (traj.status != FlowStatus::ConvergedPure || traj.segments.empty()) return std::nullopt;
  const Eigen::VectorXd& star = traj.end_point;
  const TrajectorySegment& tail = traj.segments.back();
  RateEstimate est;
  est.t_last_switch = tail.start_time;

  // slope of log-distance over the absorbing tail
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int used = 0;
  for (int k = 0; k < fit_samples; ++k) {
    const double t = tail.start_time + fit_horizon * (static_cast<double>(k) + 0.5) / static_cast<double>(fit_samples);
    const double d = (segment_state(tail, t) - star).norm();
    if (d <= 0.0) continue;
    const double y = std::log(d);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++used;
  }
  if (used < 2) return std::nullopt;
  const double n = static_cast<double>(used);
  est.rho = -(n * sxy - sx * sy) / (n * sxx - sx * sx);

  // the distance is convex in e^{-t} on every segment, so the prefactor is
  // attained at a segment endpoint
  double c = 0.0;
  for (const TrajectorySegment& seg : traj.segments) {
    c = std::max(c, std::exp(seg.start_time) * (seg.start_point - star).norm());
    if (std::isfinite(seg.duration)) {
      const double t_end = seg.start_time + seg.duration;
      c = std::max(c, std::exp(t_end) * (segment_state(seg, t_end) - star).norm());
    }
  }
  est.c = c;
  return est;
}

/// Discrete fictitious-play style update x_{n+1} = x_n + alpha_n (b_n - x_n)
/// with b_n the lowest-index pure best response and alpha_n = 1/(n+2).
struct EulerResult {
  std::vector<Eigen::VectorXd> points;  // x_0 .. x_N
};

inline EulerResult euler_fictitious_play(const NormalFormGame& g, const Eigen::VectorXd& x0, int steps,
                                         double tie_tol = 1e-9) {
  EulerResult out;
  out.points.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd x = x0;
  out.points.push_back(x);
  for (int n = 0; n < steps; ++n) {
    std::vector<int> b(static_cast<std::size_t>(g.shape.num_players()));
    for (int i = 0; i < g.shape.num_players(); ++i)
      b[static_cast<std::size_t>(i)] = best_response_set(g, i, x, tie_tol).front();
    const Eigen::VectorXd v = vertex_point(g.shape, b);
    const double alpha = 1.0 / (static_cast<double>(n) + 2.0);
    x = x + alpha * (v - x);
    out.points.push_back(x);
  }
  return out;
}

}  // namespace brflow
