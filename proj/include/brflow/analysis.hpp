#pragma once

// Desk-scale experiments on top of the core: projection onto the indifference
// manifold of a mixed equilibrium, reduced games, curvature/drift/tangency
// probes, basin sampling, boundary bisection, volume contraction, and a
// genericity census over randomly generated potential games.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "equilibrium.hpp"
#include "flow.hpp"
#include "game.hpp"
#include "random.hpp"

namespace brflow {

/// The game induced on the mixing players' carrier actions, with every other
/// player pinned to its carrier action. Entries are copied verbatim from the
/// parent tensors.
struct ReducedGame {
  std::vector<int> players;  // original indices of the mixing players
  NormalFormGame game;
  Tensor potential;
};

inline ReducedGame reduced_game(const NormalFormGame& g, const Tensor& potential, const Carrier& carrier) {
  const GameShape& s = g.shape;
  if (potential.size() != s.profiles) throw std::invalid_argument("potential tensor size does not match shape");
  ReducedGame out;
  std::vector<int> counts;
  for (int i = 0; i < s.num_players(); ++i)
    if (carrier.supports[static_cast<std::size_t>(i)].size() > 1) {
      out.players.push_back(i);
      counts.push_back(static_cast<int>(carrier.supports[static_cast<std::size_t>(i)].size()));
    }
  if (counts.empty()) throw std::invalid_argument("carrier has no mixing players");
  GameShape rs(counts);
  std::vector<Tensor> payoffs(out.players.size(), Tensor(rs.profiles));
  out.potential.resize(rs.profiles);
  for (std::size_t rt = 0; rt < rs.profiles; ++rt) {
    const std::vector<int> rp = rs.profile_of(rt);
    std::vector<int> full(static_cast<std::size_t>(s.num_players()));
    for (int i = 0; i < s.num_players(); ++i) full[static_cast<std::size_t>(i)] = carrier.supports[static_cast<std::size_t>(i)][0];
    for (std::size_t q = 0; q < out.players.size(); ++q) {
      const int i = out.players[q];
      full[static_cast<std::size_t>(i)] = carrier.supports[static_cast<std::size_t>(i)][static_cast<std::size_t>(rp[q])];
    }
    const std::size_t ft = s.flat_index(full);
    out.potential[rt] = potential[ft];
    for (std::size_t q = 0; q < out.players.size(); ++q)
      payoffs[q][rt] = g.payoffs[static_cast<std::size_t>(out.players[q])][ft];
  }
  out.game = NormalFormGame(rs, std::move(payoffs));
  return out;
}

/// Everything needed to project points near a mixed equilibrium onto its
/// carrier face along the solved indifference manifold.
struct ProjectionContext {
  const NormalFormGame* game = nullptr;
  const Tensor* potential = nullptr;
  CarrierSystem sys;
  Eigen::VectorXd star;    // the equilibrium, full reduced coordinates
  Eigen::VectorXd star_z;  // its free (carrier) coordinates
  ReducedGame reduced;
  SolveOptions opts;

  static ProjectionContext make(const NormalFormGame& g, const Tensor& potential,
                                const EquilibriumRecord& rec, const SolveOptions& o = {}) {
    ProjectionContext ctx;
    ctx.game = &g;
    ctx.potential = &potential;
    ctx.sys = CarrierSystem::make(g, rec.carrier);
    if (ctx.sys.free_dim() == 0) throw std::invalid_argument("projection needs a mixed equilibrium");
    ctx.star = rec.point;
    ctx.star_z = free_coords(ctx.sys, rec.point);
    ctx.reduced = reduced_game(g, potential, rec.carrier);
    ctx.opts = o;
    return ctx;
  }

  /// Weights of the free carrier coordinates at x.
  static Eigen::VectorXd free_coords(const CarrierSystem& sys, const Eigen::VectorXd& x) {
    Eigen::VectorXd z(sys.free_dim());
    for (int k = 0; k < sys.free_dim(); ++k) {
      const auto [i, a] = sys.vars[static_cast<std::size_t>(k)];
      z[k] = x[sys.game->shape.offsets[i] + a - 1];  // carrier actions beyond the base are never action 0
    }
    return z;
  }

  /// Off-carrier weights at x.
  static Eigen::VectorXd off_coords(const CarrierSystem& sys, const Eigen::VectorXd& x) {
    Eigen::VectorXd xp(sys.off_dim());
    for (int k = 0; k < sys.off_dim(); ++k) {
      const auto [i, a] = sys.off[static_cast<std::size_t>(k)];
      xp[k] = player_weights(sys.game->shape, x, i)[a];
    }
    return xp;
  }
};

/// Solve the mixing players' indifference system with the off-carrier weights
/// held at xp, starting from the equilibrium's own coordinates. Empty when xp
/// leaves the domain of the implicit map; throws when the system is singular.
inline std::optional<Eigen::VectorXd> projection_g(const ProjectionContext& ctx, const Eigen::VectorXd& xp) {
  const CarrierSystem& sys = ctx.sys;
  Eigen::VectorXd z = ctx.star_z;
  for (int it = 0; it < ctx.opts.max_iters; ++it) {
    const Eigen::VectorXd f = sys.residual(z, xp);
    if (f.lpNorm<Eigen::Infinity>() <= ctx.opts.solve_tol) {
      if (!in_domain(ctx.game->shape, sys.embed(z, xp), 1e-9)) return std::nullopt;
      return z;
    }
    const Eigen::MatrixXd jac = sys.jacobian_at(sys.embed(z, xp));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) throw std::runtime_error("projection system is singular");
    const Eigen::VectorXd step = lu.solve(-f);
    const double f0 = f.norm();
    double lam = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd zc = z + lam * step;
      if (sys.residual(zc, xp).norm() < f0) {
        z = zc;
        moved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!moved) return std::nullopt;
  }
  return std::nullopt;
}

/// P(x) in the free coordinates: the equilibrium's own coordinates plus the
/// defect of x against the solved manifold at x's off-carrier weights.
inline std::optional<Eigen::VectorXd> projection_point(const ProjectionContext& ctx, const Eigen::VectorXd& x) {
  const Eigen::VectorXd xp = ProjectionContext::off_coords(ctx.sys, x);
  const auto gz = projection_g(ctx, xp);
  if (!gz) return std::nullopt;
  return ctx.star_z + (ProjectionContext::free_coords(ctx.sys, x) - *gz);
}

/// P(x) embedded back into the full game with off-carrier weights exactly
/// zero.
inline std::optional<Eigen::VectorXd> projection_embed(const ProjectionContext& ctx, const Eigen::VectorXd& x) {
  const auto p = projection_point(ctx, x);
  if (!p) return std::nullopt;
  return ctx.sys.embed(*p, Eigen::VectorXd::Zero(ctx.sys.off_dim()));
}

/// Curvature and drift constants of the projected potential near the
/// equilibrium, measured on a deterministic ring of directions:
///   c1: largest |potential gap| / distance^2,
///   c2: smallest (d/dt potential along the flow) / distance.
struct InequalityProbe {
  double c1 = 0.0;
  double c2 = std::numeric_limits<double>::infinity();
  int used = 0;
};

inline InequalityProbe inequality_probe(const ProjectionContext& ctx, double radius = 1e-3,
                                        int extra_dirs = 8, std::uint64_t seed = 777) {
  const NormalFormGame& g = *ctx.game;
  const int dim = g.shape.dim;
  std::vector<Eigen::VectorXd> dirs;
  for (int c = 0; c < dim; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[c] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  const double inv = 1.0 / std::sqrt(2.0);
  for (int c = 0; c < dim; ++c)
    for (int d = c + 1; d < dim; ++d)
      for (double sc : {1.0, -1.0})
        for (double sd : {1.0, -1.0}) {
          Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
          e[c] = sc * inv;
          e[d] = sd * inv;
          dirs.push_back(e);
        }
  std::mt19937_64 eng = make_stream(seed, 0);
  for (int k = 0; k < extra_dirs; ++k) {
    Eigen::VectorXd e(dim);
    for (int c = 0; c < dim; ++c) e[c] = 2.0 * uniform01(eng) - 1.0;
    if (e.norm() < 1e-6) continue;
    dirs.push_back(e / e.norm());
  }

  InequalityProbe out;
  const double u_star = eval_multilinear(ctx.reduced.game.shape, ctx.reduced.potential, ctx.star_z);
  const double h = 1e-6;
  for (const Eigen::VectorXd& dir : dirs) {
    const Eigen::VectorXd x = ctx.star + radius * dir;
    if (!in_domain(g.shape, x)) continue;
    const auto p = projection_point(ctx, x);
    if (!p) continue;
    const double d = (x - ctx.star).norm();
    const double u_p = eval_multilinear(ctx.reduced.game.shape, ctx.reduced.potential, *p);
    out.c1 = std::max(out.c1, std::abs(u_star - u_p) / (d * d));

    const auto target = best_response_target(g, x);
    if (!target) continue;  // on a tie surface, the flow direction is ambiguous
    const Eigen::VectorXd xdot = vertex_point(g.shape, *target) - x;
    // chain rule through P with a central-difference Jacobian
    Eigen::VectorXd jp_xdot = Eigen::VectorXd::Zero(ctx.sys.free_dim());
    bool ok = true;
    for (int c = 0; c < dim && ok; ++c) {
      if (xdot[c] == 0.0) continue;
      Eigen::VectorXd xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      const auto pp = projection_point(ctx, xp);
      const auto pm = projection_point(ctx, xm);
      if (!pp || !pm) {
        ok = false;
        break;
      }
      jp_xdot += (*pp - *pm) / (2.0 * h) * xdot[c];
    }
    if (!ok) continue;
    const Eigen::VectorXd grad = potential_gradient(ctx.reduced.game.shape, ctx.reduced.potential, *p);
    out.c2 = std::min(out.c2, grad.dot(jp_xdot) / d);
    ++out.used;
  }
  return out;
}

/// Points of the surface where player's two actions tie, solved along one
/// reduced coordinate by bisection from each supplied context point.
inline std::vector<Eigen::VectorXd> sample_indifference_surface(const NormalFormGame& g, int player,
                                                                int action_a, int action_b, int coord,
                                                                const std::vector<Eigen::VectorXd>& contexts,
                                                                double tol = 1e-12) {
  const GameShape& s = g.shape;
  if (coord < 0 || coord >= s.dim) throw std::invalid_argument("coordinate out of range");
  const Tensor& u = g.payoffs[static_cast<std::size_t>(player)];
  std::vector<Eigen::VectorXd> out;
  for (const Eigen::VectorXd& ctx : contexts) {
    const auto h = [&](double v) {
      Eigen::VectorXd x = ctx;
      x[coord] = v;
      return eval_multilinear(s, u, x, Pin{player, action_b}) - eval_multilinear(s, u, x, Pin{player, action_a});
    };
    // keep the coordinate's own simplex block feasible
    int owner = 0;
    while (owner + 1 < s.num_players() && s.offsets[owner + 1] <= coord) ++owner;
    double block = 0.0;
    for (int a = 1; a < s.counts[owner]; ++a)
      if (s.offsets[owner] + a - 1 != coord) block += ctx[s.offsets[owner] + a - 1];
    double lo = 0.0, hi = 1.0 - block;
    if (hi <= lo) continue;
    double flo = h(lo), fhi = h(hi);
    if (flo == 0.0) {
      Eigen::VectorXd x = ctx;
      x[coord] = lo;
      out.push_back(x);
      continue;
    }
    if (flo * fhi > 0.0) continue;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      const double fm = h(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0))
        lo = mid;
      else
        hi = mid;
    }
    Eigen::VectorXd x = ctx;
    x[coord] = 0.5 * (lo + hi);
    out.push_back(x);
  }
  return out;
}

/// At a point where `player` is indifferent between two actions, test whether
/// every selection of tied best responses moves tangentially to that
/// indifference surface.
struct TangencyProbe {
  Eigen::VectorXd normal;      // unit gradient of the payoff difference
  std::vector<double> inner;   // normal . (a - x), one entry per selection
  double max_abs_inner = 0.0;
  bool tangential = false;
};

inline TangencyProbe tangency_probe(const NormalFormGame& g, const Eigen::VectorXd& x, int player,
                                    int action_a, int action_b, double tie_tol = 1e-9, double tol = 1e-6) {
  const GameShape& s = g.shape;
  const Tensor& u = g.payoffs[static_cast<std::size_t>(player)];
  const double h = 1e-6;
  Eigen::VectorXd normal(s.dim);
  for (int c = 0; c < s.dim; ++c) {
    Eigen::VectorXd xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const auto diff = [&](const Eigen::VectorXd& xx) {
      return eval_multilinear(s, u, xx, Pin{player, action_b}) - eval_multilinear(s, u, xx, Pin{player, action_a});
    };
    normal[c] = (diff(xp) - diff(xm)) / (2.0 * h);
  }
  TangencyProbe out;
  const double norm = normal.norm();
  if (norm == 0.0) throw std::runtime_error("payoff difference has a vanishing gradient");
  out.normal = normal / norm;

  std::vector<std::vector<int>> br(static_cast<std::size_t>(s.num_players()));
  for (int i = 0; i < s.num_players(); ++i) br[static_cast<std::size_t>(i)] = best_response_set(g, i, x, tie_tol);
  std::vector<std::size_t> pick(static_cast<std::size_t>(s.num_players()), 0);
  while (true) {
    std::vector<int> sel(static_cast<std::size_t>(s.num_players()));
    for (int i = 0; i < s.num_players(); ++i)
      sel[static_cast<std::size_t>(i)] = br[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
    const Eigen::VectorXd z = vertex_point(s, sel) - x;
    out.inner.push_back(out.normal.dot(z));
    int i = s.num_players() - 1;
    for (; i >= 0; --i) {
      if (++pick[static_cast<std::size_t>(i)] < br[static_cast<std::size_t>(i)].size()) break;
      pick[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
  for (double v : out.inner) out.max_abs_inner = std::max(out.max_abs_inner, std::abs(v));
  out.tangential = out.max_abs_inner < tol;
  return out;
}

/// Outcome bucket of a trajectory against a list of equilibria: the record
/// index, or a negative code.
constexpr int kOutcomeDegenerate = -1;
constexpr int kOutcomeMaxTime = -2;
constexpr int kOutcomeMaxSwitches = -3;
constexpr int kOutcomeUnmatched = -4;

inline int outcome_record_index(const Trajectory& traj, const std::vector<EquilibriumRecord>& records,
                                double match_tol = 1e-7) {
  switch (traj.status) {
    case FlowStatus::ConvergedPure:
    case FlowStatus::ReachedMixedEquilibrium: {
      for (std::size_t j = 0; j < records.size(); ++j)
        if ((records[j].point - traj.end_point).lpNorm<Eigen::Infinity>() <= match_tol)
          return static_cast<int>(j);
      return kOutcomeUnmatched;
    }
    case FlowStatus::ReachedDegeneratePoint:
      return kOutcomeDegenerate;
    case FlowStatus::MaxSwitchesExceeded:
      return kOutcomeMaxSwitches;
    case FlowStatus::MaxTimeExceeded:
    default:
      return kOutcomeMaxTime;
  }
}

struct BasinOptions {
  int samples = 1000;
  std::uint64_t seed = 2024;
  double match_tol = 1e-7;
};

struct BasinResult {
  std::vector<long long> by_record;
  long long degenerate = 0;
  long long max_time = 0;
  long long max_switches = 0;
  long long unmatched = 0;
  int samples = 0;
};

/// Tally the samples with indices [first, last). Each sample has its own
/// stream, so the tally is independent of evaluation order and of how the
/// index range is split across workers.
inline void basin_accumulate(const NormalFormGame& g, const std::vector<EquilibriumRecord>& records,
                             const BasinOptions& bo, const FlowOptions& fo, int first, int last,
                             BasinResult& into) {
  for (int k = first; k < last; ++k) {
    std::mt19937_64 eng = make_stream(bo.seed, static_cast<std::uint64_t>(k));
    const Eigen::VectorXd x0 = sample_point(g.shape, eng);
    const Trajectory traj = integrate_trajectory(g, x0, fo);
    const int idx = outcome_record_index(traj, records, bo.match_tol);
    if (idx >= 0)
      ++into.by_record[static_cast<std::size_t>(idx)];
    else if (idx == kOutcomeDegenerate)
      ++into.degenerate;
    else if (idx == kOutcomeMaxSwitches)
      ++into.max_switches;
    else if (idx == kOutcomeUnmatched)
      ++into.unmatched;
    else
      ++into.max_time;
  }
}

/// Uniform product-of-simplices sampling of initial conditions.
inline BasinResult basin_monte_carlo(const NormalFormGame& g, const std::vector<EquilibriumRecord>& records,
                                     const BasinOptions& bo = {}, const FlowOptions& fo = {}) {
  BasinResult out;
  out.by_record.assign(records.size(), 0);
  out.samples = bo.samples;
  basin_accumulate(g, records, bo, fo, 0, bo.samples, out);
  return out;
}

/// Bisect the segment between two starts on their outcome label. The first
/// bracketed start whose outcome differs from both endpoints (typically a
/// finite-time stop on the basin boundary) is reported as the boundary;
/// otherwise the bisection limit is. When the endpoints already agree the
/// probe reports that instead of failing.
struct FiniteTimeProbe {
  int label_a = kOutcomeUnmatched;
  int label_b = kOutcomeUnmatched;
  bool boundary_found = false;
  Eigen::VectorXd boundary_point;
  Trajectory boundary_trajectory;
};

inline FiniteTimeProbe finite_time_probe(const NormalFormGame& g, const std::vector<EquilibriumRecord>& records,
                                         Eigen::VectorXd xa, Eigen::VectorXd xb, double xtol = 1e-12,
                                         const FlowOptions& fo = {}, double match_tol = 1e-7) {
  FiniteTimeProbe out;
  out.label_a = outcome_record_index(integrate_trajectory(g, xa, fo), records, match_tol);
  out.label_b = outcome_record_index(integrate_trajectory(g, xb, fo), records, match_tol);
  if (out.label_a == out.label_b) {
    out.boundary_point = 0.5 * (xa + xb);
    out.boundary_trajectory = integrate_trajectory(g, out.boundary_point, fo);
    return out;
  }
  while ((xa - xb).lpNorm<Eigen::Infinity>() > xtol) {
    const Eigen::VectorXd mid = 0.5 * (xa + xb);
    Trajectory traj = integrate_trajectory(g, mid, fo);
    const int lm = outcome_record_index(traj, records, match_tol);
    if (lm != out.label_a && lm != out.label_b) {
      out.boundary_found = true;
      out.boundary_point = mid;
      out.boundary_trajectory = std::move(traj);
      return out;
    }
    if (lm == out.label_a)
      xa = mid;
    else
      xb = mid;
  }
  out.boundary_found = true;
  out.boundary_point = 0.5 * (xa + xb);
  out.boundary_trajectory = integrate_trajectory(g, out.boundary_point, fo);
  return out;
}

/// Transport a coordinate box lying in one best-response cell for time t and
/// compare its volume contraction with the expected exp(-dim * t): the flow
/// contracts every reduced coordinate at unit rate inside a cell.
struct VolumeProbe {
  bool same_cell = false;
  double t = 0.0;
  double ratio = 0.0;
  double expected = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

inline VolumeProbe volume_contraction_probe(const NormalFormGame& g, const Eigen::VectorXd& lo,
                                            const Eigen::VectorXd& hi, double t, const FlowOptions& fo = {}) {
  const GameShape& s = g.shape;
  if (lo.size() != s.dim || hi.size() != s.dim) throw std::invalid_argument("box has wrong dimension");
  VolumeProbe out;
  out.t = t;
  out.expected = std::exp(-static_cast<double>(s.dim) * t);

  FlowOptions horizon = fo;
  horizon.t_max = t;
  std::vector<int> target;
  std::vector<Eigen::VectorXd> mapped;
  const std::size_t corners = std::size_t{1} << s.dim;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    Eigen::VectorXd x(s.dim);
    for (int c = 0; c < s.dim; ++c) x[c] = (mask >> c) & 1u ? hi[c] : lo[c];
    if (!in_domain(s, x)) return out;
    const Trajectory traj = integrate_trajectory(g, x, horizon);
    if (traj.segments.size() != 1) return out;  // an event interrupted the cell
    if (mask == 0)
      target = traj.segments[0].target;
    else if (traj.segments[0].target != target)
      return out;
    mapped.push_back(state_at(traj, t));
  }
  out.same_cell = true;
  double ratio = 1.0;
  for (int c = 0; c < s.dim; ++c) {
    double mlo = mapped[0][c], mhi = mapped[0][c];
    for (const Eigen::VectorXd& m : mapped) {
      mlo = std::min(mlo, m[c]);
      mhi = std::max(mhi, m[c]);
    }
    ratio *= (mhi - mlo) / (hi[c] - lo[c]);
  }
  out.ratio = ratio;
  out.error = std::abs(ratio - out.expected);
  return out;
}

/// Random game classes for the genericity census.
enum class CensusClass { Identical, Exact, Weighted };

inline NormalFormGame census_game(const GameShape& shape, CensusClass klass, std::mt19937_64& eng) {
  Tensor phi(shape.profiles);
  for (double& v : phi) v = uniform_in(eng, -1.0, 1.0);
  const int n = shape.num_players();
  if (klass == CensusClass::Identical) return {shape, std::vector<Tensor>(static_cast<std::size_t>(n), phi)};
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (klass == CensusClass::Weighted)
    for (double& v : w) v = uniform_in(eng, 0.5, 1.5);
  std::vector<Tensor> u(static_cast<std::size_t>(n), Tensor(shape.profiles));
  for (int i = 0; i < n; ++i) {
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

struct CensusRow {
  std::string klass;
  int games = 0;
  long long equilibria = 0;
  long long regular = 0;
  long long degenerate = 0;
  int infer_ok = 0;
  int all_regular = 0;  // games whose every equilibrium is regular
};

/// Draw games of each class, infer their potential structure blindly, and
/// classify every equilibrium.
inline std::vector<CensusRow> genericity_census(const GameShape& shape, int games_per_class,
                                                std::uint64_t seed, const SolveOptions& o = {}) {
  std::vector<CensusRow> rows;
  const CensusClass classes[] = {CensusClass::Identical, CensusClass::Exact, CensusClass::Weighted};
  const char* names[] = {"identical", "exact", "weighted"};
  for (int ci = 0; ci < 3; ++ci) {
    CensusRow row;
    row.klass = names[ci];
    row.games = games_per_class;
    for (int k = 0; k < games_per_class; ++k) {
      std::mt19937_64 eng =
          make_stream(seed, static_cast<std::uint64_t>(ci) * static_cast<std::uint64_t>(games_per_class) +
                                static_cast<std::uint64_t>(k));
      const NormalFormGame g = census_game(shape, classes[ci], eng);
      const auto d = infer_potential(g);
      if (d) ++row.infer_ok;
      const auto records = solve_equilibria(g, o, d ? &d->potential : nullptr);
      bool all_reg = !records.empty();
      for (const EquilibriumRecord& r : records) {
        ++row.equilibria;
        if (r.regular)
          ++row.regular;
        else {
          ++row.degenerate;
          all_reg = false;
        }
      }
      if (all_reg) ++row.all_regular;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace brflow
