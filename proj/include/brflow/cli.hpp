#pragma once

// Subcommand implementations behind the command-line binary. Everything is
// driven by a plain config struct so the tool can be exercised in-process.
//
// Exit codes: 0 success, 1 domain errors (the input rules out the requested
// computation), 2 parse/usage errors (malformed files or arguments).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "analysis.hpp"
#include "equilibrium.hpp"
#include "flow.hpp"
#include "game.hpp"
#include "io.hpp"

namespace brflow {

struct RunConfig {
  std::string command;
  std::string game_path;

  double tol = 1e-9;
  double svd_tol = 1e-8;
  std::uint64_t seed = 12345;
  int samples = 1000;
  double t_max = 100.0;
  double dt = 0.1;
  int grid = 10;
  int threads = 1;
  std::string out_path;
  bool simplex_coords = false;
  std::vector<double> x0;
  std::vector<double> x1;

  int player = 0;
  int action_a = 0;
  int action_b = 1;
  int coord = 0;
  int index = -1;  // equilibrium selector; -1 picks the first mixed record
  int steps = 1000;
  int games = 20;
  std::vector<int> actions;
  double radius = 1e-3;
  int dirs = 8;
  double t_probe = 1.0;
  double fit_horizon = 10.0;
  int fit_samples = 50;
  double tangent_tol = 1e-6;
  std::vector<double> box_lo, box_hi;
};

namespace detail_cli {

inline SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions o;
  o.verify_tol = cfg.tol;
  o.svd_tol = cfg.svd_tol;
  o.seed = cfg.seed;
  return o;
}

inline FlowOptions flow_options(const RunConfig& cfg) {
  FlowOptions o;
  o.t_max = cfg.t_max;
  o.eq_stop_tol = cfg.tol;
  return o;
}

/// Read a point from --x0-style values, either reduced coordinates or full
/// per-player simplex weights.
inline Eigen::VectorXd parse_point(const GameShape& s, const std::vector<double>& v, bool simplex,
                                   const char* what) {
  if (!simplex) {
    if (static_cast<int>(v.size()) != s.dim)
      throw ParseError(std::string(what) + " needs " + std::to_string(s.dim) + " reduced coordinates");
    Eigen::VectorXd x(s.dim);
    for (int k = 0; k < s.dim; ++k) x[k] = v[static_cast<std::size_t>(k)];
    return x;
  }
  int total = 0;
  for (int c : s.counts) total += c;
  if (static_cast<int>(v.size()) != total)
    throw ParseError(std::string(what) + " needs " + std::to_string(total) + " simplex weights");
  std::vector<Eigen::VectorXd> sigma;
  std::size_t pos = 0;
  for (int i = 0; i < s.num_players(); ++i) {
    Eigen::VectorXd w(s.counts[i]);
    double sum = 0.0;
    for (int a = 0; a < s.counts[i]; ++a) {
      w[a] = v[pos++];
      if (w[a] < -1e-12) throw ParseError(std::string(what) + ": simplex weights must be nonnegative");
      sum += w[a];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ParseError(std::string(what) + ": weights of player " + std::to_string(i) + " must sum to 1");
    sigma.push_back(std::move(w));
  }
  return from_simplex(s, sigma);
}

inline Eigen::VectorXd domain_point(const GameShape& s, const std::vector<double>& v, bool simplex,
                                    const char* what) {
  const Eigen::VectorXd x = parse_point(s, v, simplex, what);
  if (!in_domain(s, x, 1e-12)) throw DomainError(std::string(what) + " lies outside the product of simplices");
  return x;
}

inline void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out_path);
  if (!f) throw DomainError("cannot write '" + cfg.out_path + "'");
  f << text;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline const EquilibriumRecord& pick_mixed(const std::vector<EquilibriumRecord>& records, int index) {
  if (index >= 0) {
    if (index >= static_cast<int>(records.size()))
      throw DomainError("equilibrium index " + std::to_string(index) + " out of range (" +
                        std::to_string(records.size()) + " found)");
    const EquilibriumRecord& r = records[static_cast<std::size_t>(index)];
    if (r.pure) throw DomainError("equilibrium " + std::to_string(index) + " is pure; a mixed carrier is needed");
    return r;
  }
  for (const EquilibriumRecord& r : records)
    if (!r.pure) return r;
  throw DomainError("the game has no mixed equilibrium to project onto");
}

inline int segment_index(const Trajectory& traj, double t) {
  int idx = 0;
  for (std::size_t k = 0; k < traj.segments.size(); ++k) {
    if (traj.segments[k].start_time <= t + 1e-15)
      idx = static_cast<int>(k);
    else
      break;
  }
  return idx;
}

inline std::string trajectory_csv(const GameShape& shape, const Tensor& potential, const Trajectory& traj,
                                  double dt) {
  std::vector<double> times;
  double horizon = 0.0;
  if (std::isfinite(traj.end_time))
    horizon = traj.end_time;
  else if (!traj.segments.empty())
    horizon = traj.segments.back().start_time + 5.0;  // window into the absorbing tail
  for (double t = 0.0; t <= horizon + 1e-15; t += dt) times.push_back(t);
  for (const TrajectorySegment& seg : traj.segments) times.push_back(seg.start_time);
  times.push_back(horizon);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
              times.end());

  std::string csv = "t";
  for (const std::string& name : coordinate_names(shape)) csv += "," + name;
  csv += ",U,segment_id\n";
  for (double t : times) {
    const Eigen::VectorXd x = state_at(traj, t);
    csv += format17(t);
    for (int c = 0; c < shape.dim; ++c) csv += "," + format17(x[c]);
    csv += "," + format17(eval_multilinear(shape, potential, x));
    csv += "," + std::to_string(segment_index(traj, t)) + "\n";
  }
  return csv;
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  Json j;
  j["name"] = p.file.name;
  j["players"] = p.file.game.shape.num_players();
  j["actions"] = p.file.game.shape.counts;
  j["weights"] = p.decomposition.weights;
  j["inferred"] = p.inferred;
  j["max_residual"] = p.max_residual;
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_equilibria(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const auto records = solve_equilibria(p.file.game, solve_options(cfg), &p.decomposition.potential);
  Json j;
  j["equilibria"] = Json::array();
  int pure = 0, regular = 0, continuum = 0;
  for (const EquilibriumRecord& r : records) {
    j["equilibria"].push_back(record_json(r));
    pure += r.pure ? 1 : 0;
    regular += r.regular ? 1 : 0;
    continuum += r.continuum_hint ? 1 : 0;
  }
  j["total"] = records.size();
  j["pure"] = pure;
  j["mixed"] = static_cast<int>(records.size()) - pure;
  j["regular"] = regular;
  j["degenerate"] = static_cast<int>(records.size()) - regular;
  j["continuum"] = continuum;
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_flow(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const Eigen::VectorXd x0 = domain_point(p.file.game.shape, cfg.x0, cfg.simplex_coords, "--x0");
  const Trajectory traj = integrate_trajectory(p.file.game, x0, flow_options(cfg));
  emit(cfg, out, trajectory_csv(p.file.game.shape, p.decomposition.potential, traj, cfg.dt));
  Json j;
  j["status"] = status_name(traj.status);
  j["switches"] = traj.switches;
  j["end_time"] = finite_or_null(traj.end_time);
  j["end_point"] = vector_json(traj.end_point);
  err << j.dump() << "\n";
  return 0;
}

inline int cmd_basin(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const auto records = solve_equilibria(p.file.game, solve_options(cfg), &p.decomposition.potential);
  BasinOptions bo;
  bo.samples = cfg.samples;
  bo.seed = cfg.seed;
  const FlowOptions fo = flow_options(cfg);

  BasinResult result;
  result.by_record.assign(records.size(), 0);
  result.samples = bo.samples;
  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    basin_accumulate(p.file.game, records, bo, fo, 0, bo.samples, result);
  } else {
    std::vector<BasinResult> parts(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    const int chunk = (bo.samples + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      parts[static_cast<std::size_t>(w)].by_record.assign(records.size(), 0);
      const int first = w * chunk;
      const int last = std::min(bo.samples, first + chunk);
      pool.emplace_back([&, first, last, w] {
        basin_accumulate(p.file.game, records, bo, fo, first, last, parts[static_cast<std::size_t>(w)]);
      });
    }
    for (std::thread& th : pool) th.join();
    for (const BasinResult& part : parts) {
      for (std::size_t k = 0; k < records.size(); ++k) result.by_record[k] += part.by_record[k];
      result.degenerate += part.degenerate;
      result.max_time += part.max_time;
      result.max_switches += part.max_switches;
      result.unmatched += part.unmatched;
    }
  }

  Json j;
  j["samples"] = result.samples;
  j["seed"] = cfg.seed;
  j["outcomes"] = Json::array();
  for (std::size_t k = 0; k < records.size(); ++k) {
    Json o;
    o["index"] = k;
    o["point"] = vector_json(records[k].point);
    o["pure"] = records[k].pure;
    o["count"] = result.by_record[k];
    o["fraction"] = static_cast<double>(result.by_record[k]) / result.samples;
    j["outcomes"].push_back(o);
  }
  j["degenerate"] = result.degenerate;
  j["max_time"] = result.max_time;
  j["max_switches"] = result.max_switches;
  j["unmatched"] = result.unmatched;
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_rate(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const Eigen::VectorXd x0 = domain_point(p.file.game.shape, cfg.x0, cfg.simplex_coords, "--x0");
  const Trajectory traj = integrate_trajectory(p.file.game, x0, flow_options(cfg));
  const auto rate = estimate_convergence_rate(traj, cfg.fit_horizon, cfg.fit_samples);
  if (!rate)
    throw DomainError(std::string("rate needs a trajectory absorbed at a pure equilibrium (status: ") +
                      status_name(traj.status) + ")");
  Json j;
  j["status"] = status_name(traj.status);
  j["rho"] = rate->rho;
  j["c"] = rate->c;
  j["t_last_switch"] = rate->t_last_switch;
  j["end_point"] = vector_json(traj.end_point);
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_surfaces(const RunConfig& cfg, std::ostream& out) {
  const GameFile f = load_game(cfg.game_path);
  const GameShape& s = f.game.shape;
  if (cfg.player < 0 || cfg.player >= s.num_players()) throw ParseError("--player out of range");
  if (cfg.action_a < 0 || cfg.action_a >= s.counts[cfg.player] || cfg.action_b < 0 ||
      cfg.action_b >= s.counts[cfg.player] || cfg.action_a == cfg.action_b)
    throw ParseError("--action-a/--action-b must be distinct actions of --player");
  if (cfg.coord < 0 || cfg.coord >= s.dim) throw ParseError("--coord out of range");
  if (cfg.grid < 1) throw ParseError("--grid must be positive");

  // midpoint grid over every other reduced coordinate, kept inside the domain
  std::vector<Eigen::VectorXd> contexts{Eigen::VectorXd::Zero(s.dim)};
  for (int c = 0; c < s.dim; ++c) {
    if (c == cfg.coord) continue;
    std::vector<Eigen::VectorXd> next;
    for (const Eigen::VectorXd& base : contexts)
      for (int k = 0; k < cfg.grid; ++k) {
        Eigen::VectorXd x = base;
        x[c] = (k + 0.5) / cfg.grid;
        next.push_back(std::move(x));
      }
    contexts = std::move(next);
  }
  contexts.erase(std::remove_if(contexts.begin(), contexts.end(),
                                [&](const Eigen::VectorXd& x) { return !in_domain(s, x); }),
                 contexts.end());

  const auto pts = sample_indifference_surface(f.game, cfg.player, cfg.action_a, cfg.action_b, cfg.coord,
                                               contexts);
  std::string csv;
  const auto names = coordinate_names(s);
  for (std::size_t k = 0; k < names.size(); ++k) csv += (k ? "," : "") + names[k];
  csv += "\n";
  for (const Eigen::VectorXd& x : pts) {
    for (int c = 0; c < s.dim; ++c) csv += (c ? "," : "") + format17(x[c]);
    csv += "\n";
  }
  emit(cfg, out, csv);
  return 0;
}

inline int cmd_project(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const auto records = solve_equilibria(p.file.game, solve_options(cfg), &p.decomposition.potential);
  const EquilibriumRecord& rec = pick_mixed(records, cfg.index);
  const ProjectionContext ctx =
      ProjectionContext::make(p.file.game, p.decomposition.potential, rec, solve_options(cfg));
  const Eigen::VectorXd x = domain_point(p.file.game.shape, cfg.x0, cfg.simplex_coords, "--x0");

  const Eigen::VectorXd xp = ProjectionContext::off_coords(ctx.sys, x);
  const auto gz = projection_g(ctx, xp);
  const auto pt = projection_point(ctx, x);
  const auto emb = projection_embed(ctx, x);
  if (!gz || !pt || !emb) throw DomainError("the projection is undefined at --x0 (off the manifold's domain)");

  Json j;
  j["equilibrium"] = record_json(rec);
  j["x"] = vector_json(x);
  j["off_carrier"] = vector_json(xp);
  j["manifold"] = vector_json(*gz);
  j["projection"] = vector_json(*pt);
  j["projection_embedded"] = vector_json(*emb);
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_probe_inequalities(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const auto records = solve_equilibria(p.file.game, solve_options(cfg), &p.decomposition.potential);
  const EquilibriumRecord& rec = pick_mixed(records, cfg.index);
  const ProjectionContext ctx =
      ProjectionContext::make(p.file.game, p.decomposition.potential, rec, solve_options(cfg));
  const InequalityProbe probe = inequality_probe(ctx, cfg.radius, cfg.dirs, cfg.seed);
  Json j;
  j["equilibrium_point"] = vector_json(rec.point);
  j["radius"] = cfg.radius;
  j["c1"] = probe.c1;
  j["c2"] = finite_or_null(probe.c2);
  j["samples_used"] = probe.used;
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_probe_tangency(const RunConfig& cfg, std::ostream& out) {
  const GameFile f = load_game(cfg.game_path);
  const GameShape& s = f.game.shape;
  if (cfg.player < 0 || cfg.player >= s.num_players()) throw ParseError("--player out of range");
  if (cfg.action_a < 0 || cfg.action_a >= s.counts[cfg.player] || cfg.action_b < 0 ||
      cfg.action_b >= s.counts[cfg.player] || cfg.action_a == cfg.action_b)
    throw ParseError("--action-a/--action-b must be distinct actions of --player");
  const Eigen::VectorXd x = domain_point(s, cfg.x0, cfg.simplex_coords, "--x0");
  const TangencyProbe probe =
      tangency_probe(f.game, x, cfg.player, cfg.action_a, cfg.action_b, 1e-9, cfg.tangent_tol);
  const Eigen::VectorXd v = action_values(s, f.game.payoffs[static_cast<std::size_t>(cfg.player)],
                                          cfg.player, x);
  Json j;
  j["point"] = vector_json(x);
  j["payoff_difference"] = v[cfg.action_b] - v[cfg.action_a];
  j["normal"] = vector_json(probe.normal);
  j["inner"] = probe.inner;
  j["max_abs_inner"] = probe.max_abs_inner;
  j["tangential"] = probe.tangential;
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_probe_volume(const RunConfig& cfg, std::ostream& out) {
  const GameFile f = load_game(cfg.game_path);
  const GameShape& s = f.game.shape;
  const Eigen::VectorXd lo = parse_point(s, cfg.box_lo, false, "--box-lo");
  const Eigen::VectorXd hi = parse_point(s, cfg.box_hi, false, "--box-hi");
  for (int c = 0; c < s.dim; ++c)
    if (!(lo[c] < hi[c])) throw ParseError("--box-lo must be strictly below --box-hi in every coordinate");
  const VolumeProbe probe = volume_contraction_probe(f.game, lo, hi, cfg.t_probe, flow_options(cfg));
  Json j;
  j["dim"] = s.dim;
  j["t"] = probe.t;
  j["same_cell"] = probe.same_cell;
  j["ratio"] = probe.same_cell ? Json(probe.ratio) : Json(nullptr);
  j["expected"] = probe.expected;
  j["error"] = probe.same_cell ? Json(probe.error) : Json(nullptr);
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_census(const RunConfig& cfg, std::ostream& out) {
  if (cfg.actions.empty()) throw ParseError("--actions is required");
  for (int c : cfg.actions)
    if (c < 2) throw ParseError("every player needs at least two actions");
  if (cfg.games < 1) throw ParseError("--games must be positive");
  const auto rows = genericity_census(GameShape(cfg.actions), cfg.games, cfg.seed, solve_options(cfg));
  Json j;
  j["actions"] = cfg.actions;
  j["games_per_class"] = cfg.games;
  j["seed"] = cfg.seed;
  j["rows"] = Json::array();
  for (const CensusRow& row : rows) {
    Json r;
    r["class"] = row.klass;
    r["games"] = row.games;
    r["equilibria"] = row.equilibria;
    r["regular"] = row.regular;
    r["degenerate"] = row.degenerate;
    r["infer_ok"] = row.infer_ok;
    r["all_regular"] = row.all_regular;
    j["rows"].push_back(r);
  }
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_fp_compare(const RunConfig& cfg, std::ostream& out) {
  const GameFile f = load_game(cfg.game_path);
  if (cfg.steps < 1) throw ParseError("--steps must be positive");
  const Eigen::VectorXd x0 = domain_point(f.game.shape, cfg.x0, cfg.simplex_coords, "--x0");
  const EulerResult euler = euler_fictitious_play(f.game, x0, cfg.steps);
  const Trajectory traj = integrate_trajectory(f.game, x0, flow_options(cfg));

  Json j;
  j["steps"] = cfg.steps;
  j["checkpoints"] = Json::array();
  for (int n : {cfg.steps / 4, cfg.steps / 2, cfg.steps}) {
    if (n < 1) continue;
    Json c;
    c["n"] = n;
    c["gap"] = equilibrium_gap(f.game, euler.points[static_cast<std::size_t>(n)]);
    j["checkpoints"].push_back(c);
  }
  j["euler_end"] = vector_json(euler.points.back());
  j["flow_status"] = status_name(traj.status);
  j["flow_end"] = vector_json(traj.end_point);
  j["flow_end_time"] = finite_or_null(traj.end_time);
  j["distance"] = (euler.points.back() - traj.end_point).lpNorm<Eigen::Infinity>();
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int cmd_boundary(const RunConfig& cfg, std::ostream& out) {
  const PreparedGame p = prepare_game(load_game(cfg.game_path), cfg.tol);
  const auto records = solve_equilibria(p.file.game, solve_options(cfg), &p.decomposition.potential);
  const Eigen::VectorXd xa = domain_point(p.file.game.shape, cfg.x0, cfg.simplex_coords, "--x0");
  const Eigen::VectorXd xb = domain_point(p.file.game.shape, cfg.x1, cfg.simplex_coords, "--x1");
  const FiniteTimeProbe probe = finite_time_probe(p.file.game, records, xa, xb, 1e-12, flow_options(cfg));
  Json j;
  j["label_a"] = probe.label_a;
  j["label_b"] = probe.label_b;
  j["boundary_found"] = probe.boundary_found;
  j["boundary_point"] = vector_json(probe.boundary_point);
  j["status"] = status_name(probe.boundary_trajectory.status);
  j["switches"] = probe.boundary_trajectory.switches;
  j["end_time"] = finite_or_null(probe.boundary_trajectory.end_time);
  j["end_point"] = vector_json(probe.boundary_trajectory.end_point);
  emit(cfg, out, j.dump(2) + "\n");
  return 0;
}

inline int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.command == "validate") return cmd_validate(cfg, out);
  if (cfg.command == "equilibria") return cmd_equilibria(cfg, out);
  if (cfg.command == "flow") return cmd_flow(cfg, out, err);
  if (cfg.command == "basin") return cmd_basin(cfg, out);
  if (cfg.command == "rate") return cmd_rate(cfg, out);
  if (cfg.command == "surfaces") return cmd_surfaces(cfg, out);
  if (cfg.command == "project") return cmd_project(cfg, out);
  if (cfg.command == "probe-inequalities") return cmd_probe_inequalities(cfg, out);
  if (cfg.command == "probe-tangency") return cmd_probe_tangency(cfg, out);
  if (cfg.command == "probe-volume") return cmd_probe_volume(cfg, out);
  if (cfg.command == "census") return cmd_census(cfg, out);
  if (cfg.command == "fp-compare") return cmd_fp_compare(cfg, out);
  if (cfg.command == "boundary") return cmd_boundary(cfg, out);
  throw ParseError("unknown command '" + cfg.command + "'");
}

}  // namespace detail_cli

/// Execute one subcommand; returns the process exit code.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    return detail_cli::dispatch(cfg, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace brflow
