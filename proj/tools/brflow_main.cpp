#include <CLI11.hpp>

#include <iostream>

#include "brflow/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"finite weighted potential games: equilibria, exact best-response flow, experiments"};
  app.require_subcommand(1);
  brflow::RunConfig cfg;

  const auto add_game = [&](CLI::App* sub) {
    sub->add_option("game", cfg.game_path, "game JSON file")->required();
  };
  const auto add_tol = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "verification / stopping tolerance");
  };
  const auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_path, "write the main output to this file");
  };
  const auto add_solver = [&](CLI::App* sub) {
    add_tol(sub);
    sub->add_option("--svd-tol", cfg.svd_tol, "regularity singular-value threshold");
    sub->add_option("--seed", cfg.seed, "deterministic seed");
  };
  const auto add_x0 = [&](CLI::App* sub) {
    sub->add_option("--x0", cfg.x0, "initial point, reduced coordinates")->required()->expected(-1);
    sub->add_flag("--simplex", cfg.simplex_coords, "read points as full per-player simplex weights");
  };

  CLI::App* validate = app.add_subcommand("validate", "verify or infer weighted potential structure");
  add_game(validate);
  add_tol(validate);
  add_out(validate);

  CLI::App* equilibria = app.add_subcommand("equilibria", "enumerate and classify Nash equilibria");
  add_game(equilibria);
  add_solver(equilibria);
  add_out(equilibria);

  CLI::App* flow = app.add_subcommand("flow", "integrate the best-response flow exactly, CSV output");
  add_game(flow);
  add_x0(flow);
  add_tol(flow);
  add_out(flow);
  flow->add_option("--t-max", cfg.t_max, "time horizon");
  flow->add_option("--dt", cfg.dt, "CSV sampling step");

  CLI::App* basin = app.add_subcommand("basin", "Monte Carlo basin-of-attraction tally");
  add_game(basin);
  add_solver(basin);
  add_out(basin);
  basin->add_option("--samples", cfg.samples, "number of sampled starts");
  basin->add_option("--t-max", cfg.t_max, "time horizon per trajectory");
  basin->add_option("--threads", cfg.threads, "worker threads (deterministic for any count)");

  CLI::App* rate = app.add_subcommand("rate", "exponential convergence rate of an absorbed trajectory");
  add_game(rate);
  add_x0(rate);
  add_tol(rate);
  add_out(rate);
  rate->add_option("--t-max", cfg.t_max, "time horizon");
  rate->add_option("--fit-horizon", cfg.fit_horizon, "length of the absorbed tail used in the fit");
  rate->add_option("--fit-samples", cfg.fit_samples, "sample count in the fit");

  CLI::App* surfaces = app.add_subcommand("surfaces", "sample an indifference surface, CSV output");
  add_game(surfaces);
  add_out(surfaces);
  surfaces->add_option("--player", cfg.player, "player whose actions tie");
  surfaces->add_option("--action-a", cfg.action_a, "first tied action");
  surfaces->add_option("--action-b", cfg.action_b, "second tied action");
  surfaces->add_option("--coord", cfg.coord, "reduced coordinate solved by bisection");
  surfaces->add_option("--grid", cfg.grid, "grid resolution per remaining coordinate");

  CLI::App* project = app.add_subcommand("project", "project a point onto a mixed equilibrium's carrier");
  add_game(project);
  add_x0(project);
  add_solver(project);
  add_out(project);
  project->add_option("--index", cfg.index, "equilibrium index (default: first mixed)");

  CLI::App* ineq = app.add_subcommand("probe-inequalities",
                                      "curvature/drift constants of the projected potential");
  add_game(ineq);
  add_solver(ineq);
  add_out(ineq);
  ineq->add_option("--index", cfg.index, "equilibrium index (default: first mixed)");
  ineq->add_option("--radius", cfg.radius, "probe ring radius");
  ineq->add_option("--dirs", cfg.dirs, "extra random directions");

  CLI::App* tang = app.add_subcommand("probe-tangency", "tangency of tied selections at a surface point");
  add_game(tang);
  add_x0(tang);
  add_out(tang);
  tang->add_option("--player", cfg.player, "player whose actions tie");
  tang->add_option("--action-a", cfg.action_a, "first tied action");
  tang->add_option("--action-b", cfg.action_b, "second tied action");
  tang->add_option("--tangent-tol", cfg.tangent_tol, "threshold on the normalized inner products");

  CLI::App* vol = app.add_subcommand("probe-volume", "volume contraction of a box in one response cell");
  add_game(vol);
  add_tol(vol);
  add_out(vol);
  vol->add_option("--box-lo", cfg.box_lo, "lower corner, reduced coordinates")->required()->expected(-1);
  vol->add_option("--box-hi", cfg.box_hi, "upper corner, reduced coordinates")->required()->expected(-1);
  vol->add_option("--t", cfg.t_probe, "transport time");

  CLI::App* census = app.add_subcommand("census", "genericity census over random potential games");
  census->add_option("--actions", cfg.actions, "actions per player")->required()->expected(-1);
  census->add_option("--games", cfg.games, "games per class");
  add_solver(census);
  add_out(census);

  CLI::App* fp = app.add_subcommand("fp-compare", "discrete fictitious play against the exact flow");
  add_game(fp);
  add_x0(fp);
  add_out(fp);
  fp->add_option("--steps", cfg.steps, "fictitious-play steps");
  fp->add_option("--t-max", cfg.t_max, "flow time horizon");

  CLI::App* boundary = app.add_subcommand("boundary", "bisect a basin boundary between two starts");
  add_game(boundary);
  add_x0(boundary);
  add_tol(boundary);
  add_out(boundary);
  boundary->add_option("--x1", cfg.x1, "second start, reduced coordinates")->required()->expected(-1);
  boundary->add_option("--t-max", cfg.t_max, "time horizon per trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return brflow::run(cfg, std::cout, std::cerr);
}
