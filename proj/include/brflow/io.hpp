#pragma once

// Game files on disk and JSON/CSV emission for the command-line tool.
//
// A game file is a JSON object:
//   {
//     "name": "coordination",            // optional
//     "actions": [2, 2],                 // actions per player, each >= 2
//     "payoffs": [[...], [...]],         // one flat tensor per player,
//                                        // player 0 slowest, last player fastest
//     "weights": [1.0, 1.0],             // optional, positive
//     "potential": [...]                 // optional flat tensor
//   }
// Declared structure is verified; missing structure is inferred when the game
// admits it.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "equilibrium.hpp"
#include "game.hpp"

namespace brflow {

using Json = nlohmann::json;

/// A malformed input: unreadable file, invalid JSON, wrong field types or
/// sizes. The tool exits with code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A well-formed input whose content rules out the requested computation
/// (e.g. no weighted potential structure). The tool exits with code 1.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest lossless decimal rendering used for CSV cells.
inline std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GameFile {
  std::string name;
  NormalFormGame game;
  std::optional<std::vector<double>> weights;
  std::optional<Tensor> potential;
};

inline GameFile parse_game(const Json& j) {
  if (!j.is_object()) throw ParseError("game file must be a JSON object");
  if (!j.contains("actions") || !j["actions"].is_array() || j["actions"].empty())
    throw ParseError("'actions' must be a non-empty array of integers");
  std::vector<int> counts;
  for (const Json& e : j["actions"]) {
    if (!e.is_number_integer()) throw ParseError("'actions' must be a non-empty array of integers");
    counts.push_back(e.get<int>());
    if (counts.back() < 2) throw ParseError("every player needs at least two actions");
  }
  GameShape shape(std::move(counts));

  if (!j.contains("payoffs") || !j["payoffs"].is_array() ||
      j["payoffs"].size() != static_cast<std::size_t>(shape.num_players()))
    throw ParseError("'payoffs' must hold one tensor per player");
  std::vector<Tensor> payoffs;
  for (const Json& tj : j["payoffs"]) {
    if (!tj.is_array() || tj.size() != shape.profiles)
      throw ParseError("each payoff tensor needs one number per action profile");
    Tensor t;
    for (const Json& e : tj) {
      if (!e.is_number()) throw ParseError("payoff entries must be numbers");
      t.push_back(e.get<double>());
    }
    payoffs.push_back(std::move(t));
  }

  GameFile f{j.value("name", std::string{}), NormalFormGame(shape, std::move(payoffs)), std::nullopt, std::nullopt};

  if (j.contains("weights")) {
    if (!j["weights"].is_array() || j["weights"].size() != static_cast<std::size_t>(shape.num_players()))
      throw ParseError("'weights' must hold one number per player");
    std::vector<double> w;
    for (const Json& e : j["weights"]) {
      if (!e.is_number()) throw ParseError("'weights' must hold one number per player");
      w.push_back(e.get<double>());
    }
    f.weights = std::move(w);
  }
  if (j.contains("potential")) {
    if (!j["potential"].is_array() || j["potential"].size() != shape.profiles)
      throw ParseError("'potential' needs one number per action profile");
    Tensor t;
    for (const Json& e : j["potential"]) {
      if (!e.is_number()) throw ParseError("'potential' entries must be numbers");
      t.push_back(e.get<double>());
    }
    f.potential = std::move(t);
  }
  return f;
}

inline GameFile load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_game(j);
}

/// A game together with a verified weighted potential decomposition, either
/// declared by the file or inferred from the payoffs.
struct PreparedGame {
  GameFile file;
  PotentialDecomposition decomposition;
  bool inferred = false;
  double max_residual = 0.0;
};

inline PreparedGame prepare_game(GameFile f, double tol = 1e-9) {
  const NormalFormGame& g = f.game;
  if (f.weights)
    for (double w : *f.weights)
      if (!(w > 0.0)) throw DomainError("declared weights must be positive");

  if (f.potential) {
    std::vector<double> w =
        f.weights.value_or(std::vector<double>(static_cast<std::size_t>(g.shape.num_players()), 1.0));
    PotentialDecomposition d{g.shape, std::move(w), *f.potential};
    const DecompositionCheck chk = verify_potential_decomposition(g, d, tol);
    if (!chk.ok)
      throw DomainError("declared potential structure does not verify: " + chk.detail +
                        " (max residual " + format17(chk.max_residual) + ")");
    return {std::move(f), std::move(d), false, chk.max_residual};
  }

  std::optional<PotentialDecomposition> d =
      f.weights ? infer_potential(g, *f.weights, tol) : infer_potential(g, tol);
  if (!d)
    throw DomainError(f.weights ? "no potential exists for the declared weights"
                                : "the game is not a weighted potential game (within tolerance)");
  const DecompositionCheck chk = verify_potential_decomposition(g, *d, tol);
  return {std::move(f), std::move(*d), true, chk.max_residual};
}

inline Json vector_json(const Eigen::VectorXd& x) {
  Json a = Json::array();
  for (int k = 0; k < x.size(); ++k) a.push_back(x[k]);
  return a;
}

inline Json carrier_json(const Carrier& c) {
  Json a = Json::array();
  for (const auto& s : c.supports) a.push_back(s);
  return a;
}

inline Json record_json(const EquilibriumRecord& r) {
  Json j;
  j["point"] = vector_json(r.point);
  j["carrier"] = carrier_json(r.carrier);
  j["pure"] = r.pure;
  j["first_order"] = r.first_order;
  j["second_order"] = r.second_order;
  j["regular"] = r.regular;
  j["continuum"] = r.continuum_hint;
  j["gap"] = r.gap;
  if (std::isnan(r.min_singular))
    j["min_singular"] = nullptr;
  else
    j["min_singular"] = r.min_singular;
  return j;
}

inline const char* status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::ConvergedPure:
      return "converged-pure";
    case FlowStatus::ReachedMixedEquilibrium:
      return "reached-mixed-equilibrium";
    case FlowStatus::ReachedDegeneratePoint:
      return "reached-degenerate-point";
    case FlowStatus::MaxSwitchesExceeded:
      return "max-switches-exceeded";
    case FlowStatus::MaxTimeExceeded:
    default:
      return "max-time-exceeded";
  }
}

/// Column names of the reduced coordinates: x_<player>_<action>.
inline std::vector<std::string> coordinate_names(const GameShape& s) {
  std::vector<std::string> names;
  for (int i = 0; i < s.num_players(); ++i)
    for (int a = 1; a < s.counts[i]; ++a)
      names.push_back("x_" + std::to_string(i) + "_" + std::to_string(a));
  return names;
}

}  // namespace brflow
