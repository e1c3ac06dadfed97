#pragma once

// Finite normal-form games, multilinear extensions over products of
// simplices, and weighted potential structure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brflow {

using Tensor = std::vector<double>;

/// Shape of a finite game: action counts per player plus derived flat-tensor
/// strides and the block layout of reduced coordinates. Reduced coordinates
/// store, for each player, the weights on actions 1..K-1; action 0 carries
/// the slack.
struct GameShape {
  std::vector<int> counts;
  std::vector<std::size_t> strides;  // flat tensor strides, player 0 slowest
  std::vector<int> offsets;          // reduced-coordinate block offsets
  std::size_t profiles = 0;
  int dim = 0;  // sum_i (counts[i] - 1)

  GameShape() = default;

  explicit GameShape(std::vector<int> action_counts) : counts(std::move(action_counts)) {
    if (counts.empty()) throw std::invalid_argument("game needs at least one player");
    for (int k : counts)
      if (k < 2) throw std::invalid_argument("every player needs at least two actions");
    const int n = static_cast<int>(counts.size());
    strides.assign(n, 1);
    for (int i = n - 2; i >= 0; --i)
      strides[i] = strides[i + 1] * static_cast<std::size_t>(counts[i + 1]);
    profiles = strides[0] * static_cast<std::size_t>(counts[0]);
    offsets.assign(n, 0);
    for (int i = 0; i < n; ++i) {
      offsets[i] = dim;
      dim += counts[i] - 1;
    }
  }

  int num_players() const { return static_cast<int>(counts.size()); }

  std::size_t flat_index(const std::vector<int>& profile) const {
    std::size_t t = 0;
    for (int i = 0; i < num_players(); ++i)
      t += strides[i] * static_cast<std::size_t>(profile[i]);
    return t;
  }

  std::vector<int> profile_of(std::size_t flat) const {
    std::vector<int> a(counts.size());
    for (int i = 0; i < num_players(); ++i) {
      a[i] = static_cast<int>(flat / strides[i]);
      flat %= strides[i];
    }
    return a;
  }

  bool operator==(const GameShape& other) const { return counts == other.counts; }
};

/// A finite game: one flat payoff tensor per player over the same shape.
struct NormalFormGame {
  GameShape shape;
  std::vector<Tensor> payoffs;

  NormalFormGame() = default;
  NormalFormGame(GameShape s, std::vector<Tensor> u) : shape(std::move(s)), payoffs(std::move(u)) {
    if (payoffs.size() != static_cast<std::size_t>(shape.num_players()))
      throw std::invalid_argument("need one payoff tensor per player");
    for (const Tensor& t : payoffs)
      if (t.size() != shape.profiles)
        throw std::invalid_argument("payoff tensor size does not match shape");
  }
};

/// Weighted potential decomposition: every unilateral payoff difference of
/// player i equals weights[i] times the matching potential difference.
struct PotentialDecomposition {
  GameShape shape;
  std::vector<double> weights;
  Tensor potential;
};

/// Full simplex weights of player i at reduced point x.
inline Eigen::VectorXd player_weights(const GameShape& shape, const Eigen::VectorXd& x, int i) {
  const int k = shape.counts[i];
  Eigen::VectorXd w(k);
  double rest = 0.0;
  for (int a = 1; a < k; ++a) {
    w[a] = x[shape.offsets[i] + a - 1];
    rest += w[a];
  }
  w[0] = 1.0 - rest;
  return w;
}

inline std::vector<Eigen::VectorXd> to_simplex(const GameShape& shape, const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> sigma;
  sigma.reserve(shape.counts.size());
  for (int i = 0; i < shape.num_players(); ++i) sigma.push_back(player_weights(shape, x, i));
  return sigma;
}

inline Eigen::VectorXd from_simplex(const GameShape& shape, const std::vector<Eigen::VectorXd>& sigma) {
  if (sigma.size() != static_cast<std::size_t>(shape.num_players()))
    throw std::invalid_argument("wrong number of mixed strategies");
  Eigen::VectorXd x(shape.dim);
  for (int i = 0; i < shape.num_players(); ++i) {
    if (static_cast<int>(sigma[i].size()) != shape.counts[i])
      throw std::invalid_argument("mixed strategy has wrong length");
    for (int a = 1; a < shape.counts[i]; ++a) x[shape.offsets[i] + a - 1] = sigma[i][a];
  }
  return x;
}

/// Reduced coordinates of a pure profile.
inline Eigen::VectorXd vertex_point(const GameShape& shape, const std::vector<int>& profile) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.dim);
  for (int i = 0; i < shape.num_players(); ++i)
    if (profile[i] > 0) x[shape.offsets[i] + profile[i] - 1] = 1.0;
  return x;
}

/// Uniform mixture for every player, in reduced coordinates.
inline Eigen::VectorXd barycenter(const GameShape& shape) {
  Eigen::VectorXd x(shape.dim);
  for (int i = 0; i < shape.num_players(); ++i)
    for (int a = 1; a < shape.counts[i]; ++a)
      x[shape.offsets[i] + a - 1] = 1.0 / shape.counts[i];
  return x;
}

inline bool in_domain(const GameShape& shape, const Eigen::VectorXd& x, double tol = 0.0) {
  if (x.size() != shape.dim) return false;
  for (int i = 0; i < shape.num_players(); ++i) {
    double sum = 0.0;
    for (int a = 1; a < shape.counts[i]; ++a) {
      const double v = x[shape.offsets[i] + a - 1];
      if (v < -tol) return false;
      sum += v;
    }
    if (sum > 1.0 + tol) return false;
  }
  return true;
}

/// Forces one player onto a pure action while evaluating a tensor.
struct Pin {
  int player = -1;
  int action = 0;
};

/// Expected value of a flat tensor under the product distribution at x, with
/// up to two players pinned to pure actions.
inline double eval_multilinear(const GameShape& shape, const Tensor& tensor, const Eigen::VectorXd& x,
                               Pin pin1 = {}, Pin pin2 = {}) {
  if (tensor.size() != shape.profiles) throw std::invalid_argument("tensor size does not match shape");
  if (x.size() != shape.dim) throw std::invalid_argument("point has wrong dimension");
  if (pin1.player >= 0 && pin1.player == pin2.player)
    throw std::invalid_argument("cannot pin the same player twice");
  const int n = shape.num_players();
  std::vector<Eigen::VectorXd> w(n);
  for (int i = 0; i < n; ++i) w[i] = player_weights(shape, x, i);
  for (Pin p : {pin1, pin2}) {
    if (p.player < 0) continue;
    if (p.player >= n || p.action < 0 || p.action >= shape.counts[p.player])
      throw std::invalid_argument("pin out of range");
    w[p.player].setZero();
    w[p.player][p.action] = 1.0;
  }
  double total = 0.0;
  std::vector<int> a(n, 0);
  for (std::size_t t = 0; t < tensor.size(); ++t) {
    if (tensor[t] != 0.0) {
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        prod *= w[i][a[i]];
        if (prod == 0.0) break;
      }
      if (prod != 0.0) total += tensor[t] * prod;
    }
    for (int i = n - 1; i >= 0; --i) {
      if (++a[i] < shape.counts[i]) break;
      a[i] = 0;
    }
  }
  return total;
}

inline double expected_utility(const NormalFormGame& g, int i, const Eigen::VectorXd& x) {
  return eval_multilinear(g.shape, g.payoffs.at(static_cast<std::size_t>(i)), x);
}

inline double expected_potential(const PotentialDecomposition& d, const Eigen::VectorXd& x) {
  return eval_multilinear(d.shape, d.potential, x);
}

/// Value to player i of each pure action against the others' mixtures in x.
inline Eigen::VectorXd action_values(const GameShape& shape, const Tensor& tensor, int i,
                                     const Eigen::VectorXd& x) {
  Eigen::VectorXd v(shape.counts[i]);
  for (int a = 0; a < shape.counts[i]; ++a) v[a] = eval_multilinear(shape, tensor, x, Pin{i, a});
  return v;
}

/// Gradient of the multilinear extension in reduced coordinates: component
/// (i, a) is the value of action a+1 minus the value of action 0.
inline Eigen::VectorXd potential_gradient(const GameShape& shape, const Tensor& tensor,
                                          const Eigen::VectorXd& x) {
  Eigen::VectorXd grad(shape.dim);
  for (int i = 0; i < shape.num_players(); ++i) {
    const double base = eval_multilinear(shape, tensor, x, Pin{i, 0});
    for (int a = 1; a < shape.counts[i]; ++a)
      grad[shape.offsets[i] + a - 1] = eval_multilinear(shape, tensor, x, Pin{i, a}) - base;
  }
  return grad;
}

/// Hessian of the multilinear extension in reduced coordinates. Diagonal
/// blocks are identically zero: the extension is affine in each player's own
/// coordinates, so they are written as exact zeros rather than evaluated.
inline Eigen::MatrixXd mixed_hessian(const GameShape& shape, const Tensor& tensor,
                                     const Eigen::VectorXd& x) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(shape.dim, shape.dim);
  for (int i = 0; i < shape.num_players(); ++i)
    for (int j = i + 1; j < shape.num_players(); ++j)
      for (int a = 1; a < shape.counts[i]; ++a)
        for (int b = 1; b < shape.counts[j]; ++b) {
          const double v11 = eval_multilinear(shape, tensor, x, Pin{i, a}, Pin{j, b});
          const double v10 = eval_multilinear(shape, tensor, x, Pin{i, a}, Pin{j, 0});
          const double v01 = eval_multilinear(shape, tensor, x, Pin{i, 0}, Pin{j, b});
          const double v00 = eval_multilinear(shape, tensor, x, Pin{i, 0}, Pin{j, 0});
          const double d2 = (v11 - v10) - (v01 - v00);
          h(shape.offsets[i] + a - 1, shape.offsets[j] + b - 1) = d2;
          h(shape.offsets[j] + b - 1, shape.offsets[i] + a - 1) = d2;
        }
  return h;
}

/// Actions of player i within tie_tol of their best payoff against x.
inline std::vector<int> best_response_set(const NormalFormGame& g, int i, const Eigen::VectorXd& x,
                                          double tie_tol = 1e-9) {
  const Eigen::VectorXd v = action_values(g.shape, g.payoffs[static_cast<std::size_t>(i)], i, x);
  const double top = v.maxCoeff();
  std::vector<int> out;
  for (int a = 0; a < v.size(); ++a)
    if (v[a] >= top - tie_tol) out.push_back(a);
  return out;
}

/// Support of a mixed profile, per player, in ascending action order.
struct Carrier {
  std::vector<std::vector<int>> supports;

  bool is_pure() const {
    for (const auto& s : supports)
      if (s.size() != 1) return false;
    return true;
  }
  int total_support() const {
    int n = 0;
    for (const auto& s : supports) n += static_cast<int>(s.size());
    return n;
  }
  bool operator==(const Carrier&) const = default;
};

inline Carrier carrier_of(const GameShape& shape, const Eigen::VectorXd& x, double tol = 1e-9) {
  Carrier c;
  c.supports.resize(shape.counts.size());
  for (int i = 0; i < shape.num_players(); ++i) {
    const Eigen::VectorXd w = player_weights(shape, x, i);
    for (int a = 0; a < shape.counts[i]; ++a)
      if (w[a] > tol) c.supports[static_cast<std::size_t>(i)].push_back(a);
  }
  return c;
}

/// Largest payoff any player gains by deviating from x; zero exactly at Nash
/// equilibria.
inline double equilibrium_gap(const NormalFormGame& g, const Eigen::VectorXd& x) {
  double gap = 0.0;
  for (int i = 0; i < g.shape.num_players(); ++i) {
    const Eigen::VectorXd v = action_values(g.shape, g.payoffs[static_cast<std::size_t>(i)], i, x);
    const Eigen::VectorXd w = player_weights(g.shape, x, i);
    gap = std::max(gap, v.maxCoeff() - w.dot(v));
  }
  return gap;
}

inline bool verify_equilibrium(const NormalFormGame& g, const Eigen::VectorXd& x, double tol = 1e-9) {
  return equilibrium_gap(g, x) <= tol;
}

struct DecompositionCheck {
  bool ok = false;
  double max_residual = 0.0;
  std::string detail;
};

/// Check the weighted potential property over every player, own action and
/// opponent profile (differences are taken against action 0, which spans all
/// pairs by telescoping).
inline DecompositionCheck verify_potential_decomposition(const NormalFormGame& g,
                                                         const PotentialDecomposition& d,
                                                         double tol = 1e-9) {
  DecompositionCheck out;
  if (!(g.shape == d.shape)) {
    out.detail = "shape mismatch";
    return out;
  }
  if (d.weights.size() != g.payoffs.size()) {
    out.detail = "wrong number of weights";
    return out;
  }
  if (d.potential.size() != g.shape.profiles) {
    out.detail = "potential tensor size does not match shape";
    return out;
  }
  for (double w : d.weights)
    if (!(w > 0.0)) {
      out.detail = "weights must be positive";
      return out;
    }
  const GameShape& s = g.shape;
  for (std::size_t t = 0; t < s.profiles; ++t) {
    const std::vector<int> prof = s.profile_of(t);
    for (int i = 0; i < s.num_players(); ++i) {
      if (prof[i] == 0) continue;
      const std::size_t base = t - s.strides[i] * static_cast<std::size_t>(prof[i]);
      const double du = g.payoffs[static_cast<std::size_t>(i)][t] - g.payoffs[static_cast<std::size_t>(i)][base];
      const double dphi = d.potential[t] - d.potential[base];
      out.max_residual = std::max(out.max_residual, std::abs(du - d.weights[static_cast<std::size_t>(i)] * dphi));
    }
  }
  out.ok = out.max_residual <= tol;
  return out;
}

/// Telescope a candidate potential along coordinate paths from the all-zero
/// profile with the given positive weights, then verify it. Empty when the
/// game admits no weighted potential with those weights.
inline std::optional<PotentialDecomposition> infer_potential(const NormalFormGame& g,
                                                             std::vector<double> weights,
                                                             double tol = 1e-9) {
  const GameShape& s = g.shape;
  if (weights.size() != g.payoffs.size()) throw std::invalid_argument("wrong number of weights");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
  PotentialDecomposition d{s, std::move(weights), Tensor(s.profiles, 0.0)};
  for (std::size_t t = 0; t < s.profiles; ++t) {
    int last = -1;
    const std::vector<int> prof = s.profile_of(t);
    for (int i = s.num_players() - 1; i >= 0; --i)
      if (prof[i] > 0) {
        last = i;
        break;
      }
    if (last < 0) {
      d.potential[t] = g.payoffs[0][t] / d.weights[0];
      continue;
    }
    const std::size_t prev = t - s.strides[last] * static_cast<std::size_t>(prof[last]);
    d.potential[t] = d.potential[prev] +
                     (g.payoffs[static_cast<std::size_t>(last)][t] - g.payoffs[static_cast<std::size_t>(last)][prev]) /
                         d.weights[static_cast<std::size_t>(last)];
  }
  if (!verify_potential_decomposition(g, d, tol).ok) return std::nullopt;
  return d;
}

/// Estimate weights from two-player payoff cycles: in a weighted potential
/// game the second difference of u_i and of u_j across a joint deviation are
/// proportional with ratio w_i : w_j. Players that never interact keep weight
/// one. Empty when some cycle forces a non-positive ratio.
inline std::optional<std::vector<double>> infer_weights(const NormalFormGame& g, double tol = 1e-9) {
  const GameShape& s = g.shape;
  const int n = s.num_players();
  std::vector<double> best_a(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  std::vector<double> best_b(best_a.size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (std::size_t t = 0; t < s.profiles; ++t) {
        const std::vector<int> prof = s.profile_of(t);
        if (prof[i] != 0 || prof[j] != 0) continue;
        for (int a = 1; a < s.counts[i]; ++a)
          for (int b = 1; b < s.counts[j]; ++b) {
            const std::size_t t10 = t + s.strides[i] * static_cast<std::size_t>(a);
            const std::size_t t01 = t + s.strides[j] * static_cast<std::size_t>(b);
            const std::size_t t11 = t10 + s.strides[j] * static_cast<std::size_t>(b);
            const Tensor& ui = g.payoffs[static_cast<std::size_t>(i)];
            const Tensor& uj = g.payoffs[static_cast<std::size_t>(j)];
            const double da = (ui[t11] - ui[t01]) - (ui[t10] - ui[t]);
            const double db = (uj[t11] - uj[t10]) - (uj[t01] - uj[t]);
            const bool ca = std::abs(da) > tol;
            const bool cb = std::abs(db) > tol;
            if (ca != cb) return std::nullopt;
            if (ca && da * db < 0.0) return std::nullopt;
            const std::size_t slot = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
            if (ca && std::abs(da) > std::abs(best_a[slot])) {
              best_a[slot] = da;
              best_b[slot] = db;
            }
          }
      }
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  for (int root = 0; root < n; ++root) {
    if (w[static_cast<std::size_t>(root)] != 0.0) continue;
    w[static_cast<std::size_t>(root)] = 1.0;
    std::vector<int> queue{root};
    while (!queue.empty()) {
      const int i = queue.back();
      queue.pop_back();
      for (int j = 0; j < n; ++j) {
        if (j == i || w[static_cast<std::size_t>(j)] != 0.0) continue;
        const int lo = std::min(i, j);
        const int hi = std::max(i, j);
        const std::size_t slot = static_cast<std::size_t>(lo) * static_cast<std::size_t>(n) + static_cast<std::size_t>(hi);
        if (best_a[slot] == 0.0) continue;
        const double ratio = best_b[slot] / best_a[slot];  // w[hi] / w[lo]
        w[static_cast<std::size_t>(j)] =
            (j == hi) ? w[static_cast<std::size_t>(i)] * ratio : w[static_cast<std::size_t>(i)] / ratio;
        queue.push_back(j);
      }
    }
  }
  return w;
}

/// Infer both weights and potential; empty when the game is not a weighted
/// potential game within tol.
inline std::optional<PotentialDecomposition> infer_potential(const NormalFormGame& g, double tol = 1e-9) {
  auto w = infer_weights(g, tol);
  if (!w) return std::nullopt;
  return infer_potential(g, *w, tol);
}

}  // namespace brflow
