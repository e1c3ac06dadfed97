#pragma once

// Nash equilibrium enumeration for finite games: exact pure search plus a
// carrier-by-carrier Newton solve of the mixed indifference systems, with
// first- and second-order regularity classification.

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "game.hpp"
#include "random.hpp"

namespace brflow {

struct SolveOptions {
  double solve_tol = 1e-10;   // residual norm accepted as an exact indifference solve
  double dedup_tol = 1e-7;    // infinity-norm distance under which two points merge
  double svd_tol = 1e-8;      // singular values below this count as zero
  double tie_tol = 1e-9;      // payoff ties and support membership
  double verify_tol = 1e-9;   // accepted equilibrium gap
  int extra_starts = 8;       // random Newton starts per carrier besides the barycenter
  int max_iters = 100;
  std::uint64_t seed = 12345;
};

struct EquilibriumRecord {
  Eigen::VectorXd point;  // reduced coordinates
  Carrier carrier;
  bool pure = false;
  bool first_order = false;   // carrier coincides with every player's best-response set
  bool second_order = false;  // carrier-restricted Hessian is nonsingular
  bool regular = false;
  bool continuum_hint = false;  // face with one mixing player and identically-zero residual
  double gap = 0.0;
  double min_singular = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd restricted_hessian;
};

/// Coordinates of the face selected by a carrier. Free variables are each
/// mixing player's carrier actions beyond the first; off-carrier actions are
/// pinned (to zero when solving, to supplied weights when projecting).
struct CarrierSystem {
  const NormalFormGame* game = nullptr;
  Carrier carrier;
  std::vector<int> base;                    // first carrier action per player
  std::vector<int> mixing;                  // players with two or more carrier actions
  std::vector<std::pair<int, int>> vars;    // (player, non-base carrier action)
  std::vector<std::pair<int, int>> off;     // (player, off-carrier action), ascending

  static CarrierSystem make(const NormalFormGame& g, Carrier c) {
    CarrierSystem sys;
    sys.game = &g;
    const int n = g.shape.num_players();
    if (static_cast<int>(c.supports.size()) != n) throw std::invalid_argument("carrier has wrong player count");
    sys.base.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& s = c.supports[static_cast<std::size_t>(i)];
      if (s.empty()) throw std::invalid_argument("carrier must give every player an action");
      sys.base[static_cast<std::size_t>(i)] = s[0];
      if (s.size() > 1) {
        sys.mixing.push_back(i);
        for (std::size_t k = 1; k < s.size(); ++k) sys.vars.emplace_back(i, s[k]);
      }
      std::size_t pos = 0;
      for (int a = 0; a < g.shape.counts[i]; ++a) {
        if (pos < s.size() && s[pos] == a) {
          ++pos;
          continue;
        }
        sys.off.emplace_back(i, a);
      }
    }
    sys.carrier = std::move(c);
    return sys;
  }

  int free_dim() const { return static_cast<int>(vars.size()); }
  int off_dim() const { return static_cast<int>(off.size()); }

  /// Reduced coordinates of the point with carrier weights (base implied) z
  /// and off-carrier weights xp.
  Eigen::VectorXd embed(const Eigen::VectorXd& z, const Eigen::VectorXd& xp) const {
    const GameShape& s = game->shape;
    if (z.size() != free_dim() || xp.size() != off_dim())
      throw std::invalid_argument("carrier coordinates have wrong dimension");
    std::vector<Eigen::VectorXd> w;
    w.reserve(static_cast<std::size_t>(s.num_players()));
    for (int i = 0; i < s.num_players(); ++i) w.push_back(Eigen::VectorXd::Zero(s.counts[i]));
    for (int k = 0; k < off_dim(); ++k) w[static_cast<std::size_t>(off[static_cast<std::size_t>(k)].first)][off[static_cast<std::size_t>(k)].second] = xp[k];
    for (int k = 0; k < free_dim(); ++k) w[static_cast<std::size_t>(vars[static_cast<std::size_t>(k)].first)][vars[static_cast<std::size_t>(k)].second] = z[k];
    for (int i = 0; i < s.num_players(); ++i) {
      const int b = base[static_cast<std::size_t>(i)];
      w[static_cast<std::size_t>(i)][b] = 1.0 - (w[static_cast<std::size_t>(i)].sum() - w[static_cast<std::size_t>(i)][b]);
    }
    return from_simplex(s, w);
  }

  Eigen::VectorXd embed(const Eigen::VectorXd& z) const {
    return embed(z, Eigen::VectorXd::Zero(off_dim()));
  }

  /// Indifference residuals at x: for each free variable (i, a), player i's
  /// payoff to a minus their payoff to the base carrier action.
  Eigen::VectorXd residual_at(const Eigen::VectorXd& x) const {
    Eigen::VectorXd f(free_dim());
    for (int k = 0; k < free_dim(); ++k) {
      const auto [i, a] = vars[static_cast<std::size_t>(k)];
      const Tensor& u = game->payoffs[static_cast<std::size_t>(i)];
      f[k] = eval_multilinear(game->shape, u, x, Pin{i, a}) -
             eval_multilinear(game->shape, u, x, Pin{i, base[static_cast<std::size_t>(i)]});
    }
    return f;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& z, const Eigen::VectorXd& xp) const {
    return residual_at(embed(z, xp));
  }
  Eigen::VectorXd residual(const Eigen::VectorXd& z) const { return residual_at(embed(z)); }

  /// Second difference of `tensor` at x across the moves (i: a vs ai0) and
  /// (j: b vs bj0).
  double second_difference(const Tensor& tensor, const Eigen::VectorXd& x, int i, int a, int ai0, int j,
                           int b, int bj0) const {
    const GameShape& s = game->shape;
    const double v11 = eval_multilinear(s, tensor, x, Pin{i, a}, Pin{j, b});
    const double v01 = eval_multilinear(s, tensor, x, Pin{i, ai0}, Pin{j, b});
    const double v10 = eval_multilinear(s, tensor, x, Pin{i, a}, Pin{j, bj0});
    const double v00 = eval_multilinear(s, tensor, x, Pin{i, ai0}, Pin{j, bj0});
    return (v11 - v01) - (v10 - v00);
  }

  /// Jacobian of the residual in the free variables, evaluated at x. Own-player
  /// entries are exactly zero.
  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(free_dim(), free_dim());
    for (int r = 0; r < free_dim(); ++r) {
      const auto [i, a] = vars[static_cast<std::size_t>(r)];
      for (int c = 0; c < free_dim(); ++c) {
        const auto [j, b] = vars[static_cast<std::size_t>(c)];
        if (i == j) continue;
        jac(r, c) = second_difference(game->payoffs[static_cast<std::size_t>(i)], x, i, a,
                                      base[static_cast<std::size_t>(i)], j, b, base[static_cast<std::size_t>(j)]);
      }
    }
    return jac;
  }

  /// Hessian of a single tensor restricted to the face coordinates.
  Eigen::MatrixXd restricted_matrix(const Eigen::VectorXd& x, const Tensor& tensor) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(free_dim(), free_dim());
    for (int r = 0; r < free_dim(); ++r) {
      const auto [i, a] = vars[static_cast<std::size_t>(r)];
      for (int c = 0; c < free_dim(); ++c) {
        const auto [j, b] = vars[static_cast<std::size_t>(c)];
        if (i == j) continue;
        m(r, c) = second_difference(tensor, x, i, a, base[static_cast<std::size_t>(i)], j, b,
                                    base[static_cast<std::size_t>(j)]);
      }
    }
    return m;
  }

  /// Barycenter of the face in free coordinates.
  Eigen::VectorXd barycenter_z() const {
    Eigen::VectorXd z(free_dim());
    for (int k = 0; k < free_dim(); ++k) {
      const int i = vars[static_cast<std::size_t>(k)].first;
      z[k] = 1.0 / static_cast<double>(carrier.supports[static_cast<std::size_t>(i)].size());
    }
    return z;
  }

  /// All carrier weights (base included) strictly above tol, off-carrier zero.
  bool interior(const Eigen::VectorXd& z, double tol) const {
    std::vector<double> base_weight(base.size(), 1.0);
    for (int k = 0; k < free_dim(); ++k) {
      if (z[k] <= tol) return false;
      base_weight[static_cast<std::size_t>(vars[static_cast<std::size_t>(k)].first)] -= z[k];
    }
    for (double bw : base_weight)
      if (bw <= tol) return false;
    return true;
  }
};

/// Damped Newton iteration on the carrier's indifference system.
inline std::optional<Eigen::VectorXd> solve_carrier(const CarrierSystem& sys, Eigen::VectorXd z,
                                                    const SolveOptions& o = {}) {
  for (int it = 0; it < o.max_iters; ++it) {
    const Eigen::VectorXd f = sys.residual(z);
    if (f.lpNorm<Eigen::Infinity>() <= o.solve_tol) return z;
    const Eigen::MatrixXd jac = sys.jacobian_at(sys.embed(z));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd step = lu.solve(-f);
    const double f0 = f.norm();
    double lam = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd zc = z + lam * step;
      if (sys.residual(zc).norm() < f0) {
        z = zc;
        moved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!moved) return std::nullopt;
  }
  if (sys.residual(z).lpNorm<Eigen::Infinity>() <= o.solve_tol) return z;
  return std::nullopt;
}

/// Every carrier of the shape, ordered by total support then lexicographic
/// support masks.
inline std::vector<Carrier> all_carriers(const GameShape& shape) {
  const int n = shape.num_players();
  std::vector<std::vector<std::vector<int>>> per_player(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (unsigned mask = 1; mask < (1u << shape.counts[i]); ++mask) {
      std::vector<int> s;
      for (int a = 0; a < shape.counts[i]; ++a)
        if (mask & (1u << a)) s.push_back(a);
      per_player[static_cast<std::size_t>(i)].push_back(std::move(s));
    }
  std::vector<Carrier> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Carrier c;
    for (int i = 0; i < n; ++i) c.supports.push_back(per_player[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]]);
    out.push_back(std::move(c));
    int i = n - 1;
    for (; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < per_player[static_cast<std::size_t>(i)].size()) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
  auto key = [&shape](const Carrier& c) {
    std::vector<unsigned> masks;
    for (const auto& s : c.supports) {
      unsigned m = 0;
      for (int a : s) m |= (1u << a);
      masks.push_back(m);
    }
    (void)shape;
    return std::make_pair(c.total_support(), masks);
  };
  std::stable_sort(out.begin(), out.end(), [&key](const Carrier& a, const Carrier& b) { return key(a) < key(b); });
  return out;
}

/// Fill the classification fields of a record; the potential tensor, when
/// available, supplies the restricted Hessian (otherwise each row falls back
/// to the variable owner's payoffs, which shares its null space).
inline void classify_record(const NormalFormGame& g, const Tensor* potential, const SolveOptions& o,
                            EquilibriumRecord& r) {
  r.gap = equilibrium_gap(g, r.point);
  r.first_order = true;
  for (int i = 0; i < g.shape.num_players(); ++i)
    if (best_response_set(g, i, r.point, o.tie_tol) != r.carrier.supports[static_cast<std::size_t>(i)]) {
      r.first_order = false;
      break;
    }
  CarrierSystem sys = CarrierSystem::make(g, r.carrier);
  if (sys.free_dim() == 0) {
    r.second_order = true;
    r.min_singular = std::numeric_limits<double>::quiet_NaN();
    r.restricted_hessian.resize(0, 0);
  } else {
    r.restricted_hessian = potential ? sys.restricted_matrix(r.point, *potential) : sys.jacobian_at(r.point);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.restricted_hessian);
    r.min_singular = svd.singularValues().minCoeff();
    r.second_order = r.min_singular > o.svd_tol;
  }
  r.regular = r.first_order && r.second_order;
}

/// Exact scan of all pure profiles.
inline std::vector<EquilibriumRecord> enumerate_pure_equilibria(const NormalFormGame& g,
                                                                const SolveOptions& o = {},
                                                                const Tensor* potential = nullptr) {
  const GameShape& s = g.shape;
  std::vector<EquilibriumRecord> out;
  for (std::size_t t = 0; t < s.profiles; ++t) {
    const std::vector<int> prof = s.profile_of(t);
    bool nash = true;
    for (int i = 0; i < s.num_players() && nash; ++i) {
      const std::size_t rest = t - s.strides[i] * static_cast<std::size_t>(prof[i]);
      const double own = g.payoffs[static_cast<std::size_t>(i)][t];
      for (int a = 0; a < s.counts[i]; ++a)
        if (g.payoffs[static_cast<std::size_t>(i)][rest + s.strides[i] * static_cast<std::size_t>(a)] >
            own + o.tie_tol) {
          nash = false;
          break;
        }
    }
    if (!nash) continue;
    EquilibriumRecord r;
    r.point = vertex_point(s, prof);
    r.pure = true;
    r.carrier.supports.resize(static_cast<std::size_t>(s.num_players()));
    for (int i = 0; i < s.num_players(); ++i) r.carrier.supports[static_cast<std::size_t>(i)] = {prof[i]};
    classify_record(g, potential, o, r);
    out.push_back(std::move(r));
  }
  return out;
}

/// Pure scan plus the Newton solve of every mixed carrier. Faces with one
/// mixing player have constant residuals: when those vanish the whole face is
/// a continuum of equilibria, reported by its barycenter with a hint flag.
inline std::vector<EquilibriumRecord> solve_equilibria(const NormalFormGame& g, const SolveOptions& o = {},
                                                       const Tensor* potential = nullptr) {
  std::vector<EquilibriumRecord> out = enumerate_pure_equilibria(g, o, potential);
  const std::vector<Carrier> carriers = all_carriers(g.shape);
  std::uint64_t cindex = 0;
  for (const Carrier& c : carriers) {
    ++cindex;
    if (c.total_support() == g.shape.num_players()) continue;
    const CarrierSystem sys = CarrierSystem::make(g, c);
    std::vector<Eigen::VectorXd> sols;
    if (sys.mixing.size() == 1) {
      const Eigen::VectorXd z = sys.barycenter_z();
      if (sys.residual(z).lpNorm<Eigen::Infinity>() <= o.solve_tol) sols.push_back(z);
    } else {
      std::mt19937_64 eng = make_stream(o.seed, cindex);
      std::vector<Eigen::VectorXd> starts{sys.barycenter_z()};
      for (int k = 0; k < o.extra_starts; ++k) {
        Eigen::VectorXd z(sys.free_dim());
        int pos = 0;
        for (int i : sys.mixing) {
          const int m = static_cast<int>(c.supports[static_cast<std::size_t>(i)].size());
          const Eigen::VectorXd w = sample_simplex(eng, m);
          for (int q = 1; q < m; ++q) z[pos++] = w[q];
        }
        starts.push_back(std::move(z));
      }
      for (const Eigen::VectorXd& z0 : starts) {
        auto z = solve_carrier(sys, z0, o);
        if (z) sols.push_back(*z);
      }
    }
    for (const Eigen::VectorXd& z : sols) {
      if (!sys.interior(z, o.tie_tol)) continue;
      const Eigen::VectorXd x = sys.embed(z);
      if (!verify_equilibrium(g, x, o.verify_tol)) continue;
      bool dup = false;
      for (const EquilibriumRecord& r : out)
        if ((r.point - x).lpNorm<Eigen::Infinity>() < o.dedup_tol) {
          dup = true;
          break;
        }
      if (dup) continue;
      EquilibriumRecord rec;
      rec.point = x;
      rec.carrier = c;
      rec.continuum_hint = (sys.mixing.size() == 1);
      classify_record(g, potential, o, rec);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace brflow
