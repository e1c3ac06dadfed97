#include <catch2/catch_amalgamated.hpp>

#include <brflow/game.hpp>
#include <brflow/random.hpp>

#include <cmath>
#include <vector>

using Catch::Matchers::WithinAbs;
using namespace brflow;

namespace {

NormalFormGame coordination_2x2() {
  // Two-action coordination game: both players get 1 at (0,0) and 2 at (1,1).
  GameShape shape({2, 2});
  Tensor u{1.0, 0.0, 0.0, 2.0};
  return {shape, {u, u}};
}

NormalFormGame coordination_2x3() {
  // Same coordination payoffs with a dead third action for player 2.
  GameShape shape({2, 3});
  Tensor u{1.0, 0.0, 0.0, 0.0, 2.0, 0.0};
  return {shape, {u, u}};
}

NormalFormGame three_player_shifted() {
  // 2x2x2 identical-interest game whose third player shifts the diagonal
  // payoffs from (1,2) to (6,3).
  GameShape shape({2, 2, 2});
  Tensor u{1.0, 6.0, 0.0, 0.0, 0.0, 0.0, 2.0, 3.0};
  return {shape, {u, u, u}};
}

NormalFormGame matching_pennies() {
  GameShape shape({2, 2});
  Tensor u1{1.0, -1.0, -1.0, 1.0};
  Tensor u2{-1.0, 1.0, 1.0, -1.0};
  return {shape, {u1, u2}};
}

NormalFormGame random_game(const GameShape& shape, std::mt19937_64& eng) {
  std::vector<Tensor> u(shape.counts.size(), Tensor(shape.profiles));
  for (auto& t : u)
    for (double& v : t) v = uniform_in(eng, -1.0, 1.0);
  return {shape, std::move(u)};
}

const std::vector<GameShape> kShapes = {GameShape({2, 2}), GameShape({2, 3}), GameShape({2, 2, 2}),
                                        GameShape({3, 3})};

}  // namespace

TEST_CASE("shape indexing round-trips") {
  GameShape s({2, 3, 2});
  REQUIRE(s.num_players() == 3);
  REQUIRE(s.profiles == 12u);
  REQUIRE(s.dim == 4);
  REQUIRE(s.offsets == std::vector<int>{0, 1, 3});
  REQUIRE(s.strides == std::vector<std::size_t>{6, 2, 1});
  for (std::size_t t = 0; t < s.profiles; ++t) REQUIRE(s.flat_index(s.profile_of(t)) == t);
  REQUIRE(s.flat_index({1, 2, 1}) == 11u);
}

TEST_CASE("invalid shapes and games are rejected") {
  REQUIRE_THROWS_AS(GameShape(std::vector<int>{}), std::invalid_argument);
  REQUIRE_THROWS_AS(GameShape({2, 1}), std::invalid_argument);
  GameShape s({2, 2});
  REQUIRE_THROWS_AS(NormalFormGame(s, {Tensor{1, 2, 3, 4}}), std::invalid_argument);
  REQUIRE_THROWS_AS(NormalFormGame(s, {Tensor{1, 2, 3}, Tensor{1, 2, 3, 4}}), std::invalid_argument);
  NormalFormGame g = coordination_2x2();
  Eigen::Vector2d x(0.5, 0.5);
  REQUIRE_THROWS_AS(eval_multilinear(s, g.payoffs[0], x, Pin{0, 0}, Pin{0, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(infer_potential(g, std::vector<double>{0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("coordination game evaluation oracles") {
  NormalFormGame g = coordination_2x2();
  Eigen::Vector2d x(1.0 / 3.0, 1.0 / 3.0);
  REQUIRE_THAT(expected_utility(g, 0, x), WithinAbs(2.0 / 3.0, 1e-12));
  REQUIRE_THAT(expected_utility(g, 1, x), WithinAbs(2.0 / 3.0, 1e-12));

  Eigen::Vector2d origin(0.0, 0.0);
  Eigen::VectorXd grad = potential_gradient(g.shape, g.payoffs[0], origin);
  REQUIRE(grad[0] == -1.0);
  REQUIRE(grad[1] == -1.0);

  Eigen::MatrixXd h = mixed_hessian(g.shape, g.payoffs[0], x);
  REQUIRE(h(0, 0) == 0.0);
  REQUIRE(h(1, 1) == 0.0);
  REQUIRE(h(0, 1) == 3.0);
  REQUIRE(h(1, 0) == 3.0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
  REQUIRE_THAT(svd.singularValues().minCoeff(), WithinAbs(3.0, 1e-12));

  REQUIRE(equilibrium_gap(g, x) <= 1e-12);
  REQUIRE(verify_equilibrium(g, x));
  Eigen::Vector2d off(0.5, 0.5);
  REQUIRE(equilibrium_gap(g, off) > 0.1);
}

TEST_CASE("three-player game evaluation oracles") {
  NormalFormGame g = three_player_shifted();
  REQUIRE(g.shape.dim == 3);

  Eigen::Vector3d eq(2.0 / 3.0, 2.0 / 3.0, 1.0);
  // Both of player 3's actions against the others' mixtures, then everyone's
  // indifference at the equilibrium.
  Eigen::VectorXd v3 = action_values(g.shape, g.payoffs[2], 2, eq);
  REQUIRE_THAT(v3[0], WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(v3[1], WithinAbs(2.0, 1e-12));
  Eigen::VectorXd v1 = action_values(g.shape, g.payoffs[0], 0, eq);
  REQUIRE_THAT(v1[0], WithinAbs(2.0, 1e-12));
  REQUIRE_THAT(v1[1], WithinAbs(2.0, 1e-12));
  REQUIRE(equilibrium_gap(g, eq) <= 1e-12);

  Eigen::Vector3d all_second(1.0, 1.0, 1.0);
  REQUIRE(expected_utility(g, 2, all_second) == 3.0);
  REQUIRE(expected_utility(g, 0, vertex_point(g.shape, {0, 0, 1})) == 6.0);
  REQUIRE(expected_utility(g, 0, vertex_point(g.shape, {1, 1, 0})) == 2.0);

  Carrier c = carrier_of(g.shape, eq);
  REQUIRE(c.supports == std::vector<std::vector<int>>{{0, 1}, {0, 1}, {1}});
  REQUIRE_FALSE(c.is_pure());
  REQUIRE(c.total_support() == 5);
  REQUIRE(carrier_of(g.shape, vertex_point(g.shape, {1, 0, 1})).is_pure());
}

TEST_CASE("pinned evaluation matches vertex evaluation") {
  std::mt19937_64 eng = make_stream(41, 0);
  NormalFormGame g = random_game(GameShape({2, 2}), eng);
  Eigen::Vector2d x(0.37, 0.81);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double pinned = eval_multilinear(g.shape, g.payoffs[0], x, Pin{0, a}, Pin{1, b});
      REQUIRE(pinned == g.payoffs[0][g.shape.flat_index({a, b})]);
    }
  NormalFormGame g3 = random_game(GameShape({2, 2, 2}), eng);
  Eigen::VectorXd v = vertex_point(g3.shape, {1, 0, 1});
  REQUIRE(eval_multilinear(g3.shape, g3.payoffs[1], v) == g3.payoffs[1][g3.shape.flat_index({1, 0, 1})]);
}

TEST_CASE("multilinear extension is affine in each player's own block") {
  for (std::size_t si = 0; si < kShapes.size(); ++si) {
    const GameShape& shape = kShapes[si];
    std::mt19937_64 eng = make_stream(100, si);
    NormalFormGame g = random_game(shape, eng);
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::VectorXd x = sample_point(shape, eng);
      const int i = static_cast<int>(eng() % static_cast<std::uint64_t>(shape.num_players()));
      Eigen::VectorXd xa = x, xb = x, xm = x;
      const double lam = uniform01(eng);
      for (int a = 1; a < shape.counts[i]; ++a) {
        const int c = shape.offsets[i] + a - 1;
        xa[c] = uniform01(eng);
        xb[c] = uniform01(eng);
        xm[c] = lam * xa[c] + (1.0 - lam) * xb[c];
      }
      for (int p = 0; p < shape.num_players(); ++p) {
        const double lhs = eval_multilinear(shape, g.payoffs[p], xm);
        const double rhs = lam * eval_multilinear(shape, g.payoffs[p], xa) +
                           (1.0 - lam) * eval_multilinear(shape, g.payoffs[p], xb);
        REQUIRE_THAT(lhs, WithinAbs(rhs, 1e-12));
      }
    }
  }
}

TEST_CASE("gradient matches central differences") {
  const double h = 1e-6;
  for (std::size_t si = 0; si < kShapes.size(); ++si) {
    const GameShape& shape = kShapes[si];
    std::mt19937_64 eng = make_stream(200, si);
    NormalFormGame g = random_game(shape, eng);
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::VectorXd x = sample_point(shape, eng);
      Eigen::VectorXd grad = potential_gradient(shape, g.payoffs[0], x);
      for (int c = 0; c < shape.dim; ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const double fd =
            (eval_multilinear(shape, g.payoffs[0], xp) - eval_multilinear(shape, g.payoffs[0], xm)) / (2.0 * h);
        REQUIRE_THAT(grad[c], WithinAbs(fd, 1e-8));
      }
    }
  }
}

TEST_CASE("hessian structure and finite differences") {
  const double h = 1e-4;
  for (std::size_t si = 0; si < kShapes.size(); ++si) {
    const GameShape& shape = kShapes[si];
    std::mt19937_64 eng = make_stream(300, si);
    NormalFormGame g = random_game(shape, eng);
    Eigen::VectorXd x = sample_point(shape, eng);
    Eigen::MatrixXd hess = mixed_hessian(shape, g.payoffs[0], x);
    // exact symmetry and exactly-zero own-player blocks
    for (int r = 0; r < shape.dim; ++r)
      for (int c = 0; c < shape.dim; ++c) REQUIRE(hess(r, c) == hess(c, r));
    for (int i = 0; i < shape.num_players(); ++i)
      for (int a = 1; a < shape.counts[i]; ++a)
        for (int b = 1; b < shape.counts[i]; ++b)
          REQUIRE(hess(shape.offsets[i] + a - 1, shape.offsets[i] + b - 1) == 0.0);
    for (int r = 0; r < shape.dim; ++r)
      for (int c = 0; c < shape.dim; ++c) {
        Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[r] += h; xpp[c] += h;
        xpm[r] += h; xpm[c] -= h;
        xmp[r] -= h; xmp[c] += h;
        xmm[r] -= h; xmm[c] -= h;
        const double fd = (eval_multilinear(shape, g.payoffs[0], xpp) - eval_multilinear(shape, g.payoffs[0], xpm) -
                           eval_multilinear(shape, g.payoffs[0], xmp) + eval_multilinear(shape, g.payoffs[0], xmm)) /
                          (4.0 * h * h);
        REQUIRE_THAT(hess(r, c), WithinAbs(fd, 1e-6));
      }
  }
}

TEST_CASE("best responses ignore the player's own mixture") {
  for (std::size_t si = 0; si < kShapes.size(); ++si) {
    const GameShape& shape = kShapes[si];
    std::mt19937_64 eng = make_stream(400, si);
    NormalFormGame g = random_game(shape, eng);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd x = sample_point(shape, eng);
      for (int i = 0; i < shape.num_players(); ++i) {
        Eigen::VectorXd y = x;
        for (int a = 1; a < shape.counts[i]; ++a) y[shape.offsets[i] + a - 1] = uniform01(eng) * 0.4;
        REQUIRE(best_response_set(g, i, x) == best_response_set(g, i, y));
      }
    }
  }
}

TEST_CASE("simplex conversions round-trip exactly") {
  for (std::size_t si = 0; si < kShapes.size(); ++si) {
    const GameShape& shape = kShapes[si];
    std::mt19937_64 eng = make_stream(500, si);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd x = sample_point(shape, eng);
      REQUIRE(from_simplex(shape, to_simplex(shape, x)) == x);
      REQUIRE(in_domain(shape, x));
    }
  }
  GameShape s23({2, 3});
  Eigen::Vector3d bad(0.2, 0.6, 0.6);
  REQUIRE_FALSE(in_domain(s23, bad));
  Eigen::Vector3d neg(-0.1, 0.2, 0.2);
  REQUIRE_FALSE(in_domain(s23, neg));
  REQUIRE(in_domain(s23, barycenter(s23)));
  Eigen::VectorXd b = barycenter(s23);
  REQUIRE(b[0] == 0.5);
  REQUIRE_THAT(b[1], WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("identical payoffs verify against themselves as a potential") {
  NormalFormGame g = coordination_2x2();
  PotentialDecomposition d{g.shape, {1.0, 1.0}, g.payoffs[0]};
  DecompositionCheck check = verify_potential_decomposition(g, d);
  REQUIRE(check.ok);
  REQUIRE(check.max_residual == 0.0);

  PotentialDecomposition skewed = d;
  skewed.potential[3] += 1e-3;
  DecompositionCheck bad = verify_potential_decomposition(g, skewed);
  REQUIRE_FALSE(bad.ok);
  REQUIRE_THAT(bad.max_residual, WithinAbs(1e-3, 1e-12));

  PotentialDecomposition negw = d;
  negw.weights[0] = -1.0;
  REQUIRE_FALSE(verify_potential_decomposition(g, negw).ok);
  REQUIRE(verify_potential_decomposition(g, negw).detail == "weights must be positive");
}

TEST_CASE("inference recovers identical-interest potentials exactly") {
  for (NormalFormGame g : {coordination_2x2(), coordination_2x3(), three_player_shifted()}) {
    auto d = infer_potential(g, std::vector<double>(g.payoffs.size(), 1.0));
    REQUIRE(d.has_value());
    REQUIRE(d->potential == g.payoffs[0]);
    auto blind = infer_potential(g);
    REQUIRE(blind.has_value());
    for (double w : blind->weights) REQUIRE(w == 1.0);
    REQUIRE(blind->potential == g.payoffs[0]);
  }
}

TEST_CASE("inference recovers weighted potentials") {
  std::mt19937_64 eng = make_stream(600, 0);
  for (const GameShape& shape : kShapes) {
    Tensor phi(shape.profiles);
    for (double& v : phi) v = uniform_in(eng, -1.0, 1.0);
    const int n = shape.num_players();
    std::vector<double> weights;
    for (int i = 0; i < n; ++i) weights.push_back(uniform_in(eng, 0.5, 1.5));
    std::vector<Tensor> u(n, Tensor(shape.profiles));
    for (int i = 0; i < n; ++i) {
      // offsets depend only on the opponents' actions
      Tensor off(shape.profiles, 0.0);
      for (std::size_t t = 0; t < shape.profiles; ++t)
        if (shape.profile_of(t)[i] == 0) off[t] = uniform_in(eng, -1.0, 1.0);
      for (std::size_t t = 0; t < shape.profiles; ++t) {
        const std::size_t base = t - shape.strides[i] * static_cast<std::size_t>(shape.profile_of(t)[i]);
        u[i][t] = weights[static_cast<std::size_t>(i)] * phi[t] + off[base];
      }
    }
    NormalFormGame g(shape, u);
    auto d = infer_potential(g);
    REQUIRE(d.has_value());
    REQUIRE(verify_potential_decomposition(g, *d, 1e-9).ok);
    for (int i = 1; i < n; ++i)
      REQUIRE_THAT(d->weights[static_cast<std::size_t>(i)] / d->weights[0],
                   WithinAbs(weights[static_cast<std::size_t>(i)] / weights[0], 1e-9));

    // argmax of own payoff equals argmax of the potential for every player
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd x = sample_point(shape, eng);
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd vu = action_values(shape, g.payoffs[static_cast<std::size_t>(i)], i, x);
        Eigen::VectorXd vp = action_values(shape, d->potential, i, x);
        int bu = 0, bp = 0;
        vu.maxCoeff(&bu);
        vp.maxCoeff(&bp);
        REQUIRE(bu == bp);
      }
    }
  }
}

TEST_CASE("games without a potential are rejected") {
  NormalFormGame mp = matching_pennies();
  const Tensor& u1 = mp.payoffs[0];
  const Tensor& u2 = mp.payoffs[1];
  const GameShape& s = mp.shape;
  // the four-step deviation cycle around the profile square must telescope to
  // zero in a potential game; here it does not
  const double cycle = (u1[s.flat_index({1, 0})] - u1[s.flat_index({0, 0})]) +
                       (u2[s.flat_index({1, 1})] - u2[s.flat_index({1, 0})]) +
                       (u1[s.flat_index({0, 1})] - u1[s.flat_index({1, 1})]) +
                       (u2[s.flat_index({0, 0})] - u2[s.flat_index({0, 1})]);
  REQUIRE(cycle == -8.0);
  REQUIRE_FALSE(infer_potential(mp, std::vector<double>{1.0, 1.0}).has_value());
  REQUIRE_FALSE(infer_potential(mp).has_value());
  REQUIRE_FALSE(infer_weights(mp).has_value());
}

TEST_CASE("random streams are deterministic and index-separated") {
  std::mt19937_64 a = make_stream(7, 3);
  std::mt19937_64 b = make_stream(7, 3);
  std::mt19937_64 c = make_stream(7, 4);
  for (int k = 0; k < 16; ++k) REQUIRE(a() == b());
  bool differs = false;
  std::mt19937_64 a2 = make_stream(7, 3);
  for (int k = 0; k < 16; ++k) differs = differs || (a2() != c());
  REQUIRE(differs);

  GameShape shape({3, 3});
  std::mt19937_64 e1 = make_stream(9, 0);
  std::mt19937_64 e2 = make_stream(9, 0);
  REQUIRE(sample_point(shape, e1) == sample_point(shape, e2));
  std::mt19937_64 e3 = make_stream(9, 0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd w = sample_simplex(e3, 4);
    REQUIRE(w.minCoeff() >= 0.0);
    REQUIRE_THAT(w.sum(), WithinAbs(1.0, 1e-12));
  }
}
