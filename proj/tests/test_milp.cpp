#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtnd/milp/io.hpp"
#include "mtnd/milp/model.hpp"
#include "mtnd/milp/solver.hpp"

using namespace mtnd::milp;

TEST_CASE("single integer variable with a lower bound") {
  Model m;
  const int x = m.add_variable("x", 0, kInf, VarKind::Integer);
  m.set_objective(x, 1.0);
  m.add_constraint("lb", {{x, 1.0}}, Relation::GreaterEqual, 3.0);
  Solution s = solve(m);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.values[static_cast<std::size_t>(x)] == doctest::Approx(3.0));
}

TEST_CASE("pure feasibility problem reports objective zero") {
  Model m;
  const int x = m.add_variable("x", 0, 10);
  const int y = m.add_variable("y", 0, 10);
  m.add_constraint("c", {{x, 1.0}, {y, 1.0}}, Relation::LessEqual, 5.0);
  Solution s = solve(m);
  CHECK(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(0.0));
  CHECK(m.max_violation(s.values) <= 1e-6);
}

TEST_CASE("infeasible and unbounded statuses") {
  SUBCASE("contradictory constraints") {
    Model m;
    const int x = m.add_variable("x", 0, 10);
    m.add_constraint("a", {{x, 1.0}}, Relation::GreaterEqual, 5.0);
    m.add_constraint("b", {{x, 1.0}}, Relation::LessEqual, 1.0);
    CHECK(solve(m).status == SolveStatus::Infeasible);
    CHECK(solve_lp_relaxation(m).status == SolveStatus::Infeasible);
  }
  SUBCASE("objective unbounded below") {
    Model m;
    const int x = m.add_variable("x", -kInf, kInf);
    m.set_objective(x, 1.0);
    m.add_constraint("c", {{x, 1.0}}, Relation::LessEqual, 4.0);
    CHECK(solve(m).status == SolveStatus::Unbounded);
  }
}

namespace {

struct Knapsack {
  std::vector<double> value, weight;
  double capacity = 0.0;
};

Knapsack random_knapsack(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(1.0, 20.0), w(1.0, 12.0);
  Knapsack k;
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    k.value.push_back(std::floor(v(rng) * 4) / 4);
    k.weight.push_back(std::floor(w(rng) * 4) / 4);
    total += k.weight.back();
  }
  k.capacity = 0.45 * total;
  return k;
}

double knapsack_brute_force(const Knapsack& k) {
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << 10); ++mask) {
    double value = 0.0, weight = 0.0;
    for (int i = 0; i < 10; ++i)
      if (mask & (1u << i)) {
        value += k.value[static_cast<std::size_t>(i)];
        weight += k.weight[static_cast<std::size_t>(i)];
      }
    if (weight <= k.capacity + 1e-12) best = std::max(best, value);
  }
  return best;
}

Model knapsack_model(const Knapsack& k) {
  Model m;
  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < 10; ++i) {
    const int x = m.add_variable("x" + std::to_string(i), 0, 1, VarKind::Binary);
    m.set_objective(x, -k.value[static_cast<std::size_t>(i)]);
    row.push_back({x, k.weight[static_cast<std::size_t>(i)]});
  }
  m.add_constraint("cap", std::move(row), Relation::LessEqual, k.capacity);
  return m;
}

}  // namespace

TEST_CASE("ten-item knapsacks match exhaustive enumeration") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const Knapsack k = random_knapsack(seed);
    Model m = knapsack_model(k);
    Solution s = solve(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(-s.objective == doctest::Approx(knapsack_brute_force(k)));
    CHECK(m.max_violation(s.values) <= 1e-6);
    // relaxation is a valid bound
    Solution lp = solve_lp_relaxation(m);
    CHECK(lp.objective <= s.objective + 1e-6);
  }
}

TEST_CASE("relaxing a continuous model changes nothing") {
  Model m;
  const int x = m.add_variable("x", 0, kInf);
  const int y = m.add_variable("y", 0, kInf);
  m.set_objective(x, 2.0);
  m.set_objective(y, 3.0);
  m.add_constraint("c1", {{x, 1.0}, {y, 1.0}}, Relation::GreaterEqual, 4.0);
  m.add_constraint("c2", {{x, 1.0}, {y, -1.0}}, Relation::LessEqual, 2.0);
  Solution a = solve(m);
  Solution b = solve_lp_relaxation(m);
  CHECK(a.status == SolveStatus::Optimal);
  CHECK(a.objective == doctest::Approx(b.objective));
  // optimum at x=3, y=1
  CHECK(a.objective == doctest::Approx(9.0));
}

TEST_CASE("two-by-two transportation problem") {
  Model m;
  const double cost[2][2] = {{1, 2}, {2, 1}};
  int x[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      x[i][j] = m.add_variable("x" + std::to_string(i) + std::to_string(j), 0,
                               kInf);
      m.set_objective(x[i][j], cost[i][j]);
    }
  for (int i = 0; i < 2; ++i)
    m.add_constraint("supply" + std::to_string(i),
                     {{x[i][0], 1.0}, {x[i][1], 1.0}}, Relation::Equal, 1.0);
  for (int j = 0; j < 2; ++j)
    m.add_constraint("demand" + std::to_string(j),
                     {{x[0][j], 1.0}, {x[1][j], 1.0}}, Relation::Equal, 1.0);
  Solution s = solve_lp_relaxation(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(2.0));
}

TEST_CASE("scaling the objective preserves the argmin") {
  const Knapsack k = random_knapsack(9);
  Model m = knapsack_model(k);
  Solution a = solve(m);
  Model scaled = knapsack_model(k);
  for (int j = 0; j < scaled.num_variables(); ++j)
    scaled.set_objective(j, 7.0 * scaled.objective_coeff(j));
  Solution b = solve(scaled);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(b.objective == doctest::Approx(7.0 * a.objective));
  for (std::size_t j = 0; j < a.values.size(); ++j)
    CHECK(std::round(a.values[j]) == doctest::Approx(std::round(b.values[j])));
}

TEST_CASE("reported gap matches its definition") {
  const Knapsack k = random_knapsack(4);
  Model m = knapsack_model(k);
  Solution s = solve(m);
  CHECK(s.gap == doctest::Approx(std::max(
                     0.0, (s.objective - s.best_bound) /
                              std::max(std::abs(s.objective), 1e-10))));
  CHECK(s.gap <= 1e-6);
}

TEST_CASE("degenerate and larger LPs solve correctly") {
  // assignment polytope, 6x6: optimum picks one entry per row/column
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(1.0, 9.0);
  const int n = 6;
  Model m;
  std::vector<std::vector<int>> x(n, std::vector<int>(n));
  std::vector<std::vector<double>> c(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c[i][j] = u(rng);
      x[i][j] = m.add_variable(
          "a" + std::to_string(i) + "_" + std::to_string(j), 0, 1);
      m.set_objective(x[i][j], c[i][j]);
    }
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> row, col;
    for (int j = 0; j < n; ++j) {
      row.push_back({x[i][j], 1.0});
      col.push_back({x[j][i], 1.0});
    }
    m.add_constraint("r" + std::to_string(i), std::move(row), Relation::Equal, 1);
    m.add_constraint("c" + std::to_string(i), std::move(col), Relation::Equal, 1);
  }
  Solution s = solve_lp_relaxation(m);
  REQUIRE(s.status == SolveStatus::Optimal);
  // brute-force over all 720 permutations
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = kInf;
  do {
    double tot = 0.0;
    for (int i = 0; i < n; ++i)
      tot += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(
          perm[static_cast<std::size_t>(i)])];
    best = std::min(best, tot);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(s.objective == doctest::Approx(best));
}

TEST_CASE("model validation rejects malformed input") {
  Model m;
  const int x = m.add_variable("x", 5, 1);  // crossed bounds
  m.set_objective(x, 1.0);
  CHECK_THROWS_AS(m.finalize(), ModelError);
  Model m2;
  (void)m2.add_variable("x", 0, 1);
  (void)m2.add_constraint("c", {{7, 1.0}}, Relation::LessEqual, 1.0);
  CHECK_THROWS_AS(m2.finalize(), ModelError);
}

TEST_CASE("text export round-trips in both formats") {
  const Knapsack k = random_knapsack(6);
  Model m = knapsack_model(k);
  // add variety: a free variable, an equality, and a >= row
  const int y = m.add_variable("y", -kInf, kInf);
  const int z = m.add_variable("z", -3, 8);
  m.set_objective(y, 0.5);
  m.add_constraint("eq", {{y, 1.0}, {z, 2.0}}, Relation::Equal, 1.0);
  m.add_constraint("ge", {{y, 1.0}}, Relation::GreaterEqual, -4.0);
  Solution ref = solve(m);
  REQUIRE(ref.status == SolveStatus::Optimal);

  for (ExportFormat fmt : {ExportFormat::LpText, ExportFormat::MpsText}) {
    CAPTURE(static_cast<int>(fmt));
    const std::string text = export_model(m, fmt);
    Model back = parse_model(text, fmt);
    REQUIRE(back.num_variables() == m.num_variables());
    REQUIRE(back.num_constraints() == m.num_constraints());
    auto same_bound = [](double a, double b) {
      return std::isinf(a) ? a == b : a == doctest::Approx(b);
    };
    for (int j = 0; j < m.num_variables(); ++j) {
      CHECK(back.variable(j).kind == m.variable(j).kind);
      CHECK(same_bound(back.variable(j).lower, m.variable(j).lower));
      CHECK(same_bound(back.variable(j).upper, m.variable(j).upper));
    }
    for (int i = 0; i < m.num_constraints(); ++i)
      CHECK(back.constraint(i).rel == m.constraint(i).rel);
    Solution s = solve(back);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(ref.objective));
  }
}

TEST_CASE("duplicate variable tags cannot be exported") {
  Model m;
  (void)m.add_variable("x", 0, 1);
  (void)m.add_variable("x", 0, 1);
  CHECK_THROWS_AS(static_cast<void>(export_model(m, ExportFormat::LpText)),
                  ModelError);
  Model m2;
  (void)m2.add_variable("bad tag", 0, 1);
  CHECK_THROWS_AS(static_cast<void>(export_model(m2, ExportFormat::MpsText)),
                  ModelError);
}

TEST_CASE("solution files round-trip") {
  const Knapsack k = random_knapsack(8);
  Model m = knapsack_model(k);
  m.finalize();
  Solution s = solve(m);
  Solution back = parse_solution(m, serialize_solution(m, s));
  CHECK(back.status == s.status);
  CHECK(back.objective == doctest::Approx(s.objective));
  for (std::size_t j = 0; j < s.values.size(); ++j)
    CHECK(back.values[j] == doctest::Approx(s.values[j]));
}
