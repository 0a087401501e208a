#include "mtnd/milp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "mtnd/milp/simplex.hpp"

namespace mtnd::milp {

namespace {

using Clock = std::chrono::steady_clock;

struct Node {
  long id = 0;
  double bound = -kInf;  // parent LP objective
  // Accumulated bound tightenings (var, lower, upper).
  std::vector<std::tuple<int, double, double>> changes;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

int most_fractional(const Model& model, const std::vector<double>& x,
                    double int_tol, double* frac_out) {
  int best = -1;
  double best_dist = -1.0;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variable(j).kind == VarKind::Continuous) continue;
    const double v = x[static_cast<std::size_t>(j)];
    const double f = v - std::floor(v);
    const double dist = std::min(f, 1.0 - f);
    if (dist <= int_tol) continue;
    const double score = 0.5 - std::abs(f - 0.5);
    if (score > best_dist + 1e-12) {
      best_dist = score;
      best = j;
      if (frac_out) *frac_out = v;
    }
  }
  return best;
}

double objective_of(const Model& model, const std::vector<double>& x) {
  double obj = 0.0;
  for (int j = 0; j < model.num_variables(); ++j)
    obj += model.objective_coeff(j) * x[static_cast<std::size_t>(j)];
  return obj;
}

// Try integer roundings of the LP point; returns true if a feasible
// integral point was found (written to *out).
bool rounding_heuristic(const Model& model, const std::vector<double>& x,
                        const std::vector<double>& lo,
                        const std::vector<double>& up, double feas_tol,
                        std::vector<double>* out) {
  for (int variant = 0; variant < 3; ++variant) {
    std::vector<double> cand = x;
    for (int j = 0; j < model.num_variables(); ++j) {
      if (model.variable(j).kind == VarKind::Continuous) continue;
      double v = cand[static_cast<std::size_t>(j)];
      double r = variant == 0 ? std::round(v)
                 : variant == 1 ? std::ceil(v - 1e-9)
                                : std::floor(v + 1e-9);
      r = std::clamp(r, lo[static_cast<std::size_t>(j)],
                     up[static_cast<std::size_t>(j)]);
      cand[static_cast<std::size_t>(j)] = r;
    }
    if (model.max_violation(cand) <= feas_tol) {
      *out = std::move(cand);
      return true;
    }
  }
  return false;
}

}  // namespace

Solution solve_lp_relaxation(const Model& model,
                             const SolverSettings& settings) {
  Model copy = model;
  if (!copy.finalized()) copy.finalize();
  std::vector<double> lo, up;
  for (const Variable& v : copy.variables()) {
    lo.push_back(v.lower);
    up.push_back(v.upper);
  }
  const LpResult lp = solve_lp(copy, lo, up);
  Solution sol;
  sol.simplex_iterations = lp.iterations;
  switch (lp.status) {
    case LpResult::Status::Optimal:
      sol.status = SolveStatus::Optimal;
      sol.objective = lp.objective;
      sol.best_bound = lp.objective;
      sol.gap = 0.0;
      sol.values = lp.x;
      break;
    case LpResult::Status::Infeasible:
      sol.status = SolveStatus::Infeasible;
      break;
    case LpResult::Status::Unbounded:
      sol.status = SolveStatus::Unbounded;
      break;
    case LpResult::Status::IterLimit:
      sol.status = SolveStatus::TimeLimit;
      break;
  }
  (void)settings;
  return sol;
}

Solution solve(const Model& model, const SolverSettings& settings) {
  Model copy = model;
  if (!copy.finalized()) copy.finalize();
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(settings.time_limit_s));

  std::vector<double> base_lo, base_up;
  for (const Variable& v : copy.variables()) {
    base_lo.push_back(v.lower);
    base_up.push_back(v.upper);
  }

  Solution sol;
  bool have_incumbent = false;
  double incumbent = kInf;
  std::vector<double> incumbent_x;
  long next_id = 0;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push({next_id++, -kInf, {}});
  double best_bound = kInf;  // refreshed each loop from the queue top
  bool timed_out = false;

  while (!open.empty()) {
    best_bound = open.top().bound;
    if (have_incumbent &&
        relative_gap(incumbent, std::max(best_bound, -kInf)) <=
            settings.rel_gap)
      break;
    if (Clock::now() > deadline) {
      timed_out = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (have_incumbent && node.bound >= incumbent - 1e-12) continue;

    std::vector<double> lo = base_lo, up = base_up;
    for (const auto& [var, l, u] : node.changes) {
      auto vi = static_cast<std::size_t>(var);
      lo[vi] = std::max(lo[vi], l);
      up[vi] = std::min(up[vi], u);
    }
    const LpResult lp = solve_lp(copy, lo, up);
    sol.simplex_iterations += lp.iterations;
    ++sol.nodes;
    if (lp.status == LpResult::Status::Infeasible) continue;
    if (lp.status == LpResult::Status::Unbounded) {
      if (node.changes.empty() && copy.num_integer_variables() == 0) {
        sol.status = SolveStatus::Unbounded;
        return sol;
      }
      // Unbounded relaxation of the root with integers: treat as unbounded.
      if (node.changes.empty()) {
        sol.status = SolveStatus::Unbounded;
        return sol;
      }
      continue;
    }
    if (lp.status == LpResult::Status::IterLimit) {
      timed_out = true;
      break;
    }
    if (have_incumbent && lp.objective >= incumbent - 1e-12) continue;

    double frac_val = 0.0;
    const int branch_var =
        most_fractional(copy, lp.x, settings.int_tol, &frac_val);
    if (branch_var < 0) {
      incumbent = lp.objective;
      incumbent_x = lp.x;
      have_incumbent = true;
      continue;
    }
    std::vector<double> rounded;
    if (rounding_heuristic(copy, lp.x, lo, up, settings.feas_tol, &rounded)) {
      const double obj = objective_of(copy, rounded);
      if (!have_incumbent || obj < incumbent - 1e-12) {
        incumbent = obj;
        incumbent_x = std::move(rounded);
        have_incumbent = true;
      }
    }
    Node down = node;
    down.id = next_id++;
    down.bound = lp.objective;
    down.changes.push_back({branch_var, -kInf, std::floor(frac_val)});
    Node up_node = node;
    up_node.id = next_id++;
    up_node.bound = lp.objective;
    up_node.changes.push_back({branch_var, std::ceil(frac_val), kInf});
    open.push(std::move(down));
    open.push(std::move(up_node));
  }

  if (!have_incumbent) {
    sol.status = timed_out ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
    return sol;
  }
  const double bound = open.empty() ? incumbent : std::min(best_bound, incumbent);
  sol.objective = incumbent;
  sol.best_bound = bound;
  sol.gap = std::max(0.0, relative_gap(incumbent, bound));
  sol.values = std::move(incumbent_x);
  sol.status = sol.gap <= settings.rel_gap + 1e-12
                   ? SolveStatus::Optimal
                   : SolveStatus::FeasibleWithGap;
  if (timed_out && sol.status != SolveStatus::Optimal)
    sol.status = SolveStatus::TimeLimit;
  return sol;
}

}  // namespace mtnd::milp
