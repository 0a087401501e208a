#pragma once

#include <vector>

#include "mtnd/milp/model.hpp"

namespace mtnd::milp {

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded, IterLimit };
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;   // structural variables only
  long iterations = 0;
};

// Bounded-variable primal simplex (two-phase, revised form with a dense
// basis inverse and periodic refactorization).  `lower`/`upper` override the
// model bounds (branch-and-bound node bounds).  Deterministic: Dantzig
// pricing with index tie-breaks, Bland's rule under degeneracy stalls.
LpResult solve_lp(const Model& model, const std::vector<double>& lower,
                  const std::vector<double>& upper,
                  long max_iterations = 2'000'000);

}  // namespace mtnd::milp
