#pragma once

#include "mtnd/milp/model.hpp"

namespace mtnd::milp {

// Branch-and-bound over the bounded-variable simplex: best-bound node
// selection, most-fractional branching, index tie-breaks throughout.
// Infeasible/unbounded are reported through Solution::status.
Solution solve(const Model& model, const SolverSettings& settings = {});

// Exact LP optimum with integrality dropped; a valid lower bound for the
// MILP minimum.
Solution solve_lp_relaxation(const Model& model,
                             const SolverSettings& settings = {});

}  // namespace mtnd::milp
