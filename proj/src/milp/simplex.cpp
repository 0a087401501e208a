#include "mtnd/milp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtnd::milp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDualTol = 1e-7;
constexpr double kPrimalTol = 1e-8;
constexpr int kRefactorEvery = 400;

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper, Free };

struct Tableau {
  int m = 0;        // rows
  int ncols = 0;    // structural + slack + artificial
  int nstruct = 0;
  int art_begin = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;  // sparse columns
  std::vector<double> lo, up, cost, phase1_cost;
  std::vector<double> rhs;       // row-scaled
  std::vector<VarStatus> status;
  std::vector<double> xn;        // nonbasic values
  std::vector<int> basis;        // row -> column
  std::vector<double> xb;        // basic values
  std::vector<double> binv;      // dense m*m, row-major

  double& b(int r, int c) { return binv[static_cast<std::size_t>(r) *
                                        static_cast<std::size_t>(m) +
                                        static_cast<std::size_t>(c)]; }
};

double nonbasic_value(const Tableau& t, int j) {
  switch (t.status[static_cast<std::size_t>(j)]) {
    case VarStatus::AtLower: return t.lo[static_cast<std::size_t>(j)];
    case VarStatus::AtUpper: return t.up[static_cast<std::size_t>(j)];
    default: return 0.0;
  }
}

// Recompute binv = B^{-1} by Gauss-Jordan and xb from scratch.
bool refactorize(Tableau& t) {
  const int m = t.m;
  std::vector<double> dense(static_cast<std::size_t>(m) *
                            static_cast<std::size_t>(m), 0.0);
  auto D = [&](int r, int c) -> double& {
    return dense[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) +
                 static_cast<std::size_t>(c)];
  };
  for (int c = 0; c < m; ++c)
    for (const auto& [r, v] : t.cols[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(c)])])
      D(r, c) = v;
  std::fill(t.binv.begin(), t.binv.end(), 0.0);
  for (int i = 0; i < m; ++i) t.b(i, i) = 1.0;
  // Gauss-Jordan with partial pivoting, applied to [B | I].
  for (int c = 0; c < m; ++c) {
    int piv = -1;
    double best = 0.0;
    for (int r = c; r < m; ++r)
      if (std::abs(D(r, c)) > best) {
        best = std::abs(D(r, c));
        piv = r;
      }
    if (piv < 0 || best < 1e-12) return false;  // singular basis
    if (piv != c) {
      for (int k = 0; k < m; ++k) {
        std::swap(D(c, k), D(piv, k));
        std::swap(t.b(c, k), t.b(piv, k));
      }
      std::swap(t.basis[static_cast<std::size_t>(c)],
                t.basis[static_cast<std::size_t>(piv)]);
    }
    const double inv = 1.0 / D(c, c);
    for (int k = 0; k < m; ++k) {
      D(c, k) *= inv;
      t.b(c, k) *= inv;
    }
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = D(r, c);
      if (f == 0.0) continue;
      for (int k = 0; k < m; ++k) {
        D(r, k) -= f * D(c, k);
        t.b(r, k) -= f * t.b(c, k);
      }
    }
  }
  // xb = B^{-1} (rhs - N xn)
  std::vector<double> resid = t.rhs;
  for (int j = 0; j < t.ncols; ++j) {
    if (t.status[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
    const double v = nonbasic_value(t, j);
    if (v == 0.0) continue;
    for (const auto& [r, a] : t.cols[static_cast<std::size_t>(j)])
      resid[static_cast<std::size_t>(r)] -= a * v;
  }
  for (int r = 0; r < m; ++r) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += t.b(r, k) * resid[static_cast<std::size_t>(k)];
    t.xb[static_cast<std::size_t>(r)] = acc;
  }
  return true;
}

// One simplex phase over the given cost vector.  Returns true if optimal
// reached, false on iteration limit.  Sets *unbounded when detected.
bool run_phase(Tableau& t, const std::vector<double>& cost, long max_iters,
               long& iters, bool* unbounded) {
  const int m = t.m;
  *unbounded = false;
  std::vector<double> y(static_cast<std::size_t>(m));
  std::vector<double> w(static_cast<std::size_t>(m));
  int since_refactor = 0;
  long degenerate_streak = 0;

  while (iters < max_iters) {
    // y = cB^T B^{-1}
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        const double cb = cost[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(i)])];
        if (cb != 0.0) acc += cb * t.b(i, j);
      }
      y[static_cast<std::size_t>(j)] = acc;
    }
    const bool bland = degenerate_streak > m + 64;
    int enter = -1;
    double best_score = kDualTol;
    int enter_dir = 0;
    for (int j = 0; j < t.ncols; ++j) {
      const VarStatus st = t.status[static_cast<std::size_t>(j)];
      if (st == VarStatus::Basic) continue;
      if (t.lo[static_cast<std::size_t>(j)] == t.up[static_cast<std::size_t>(j)])
        continue;  // fixed
      double d = cost[static_cast<std::size_t>(j)];
      for (const auto& [r, a] : t.cols[static_cast<std::size_t>(j)])
        d -= y[static_cast<std::size_t>(r)] * a;
      int dir = 0;
      if ((st == VarStatus::AtLower || st == VarStatus::Free) && d < -kDualTol)
        dir = +1;
      else if ((st == VarStatus::AtUpper || st == VarStatus::Free) && d > kDualTol)
        dir = -1;
      if (dir == 0) continue;
      if (bland) {
        enter = j;
        enter_dir = dir;
        break;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        enter = j;
        enter_dir = dir;
      }
    }
    if (enter < 0) return true;  // optimal for this phase

    // w = B^{-1} A_enter
    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& [r, a] : t.cols[static_cast<std::size_t>(enter)])
      for (int i = 0; i < m; ++i)
        w[static_cast<std::size_t>(i)] += t.b(i, r) * a;

    // Ratio test.  Entering moves by step s >= 0 in direction enter_dir;
    // basic i changes by -enter_dir * w_i * s.
    const double range = t.up[static_cast<std::size_t>(enter)] -
                         t.lo[static_cast<std::size_t>(enter)];
    double limit = range;  // bound flip
    int leave_row = -1;
    double leave_piv = 0.0;
    int leave_to_upper = 0;
    for (int i = 0; i < m; ++i) {
      const double wi = w[static_cast<std::size_t>(i)] * enter_dir;
      if (std::abs(wi) < kPivotTol) continue;
      const int bi = t.basis[static_cast<std::size_t>(i)];
      const double xbi = t.xb[static_cast<std::size_t>(i)];
      double step;
      int to_upper;
      if (wi > 0) {  // basic decreases toward its lower bound
        const double lob = t.lo[static_cast<std::size_t>(bi)];
        if (lob <= -kInf) continue;
        step = (xbi - lob) / wi;
        to_upper = 0;
      } else {       // basic increases toward its upper bound
        const double upb = t.up[static_cast<std::size_t>(bi)];
        if (upb >= kInf) continue;
        step = (xbi - upb) / wi;
        to_upper = 1;
      }
      if (step < -1e-12) step = 0.0;
      const bool better =
          step < limit - 1e-12 ||
          (step < limit + 1e-12 && leave_row >= 0 &&
           (std::abs(wi) > std::abs(leave_piv) + 1e-12 ||
            (std::abs(std::abs(wi) - std::abs(leave_piv)) <= 1e-12 &&
             bi < t.basis[static_cast<std::size_t>(leave_row)])));
      if (better) {
        limit = step;
        leave_row = i;
        leave_piv = wi;
        leave_to_upper = to_upper;
      }
    }

    if (limit >= kInf) {
      *unbounded = true;
      return true;
    }
    ++iters;
    degenerate_streak = (limit < 1e-10) ? degenerate_streak + 1 : 0;

    const double step = limit * enter_dir;  // signed change of entering var
    if (leave_row < 0) {
      // Bound flip: entering runs to its opposite bound.
      for (int i = 0; i < m; ++i)
        t.xb[static_cast<std::size_t>(i)] -= w[static_cast<std::size_t>(i)] * step;
      t.status[static_cast<std::size_t>(enter)] =
          enter_dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
      continue;
    }

    // Pivot: entering becomes basic at value (bound + step).
    const int leave_col = t.basis[static_cast<std::size_t>(leave_row)];
    const double enter_val = nonbasic_value(t, enter) + step;
    for (int i = 0; i < m; ++i)
      t.xb[static_cast<std::size_t>(i)] -= w[static_cast<std::size_t>(i)] * step;
    t.xb[static_cast<std::size_t>(leave_row)] = enter_val;
    t.status[static_cast<std::size_t>(leave_col)] =
        leave_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
    t.status[static_cast<std::size_t>(enter)] = VarStatus::Basic;
    t.basis[static_cast<std::size_t>(leave_row)] = enter;

    // binv <- E binv with eta column from w.
    const double piv = w[static_cast<std::size_t>(leave_row)];
    const double inv = 1.0 / piv;
    for (int k = 0; k < m; ++k) t.b(leave_row, k) *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == leave_row) continue;
      const double f = w[static_cast<std::size_t>(i)];
      if (f == 0.0) continue;
      for (int k = 0; k < m; ++k) t.b(i, k) -= f * t.b(leave_row, k);
    }
    if (++since_refactor >= kRefactorEvery || std::abs(piv) < 1e-7) {
      since_refactor = 0;
      if (!refactorize(t)) return true;  // singular: give up on this phase
    }
  }
  return false;
}

double phase_objective(const Tableau& t, const std::vector<double>& cost) {
  double obj = 0.0;
  for (int i = 0; i < t.m; ++i)
    obj += cost[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(i)])] *
           t.xb[static_cast<std::size_t>(i)];
  for (int j = 0; j < t.ncols; ++j)
    if (t.status[static_cast<std::size_t>(j)] != VarStatus::Basic)
      obj += cost[static_cast<std::size_t>(j)] * nonbasic_value(t, j);
  return obj;
}

}  // namespace

LpResult solve_lp(const Model& model, const std::vector<double>& lower,
                  const std::vector<double>& upper, long max_iterations) {
  if (!model.finalized()) throw ModelError("model not finalized");
  const int n = model.num_variables();
  const int m = model.num_constraints();

  LpResult res;
  for (int j = 0; j < n; ++j)
    if (lower[static_cast<std::size_t>(j)] >
        upper[static_cast<std::size_t>(j)] + 1e-12) {
      res.status = LpResult::Status::Infeasible;
      return res;
    }

  Tableau t;
  t.m = m;
  t.nstruct = n;
  // Row scaling by max |coefficient|.
  std::vector<double> row_scale(static_cast<std::size_t>(m), 1.0);
  for (int r = 0; r < m; ++r) {
    double mx = 0.0;
    for (const auto& [var, coef] : model.constraint(r).coeffs)
      mx = std::max(mx, std::abs(coef));
    if (mx > 0.0) row_scale[static_cast<std::size_t>(r)] = 1.0 / mx;
  }

  // Columns: structural n, slack per row, artificial per row.
  t.ncols = n + m + m;
  t.art_begin = n + m;
  t.cols.resize(static_cast<std::size_t>(t.ncols));
  t.lo.assign(static_cast<std::size_t>(t.ncols), 0.0);
  t.up.assign(static_cast<std::size_t>(t.ncols), 0.0);
  t.cost.assign(static_cast<std::size_t>(t.ncols), 0.0);
  t.phase1_cost.assign(static_cast<std::size_t>(t.ncols), 0.0);
  t.rhs.assign(static_cast<std::size_t>(m), 0.0);
  t.status.assign(static_cast<std::size_t>(t.ncols), VarStatus::AtLower);

  for (int j = 0; j < n; ++j) {
    t.lo[static_cast<std::size_t>(j)] = lower[static_cast<std::size_t>(j)];
    t.up[static_cast<std::size_t>(j)] = upper[static_cast<std::size_t>(j)];
    t.cost[static_cast<std::size_t>(j)] = model.objective_coeff(j);
  }
  for (int r = 0; r < m; ++r) {
    const Constraint& c = model.constraint(r);
    const double s = row_scale[static_cast<std::size_t>(r)];
    for (const auto& [var, coef] : c.coeffs)
      t.cols[static_cast<std::size_t>(var)].push_back({r, coef * s});
    t.rhs[static_cast<std::size_t>(r)] = c.rhs * s;
    const int slack = n + r;
    t.cols[static_cast<std::size_t>(slack)].push_back({r, 1.0});
    switch (c.rel) {
      case Relation::LessEqual:
        t.lo[static_cast<std::size_t>(slack)] = 0.0;
        t.up[static_cast<std::size_t>(slack)] = kInf;
        break;
      case Relation::GreaterEqual:
        t.lo[static_cast<std::size_t>(slack)] = -kInf;
        t.up[static_cast<std::size_t>(slack)] = 0.0;
        break;
      case Relation::Equal:
        t.lo[static_cast<std::size_t>(slack)] = 0.0;
        t.up[static_cast<std::size_t>(slack)] = 0.0;
        break;
    }
  }

  // Nonbasic start values for structural + slack columns.
  for (int j = 0; j < t.art_begin; ++j) {
    const double lo = t.lo[static_cast<std::size_t>(j)];
    const double up = t.up[static_cast<std::size_t>(j)];
    if (lo > -kInf)
      t.status[static_cast<std::size_t>(j)] = VarStatus::AtLower;
    else if (up < kInf)
      t.status[static_cast<std::size_t>(j)] = VarStatus::AtUpper;
    else
      t.status[static_cast<std::size_t>(j)] = VarStatus::Free;
  }

  // Artificial basis: residual r_i = rhs - A x_N, artificial column +/-1.
  std::vector<double> resid = t.rhs;
  for (int j = 0; j < t.art_begin; ++j) {
    const double v = nonbasic_value(t, j);
    if (v == 0.0) continue;
    for (const auto& [r, a] : t.cols[static_cast<std::size_t>(j)])
      resid[static_cast<std::size_t>(r)] -= a * v;
  }
  t.basis.resize(static_cast<std::size_t>(m));
  t.xb.resize(static_cast<std::size_t>(m));
  t.binv.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  for (int r = 0; r < m; ++r) {
    const int art = t.art_begin + r;
    const double sign = resid[static_cast<std::size_t>(r)] >= 0.0 ? 1.0 : -1.0;
    t.cols[static_cast<std::size_t>(art)].push_back({r, sign});
    t.lo[static_cast<std::size_t>(art)] = 0.0;
    t.up[static_cast<std::size_t>(art)] = kInf;
    t.phase1_cost[static_cast<std::size_t>(art)] = 1.0;
    t.status[static_cast<std::size_t>(art)] = VarStatus::Basic;
    t.basis[static_cast<std::size_t>(r)] = art;
    t.xb[static_cast<std::size_t>(r)] = std::abs(resid[static_cast<std::size_t>(r)]);
    t.b(r, r) = sign;  // inverse of the +/-1 diagonal
  }

  bool unbounded = false;
  long iters = 0;
  // Phase 1
  if (!run_phase(t, t.phase1_cost, max_iterations, iters, &unbounded)) {
    res.status = LpResult::Status::IterLimit;
    res.iterations = iters;
    return res;
  }
  const double infeas = phase_objective(t, t.phase1_cost);
  res.iterations = iters;
  if (infeas > 1e-6) {
    res.status = LpResult::Status::Infeasible;
    return res;
  }
  // Fix artificials at zero so phase 2 cannot move them.
  for (int r = 0; r < m; ++r) {
    const int art = t.art_begin + r;
    t.up[static_cast<std::size_t>(art)] = 0.0;
  }
  // Phase 2
  if (!run_phase(t, t.cost, max_iterations, iters, &unbounded)) {
    res.status = LpResult::Status::IterLimit;
    res.iterations = iters;
    return res;
  }
  res.iterations = iters;
  if (unbounded) {
    res.status = LpResult::Status::Unbounded;
    return res;
  }

  res.status = LpResult::Status::Optimal;
  res.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    if (t.status[static_cast<std::size_t>(j)] != VarStatus::Basic)
      res.x[static_cast<std::size_t>(j)] = nonbasic_value(t, j);
  for (int r = 0; r < m; ++r) {
    const int bj = t.basis[static_cast<std::size_t>(r)];
    if (bj < n) res.x[static_cast<std::size_t>(bj)] = t.xb[static_cast<std::size_t>(r)];
  }
  // Clean tiny negatives off bounds.
  for (int j = 0; j < n; ++j) {
    double& v = res.x[static_cast<std::size_t>(j)];
    v = std::clamp(v, lower[static_cast<std::size_t>(j)] - kPrimalTol,
                   upper[static_cast<std::size_t>(j)] + kPrimalTol);
    if (std::abs(v) < 1e-11) v = 0.0;
  }
  double obj = 0.0;
  for (int j = 0; j < n; ++j)
    obj += model.objective_coeff(j) * res.x[static_cast<std::size_t>(j)];
  res.objective = obj;
  return res;
}

}  // namespace mtnd::milp
