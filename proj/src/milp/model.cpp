#include "mtnd/milp/model.hpp"

#include <algorithm>
#include <cmath>

namespace mtnd::milp {

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleWithGap: return "feasible-with-gap";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::TimeLimit: return "time-limit";
  }
  return "?";
}

double relative_gap(double objective, double bound) {
  if (bound <= -kInf) return kInf;
  return (objective - bound) / std::max(std::abs(objective), 1e-10);
}

int Model::add_variable(const std::string& tag, double lower, double upper,
                        VarKind kind) {
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  vars_.push_back({tag, lower, upper, kind});
  obj_.push_back(0.0);
  finalized_ = false;
  return static_cast<int>(vars_.size()) - 1;
}

void Model::set_objective(int var, double coeff) {
  obj_.at(static_cast<std::size_t>(var)) = coeff;
}

void Model::add_objective(int var, double coeff) {
  obj_.at(static_cast<std::size_t>(var)) += coeff;
}

int Model::add_constraint(const std::string& tag,
                          std::vector<std::pair<int, double>> coeffs,
                          Relation rel, double rhs) {
  cons_.push_back({tag, std::move(coeffs), rel, rhs});
  finalized_ = false;
  return static_cast<int>(cons_.size()) - 1;
}

int Model::num_integer_variables() const {
  int n = 0;
  for (const Variable& v : vars_)
    if (v.kind != VarKind::Continuous) ++n;
  return n;
}

void Model::finalize() {
  const int n = num_variables();
  for (int i = 0; i < n; ++i) {
    const Variable& v = vars_[static_cast<std::size_t>(i)];
    if (!(v.lower <= v.upper))
      throw ModelError("variable " + v.tag + ": lower > upper");
    if (std::isnan(v.lower) || std::isnan(v.upper))
      throw ModelError("variable " + v.tag + ": NaN bound");
  }
  for (Constraint& c : cons_) {
    if (!std::isfinite(c.rhs))
      throw ModelError("constraint " + c.tag + ": non-finite rhs");
    std::sort(c.coeffs.begin(), c.coeffs.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& [var, coef] : c.coeffs) {
      if (var < 0 || var >= n)
        throw ModelError("constraint " + c.tag + ": unknown variable id " +
                         std::to_string(var));
      if (!std::isfinite(coef))
        throw ModelError("constraint " + c.tag + ": non-finite coefficient");
      if (!merged.empty() && merged.back().first == var)
        merged.back().second += coef;
      else
        merged.push_back({var, coef});
    }
    std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
    c.coeffs = std::move(merged);
  }
  for (double c : obj_)
    if (!std::isfinite(c)) throw ModelError("non-finite objective coefficient");
  finalized_ = true;
}

double Model::constraint_activity(int id, const std::vector<double>& x) const {
  double a = 0.0;
  for (const auto& [var, coef] : cons_[static_cast<std::size_t>(id)].coeffs)
    a += coef * x[static_cast<std::size_t>(var)];
  return a;
}

double Model::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int i = 0; i < num_variables(); ++i) {
    const Variable& v = vars_[static_cast<std::size_t>(i)];
    const double xi = x[static_cast<std::size_t>(i)];
    worst = std::max(worst, v.lower - xi);
    if (v.upper < kInf) worst = std::max(worst, xi - v.upper);
  }
  for (int c = 0; c < num_constraints(); ++c) {
    const double a = constraint_activity(c, x);
    const Constraint& con = cons_[static_cast<std::size_t>(c)];
    switch (con.rel) {
      case Relation::LessEqual: worst = std::max(worst, a - con.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, con.rhs - a); break;
      case Relation::Equal: worst = std::max(worst, std::abs(a - con.rhs)); break;
    }
  }
  return worst;
}

}  // namespace mtnd::milp
