#pragma once

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtnd::milp {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Integer, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string tag;
  double lower = 0.0;
  double upper = kInf;
  VarKind kind = VarKind::Continuous;
};

struct Constraint {
  std::string tag;
  // Sorted, deduplicated by finalize(); pairs of (variable id, coefficient).
  std::vector<std::pair<int, double>> coeffs;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
};

// Minimization-only linear model.
class Model {
 public:
  int add_variable(const std::string& tag, double lower, double upper,
                   VarKind kind = VarKind::Continuous);
  void set_objective(int var, double coeff);   // overwrites
  void add_objective(int var, double coeff);   // accumulates
  int add_constraint(const std::string& tag,
                     std::vector<std::pair<int, double>> coeffs, Relation rel,
                     double rhs);

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  int num_integer_variables() const;
  const Variable& variable(int id) const { return vars_.at(static_cast<std::size_t>(id)); }
  Variable& variable(int id) { return vars_.at(static_cast<std::size_t>(id)); }
  const Constraint& constraint(int id) const { return cons_.at(static_cast<std::size_t>(id)); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  double objective_coeff(int var) const { return obj_.at(static_cast<std::size_t>(var)); }
  const std::vector<double>& objective() const { return obj_; }

  // Validates bounds, coefficient finiteness, and references; merges
  // duplicate coefficient entries.  Must be called before solving.
  void finalize();
  bool finalized() const { return finalized_; }

  double constraint_activity(int id, const std::vector<double>& x) const;
  // Largest violation of constraints and bounds at x.
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<double> obj_;
  bool finalized_ = false;
};

enum class SolveStatus { Optimal, FeasibleWithGap, Infeasible, Unbounded,
                         TimeLimit };

std::string status_name(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  double best_bound = -kInf;
  double gap = 0.0;       // (objective - bound) / max(|objective|, eps)
  std::vector<double> values;
  long nodes = 0;
  long simplex_iterations = 0;
};

struct SolverSettings {
  double rel_gap = 1e-6;
  double time_limit_s = 600.0;
  double int_tol = 1e-5;
  double feas_tol = 1e-6;
};

double relative_gap(double objective, double bound);

}  // namespace mtnd::milp
