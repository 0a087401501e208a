#include "mtnd/milp/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace mtnd::milp {

namespace {

void check_tags(const Model& model) {
  std::set<std::string> seen;
  for (const Variable& v : model.variables()) {
    if (v.tag.empty()) throw ModelError("variable with empty tag");
    for (char c : v.tag)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.')
        throw ModelError("variable tag not exportable: " + v.tag);
    if (!seen.insert(v.tag).second)
      throw ModelError("duplicate variable tag: " + v.tag);
  }
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_linear(std::ostream& os,
                  const std::vector<std::pair<int, double>>& terms,
                  const Model& model) {
  bool first = true;
  for (const auto& [var, coeff] : terms) {
    if (coeff == 0.0) continue;
    if (first) {
      if (coeff < 0) os << "- ";
      first = false;
    } else {
      os << (coeff < 0 ? " - " : " + ");
    }
    const double a = std::abs(coeff);
    if (a != 1.0) os << num(a) << ' ';
    os << model.variable(var).tag;
  }
  if (first) os << "0 " << model.variable(0).tag;
}

std::string export_lp(const Model& model) {
  std::ostringstream os;
  os << "Minimize\n obj: ";
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.objective_coeff(j) != 0.0) obj.push_back({j, model.objective_coeff(j)});
  write_linear(os, obj, model);
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const Constraint& c = model.constraint(i);
    os << " c" << i << ": ";
    write_linear(os, c.coeffs, model);
    switch (c.rel) {
      case Relation::LessEqual: os << " <= "; break;
      case Relation::Equal: os << " = "; break;
      case Relation::GreaterEqual: os << " >= "; break;
    }
    os << num(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    if (v.lower == -kInf && v.upper == kInf) {
      os << ' ' << v.tag << " free\n";
    } else if (v.lower == -kInf) {
      os << " -inf <= " << v.tag << " <= " << num(v.upper) << '\n';
    } else if (v.upper == kInf) {
      os << ' ' << v.tag << " >= " << num(v.lower) << '\n';
    } else {
      os << ' ' << num(v.lower) << " <= " << v.tag << " <= " << num(v.upper)
         << '\n';
    }
  }
  bool any_gen = false, any_bin = false;
  for (const Variable& v : model.variables()) {
    any_gen |= v.kind == VarKind::Integer;
    any_bin |= v.kind == VarKind::Binary;
  }
  if (any_gen) {
    os << "General\n";
    for (const Variable& v : model.variables())
      if (v.kind == VarKind::Integer) os << ' ' << v.tag << '\n';
  }
  if (any_bin) {
    os << "Binary\n";
    for (const Variable& v : model.variables())
      if (v.kind == VarKind::Binary) os << ' ' << v.tag << '\n';
  }
  os << "End\n";
  return os.str();
}

std::string export_mps(const Model& model) {
  std::ostringstream os;
  os << "NAME          MODEL\nROWS\n N  obj\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    char r = 'L';
    switch (model.constraint(i).rel) {
      case Relation::LessEqual: r = 'L'; break;
      case Relation::Equal: r = 'E'; break;
      case Relation::GreaterEqual: r = 'G'; break;
    }
    os << ' ' << r << "  c" << i << '\n';
  }
  // Column-major coefficient lists.
  std::vector<std::vector<std::pair<std::string, double>>> cols(
      static_cast<std::size_t>(model.num_variables()));
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.objective_coeff(j) != 0.0)
      cols[static_cast<std::size_t>(j)].push_back({"obj", model.objective_coeff(j)});
  for (int i = 0; i < model.num_constraints(); ++i)
    for (const auto& [var, coeff] : model.constraint(i).coeffs)
      if (coeff != 0.0)
        cols[static_cast<std::size_t>(var)].push_back({"c" + std::to_string(i), coeff});
  os << "COLUMNS\n";
  bool in_int = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    const bool is_int = v.kind != VarKind::Continuous;
    if (is_int && !in_int) {
      os << "    MARKER                 'MARKER'                 'INTORG'\n";
      in_int = true;
    } else if (!is_int && in_int) {
      os << "    MARKER                 'MARKER'                 'INTEND'\n";
      in_int = false;
    }
    for (const auto& [row, coeff] : cols[static_cast<std::size_t>(j)])
      os << "    " << v.tag << "  " << row << "  " << num(coeff) << '\n';
    if (cols[static_cast<std::size_t>(j)].empty())
      os << "    " << v.tag << "  obj  0\n";
  }
  if (in_int)
    os << "    MARKER                 'MARKER'                 'INTEND'\n";
  os << "RHS\n";
  for (int i = 0; i < model.num_constraints(); ++i)
    if (model.constraint(i).rhs != 0.0)
      os << "    rhs  c" << i << "  " << num(model.constraint(i).rhs) << '\n';
  os << "BOUNDS\n";
  for (const Variable& v : model.variables()) {
    if (v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0) {
      os << " BV bnd  " << v.tag << '\n';
      continue;
    }
    if (v.lower == -kInf && v.upper == kInf) {
      os << " FR bnd  " << v.tag << '\n';
      continue;
    }
    if (v.lower == -kInf)
      os << " MI bnd  " << v.tag << '\n';
    else if (v.lower != 0.0)
      os << " LO bnd  " << v.tag << "  " << num(v.lower) << '\n';
    if (v.upper != kInf)
      os << " UP bnd  " << v.tag << "  " << num(v.upper) << '\n';
    else if (v.kind != VarKind::Continuous)
      os << " PL bnd  " << v.tag << '\n';
  }
  os << "ENDATA\n";
  return os.str();
}

// ---- parsing -------------------------------------------------------------

struct LpTokens {
  std::vector<std::string> toks;
  std::size_t pos = 0;
  bool done() const { return pos >= toks.size(); }
  const std::string& peek() const { return toks[pos]; }
  std::string take() { return toks[pos++]; }
};

bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

bool is_number(const std::string& s) {
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end && *end == '\0' && end != s.c_str();
}

double to_number(const std::string& s) {
  if (iequals(s, "inf") || iequals(s, "+inf") || iequals(s, "infinity"))
    return kInf;
  if (iequals(s, "-inf") || iequals(s, "-infinity")) return -kInf;
  return std::strtod(s.c_str(), nullptr);
}

// Section keywords; multiword variants are normalized before tokenizing.
bool is_section(const std::string& t) {
  return iequals(t, "minimize") || iequals(t, "subject_to") ||
         iequals(t, "bounds") || iequals(t, "general") ||
         iequals(t, "binary") || iequals(t, "end");
}

Model parse_lp(const std::string& text) {
  // Strip comments, normalize the two-word section header, split operators.
  std::string norm;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto cmt = line.find('\\');
    if (cmt != std::string::npos) line.erase(cmt);
    norm += line + '\n';
  }
  auto replace_all = [&norm](const std::string& from, const std::string& to) {
    std::size_t p = 0;
    while ((p = norm.find(from, p)) != std::string::npos) {
      norm.replace(p, from.size(), to);
      p += to.size();
    }
  };
  replace_all("Subject To", "subject_to");
  replace_all("subject to", "subject_to");
  replace_all("SUBJECT TO", "subject_to");
  replace_all("s.t.", "subject_to");
  LpTokens tk;
  {
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) {
        tk.toks.push_back(cur);
        cur.clear();
      }
    };
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const char c = norm[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else if (c == ':' || c == '+') {
        flush();
        tk.toks.push_back(std::string(1, c));
      } else if (c == '<' || c == '>') {
        flush();
        std::string op(1, c);
        if (i + 1 < norm.size() && norm[i + 1] == '=') {
          op += '=';
          ++i;
        }
        tk.toks.push_back(op);
      } else if (c == '=') {
        flush();
        tk.toks.push_back("=");
      } else if (c == '-') {
        // minus is a separate token unless part of a signed number/-inf glued
        // to nothing (we always pad on write)
        flush();
        tk.toks.push_back("-");
      } else {
        cur += c;
      }
    }
    flush();
  }

  Model model;
  std::map<std::string, int> ids;
  auto var_id = [&](const std::string& tag) {
    auto it = ids.find(tag);
    if (it != ids.end()) return it->second;
    const int id = model.add_variable(tag, 0.0, kInf);
    ids.emplace(tag, id);
    return id;
  };
  // linear expression: [sign] [coeff] var ...
  auto parse_terms = [&](std::vector<std::pair<int, double>>* out) {
    while (!tk.done()) {
      double sign = 1.0;
      std::size_t save = tk.pos;
      std::string t = tk.peek();
      if (t == "+" || t == "-") {
        sign = t == "-" ? -1.0 : 1.0;
        tk.take();
        if (tk.done()) throw ModelError("dangling sign in expression");
        t = tk.peek();
      }
      if (is_section(t) || t == "<=" || t == ">=" || t == "=" ||
          (tk.pos + 1 < tk.toks.size() && tk.toks[tk.pos + 1] == ":")) {
        tk.pos = save;
        return;
      }
      double coeff = 1.0;
      if (is_number(t)) {
        coeff = to_number(tk.take());
        if (tk.done() || is_section(tk.peek()) || tk.peek() == "<=" ||
            tk.peek() == ">=" || tk.peek() == "=" || tk.peek() == "+" ||
            tk.peek() == "-" ||
            (tk.pos + 1 < tk.toks.size() && tk.toks[tk.pos + 1] == ":")) {
          if (coeff != 0.0)
            throw ModelError("constant term in expression");
          continue;  // literal zero placeholder
        }
      }
      const std::string tag = tk.take();
      out->push_back({var_id(tag), sign * coeff});
    }
  };

  enum class Sec { None, Obj, Cons, Bounds, General, Binary };
  Sec sec = Sec::None;
  while (!tk.done()) {
    const std::string t = tk.peek();
    if (iequals(t, "minimize")) { tk.take(); sec = Sec::Obj; continue; }
    if (iequals(t, "subject_to")) { tk.take(); sec = Sec::Cons; continue; }
    if (iequals(t, "bounds")) { tk.take(); sec = Sec::Bounds; continue; }
    if (iequals(t, "general")) { tk.take(); sec = Sec::General; continue; }
    if (iequals(t, "binary")) { tk.take(); sec = Sec::Binary; continue; }
    if (iequals(t, "end")) { tk.take(); break; }
    switch (sec) {
      case Sec::Obj: {
        if (tk.pos + 1 < tk.toks.size() && tk.toks[tk.pos + 1] == ":") {
          tk.take();
          tk.take();
        }
        std::vector<std::pair<int, double>> terms;
        parse_terms(&terms);
        for (const auto& [var, coeff] : terms) model.add_objective(var, coeff);
        break;
      }
      case Sec::Cons: {
        std::string tag = "c" + std::to_string(model.num_constraints());
        if (tk.pos + 1 < tk.toks.size() && tk.toks[tk.pos + 1] == ":") {
          tag = tk.take();
          tk.take();
        }
        std::vector<std::pair<int, double>> terms;
        parse_terms(&terms);
        if (tk.done()) throw ModelError("constraint without relation: " + tag);
        const std::string rel = tk.take();
        Relation r;
        if (rel == "<=") r = Relation::LessEqual;
        else if (rel == ">=") r = Relation::GreaterEqual;
        else if (rel == "=") r = Relation::Equal;
        else throw ModelError("bad relation '" + rel + "' in " + tag);
        double sign = 1.0;
        if (!tk.done() && tk.peek() == "-") { sign = -1.0; tk.take(); }
        if (tk.done() || !is_number(tk.peek()))
          throw ModelError("constraint rhs not numeric: " + tag);
        const double rhs = sign * to_number(tk.take());
        model.add_constraint(tag, std::move(terms), r, rhs);
        break;
      }
      case Sec::Bounds: {
        // forms: "v free" | "lb <= v <= ub" | "v >= lb" | "v <= ub"
        double sign = 1.0;
        std::string first = tk.take();
        if (first == "-") { sign = -1.0; first = tk.take(); }
        if (is_number(first) || iequals(first, "inf") ||
            iequals(first, "infinity")) {
          const double lb = sign * to_number(first);
          if (tk.take() != "<=") throw ModelError("malformed bound line");
          const int v = var_id(tk.take());
          model.variable(v).lower = lb;
          if (!tk.done() && tk.peek() == "<=") {
            tk.take();
            double s2 = 1.0;
            std::string ub = tk.take();
            if (ub == "-") { s2 = -1.0; ub = tk.take(); }
            model.variable(v).upper = s2 * to_number(ub);
          }
        } else {
          const int v = var_id(first);
          if (!tk.done() && iequals(tk.peek(), "free")) {
            tk.take();
            model.variable(v).lower = -kInf;
            model.variable(v).upper = kInf;
          } else {
            const std::string rel = tk.take();
            double s2 = 1.0;
            std::string b = tk.take();
            if (b == "-") { s2 = -1.0; b = tk.take(); }
            const double val = s2 * to_number(b);
            if (rel == ">=") model.variable(v).lower = val;
            else if (rel == "<=") model.variable(v).upper = val;
            else if (rel == "=") {
              model.variable(v).lower = val;
              model.variable(v).upper = val;
            } else throw ModelError("malformed bound line");
          }
        }
        break;
      }
      case Sec::General:
        model.variable(var_id(tk.take())).kind = VarKind::Integer;
        break;
      case Sec::Binary: {
        const int v = var_id(tk.take());
        model.variable(v).kind = VarKind::Binary;
        model.variable(v).lower = std::max(model.variable(v).lower, 0.0);
        model.variable(v).upper = std::min(model.variable(v).upper, 1.0);
        break;
      }
      case Sec::None:
        throw ModelError("unexpected token before a section header: " + t);
    }
  }
  model.finalize();
  return model;
}

Model parse_mps(const std::string& text) {
  Model model;
  std::map<std::string, Relation> row_rel;
  std::map<std::string, int> col_ids;
  std::map<std::string, std::vector<std::pair<int, double>>> row_terms;
  std::map<std::string, double> row_rhs;
  std::string obj_row;
  std::string section;
  bool in_int = false;
  std::istringstream lines(text);
  std::string line;
  std::vector<std::string> row_order;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string tok;
    while (ls >> tok) f.push_back(tok);
    if (f.empty()) continue;
    if (!std::isspace(static_cast<unsigned char>(line[0]))) {
      section = f[0];
      continue;
    }
    if (section == "ROWS") {
      if (f.size() < 2) throw ModelError("malformed ROWS line");
      if (f[0] == "N") {
        obj_row = f[1];
      } else {
        Relation r;
        if (f[0] == "L") r = Relation::LessEqual;
        else if (f[0] == "G") r = Relation::GreaterEqual;
        else if (f[0] == "E") r = Relation::Equal;
        else throw ModelError("bad row type " + f[0]);
        row_rel[f[1]] = r;
        row_order.push_back(f[1]);
      }
    } else if (section == "COLUMNS") {
      if (f.size() >= 3 && f[1] == "'MARKER'") {
        in_int = f[2] == "'INTORG'";
        continue;
      }
      auto it = col_ids.find(f[0]);
      int v;
      if (it == col_ids.end()) {
        v = model.add_variable(f[0], 0.0, kInf,
                               in_int ? VarKind::Integer : VarKind::Continuous);
        col_ids.emplace(f[0], v);
      } else {
        v = it->second;
      }
      for (std::size_t i = 1; i + 1 < f.size(); i += 2) {
        const double coeff = to_number(f[i + 1]);
        if (f[i] == obj_row) model.add_objective(v, coeff);
        else row_terms[f[i]].push_back({v, coeff});
      }
    } else if (section == "RHS") {
      for (std::size_t i = 1; i + 1 < f.size(); i += 2)
        row_rhs[f[i]] = to_number(f[i + 1]);
    } else if (section == "BOUNDS") {
      if (f.size() < 3) throw ModelError("malformed BOUNDS line");
      const std::string& kind = f[0];
      auto it = col_ids.find(f[2]);
      if (it == col_ids.end()) throw ModelError("bound for unknown column " + f[2]);
      Variable& v = model.variable(it->second);
      const double val = f.size() >= 4 ? to_number(f[3]) : 0.0;
      if (kind == "UP") v.upper = val;
      else if (kind == "LO") v.lower = val;
      else if (kind == "FX") { v.lower = val; v.upper = val; }
      else if (kind == "FR") { v.lower = -kInf; v.upper = kInf; }
      else if (kind == "MI") v.lower = -kInf;
      else if (kind == "PL") v.upper = kInf;
      else if (kind == "BV") { v.kind = VarKind::Binary; v.lower = 0; v.upper = 1; }
      else throw ModelError("bound kind not supported: " + kind);
    } else if (section == "RANGES") {
      throw ModelError("RANGES section not supported");
    }
  }
  for (const std::string& row : row_order) {
    double rhs = 0.0;
    auto it = row_rhs.find(row);
    if (it != row_rhs.end()) rhs = it->second;
    auto terms = row_terms.count(row) ? row_terms.at(row)
                                      : std::vector<std::pair<int, double>>{};
    model.add_constraint(row, std::move(terms), row_rel.at(row), rhs);
  }
  model.finalize();
  return model;
}

}  // namespace

std::string export_model(const Model& model, ExportFormat format) {
  check_tags(model);
  Model copy = model;
  if (!copy.finalized()) copy.finalize();
  return format == ExportFormat::LpText ? export_lp(copy) : export_mps(copy);
}

Model parse_model(const std::string& text, ExportFormat format) {
  return format == ExportFormat::LpText ? parse_lp(text) : parse_mps(text);
}

std::string serialize_solution(const Model& model, const Solution& sol) {
  std::ostringstream os;
  os.precision(17);
  os << "status " << status_name(sol.status) << '\n';
  os << "objective " << sol.objective << '\n';
  os << "bound " << sol.best_bound << '\n';
  for (int j = 0; j < model.num_variables() &&
                  j < static_cast<int>(sol.values.size());
       ++j)
    os << "var " << model.variable(j).tag << ' '
       << sol.values[static_cast<std::size_t>(j)] << '\n';
  return os.str();
}

Solution parse_solution(const Model& model, const std::string& text) {
  std::map<std::string, int> ids;
  for (int j = 0; j < model.num_variables(); ++j)
    ids[model.variable(j).tag] = j;
  Solution sol;
  sol.values.assign(static_cast<std::size_t>(model.num_variables()), 0.0);
  std::istringstream lines(text);
  std::string key;
  bool have_status = false;
  while (lines >> key) {
    if (key == "status") {
      std::string s;
      lines >> s;
      if (s == "optimal") sol.status = SolveStatus::Optimal;
      else if (s == "feasible-with-gap") sol.status = SolveStatus::FeasibleWithGap;
      else if (s == "infeasible") sol.status = SolveStatus::Infeasible;
      else if (s == "unbounded") sol.status = SolveStatus::Unbounded;
      else if (s == "time-limit") sol.status = SolveStatus::TimeLimit;
      else throw ModelError("unknown solution status: " + s);
      have_status = true;
    } else if (key == "objective") {
      lines >> sol.objective;
    } else if (key == "bound") {
      lines >> sol.best_bound;
    } else if (key == "var") {
      std::string tag;
      double value;
      lines >> tag >> value;
      auto it = ids.find(tag);
      if (it == ids.end()) throw ModelError("solution names unknown variable " + tag);
      sol.values[static_cast<std::size_t>(it->second)] = value;
    } else {
      throw ModelError("unexpected solution line key: " + key);
    }
  }
  if (!have_status) throw ModelError("solution file missing status line");
  sol.gap = std::max(0.0, relative_gap(sol.objective, sol.best_bound));
  return sol;
}

Solution solve_external(const Model& model, const std::string& command,
                        ExportFormat format) {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() /
      ("mtnd-milp-" + std::to_string(
                          std::hash<const void*>{}(static_cast<const void*>(&model)) ^
                          static_cast<std::size_t>(::getpid())));
  fs::create_directories(dir);
  const fs::path model_file =
      dir / (format == ExportFormat::LpText ? "model.lp" : "model.mps");
  const fs::path sol_file = dir / "solution.txt";
  {
    std::ofstream out(model_file);
    out << export_model(model, format);
  }
  const std::string cmd =
      command + " " + model_file.string() + " " + sol_file.string();
  const int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw ModelError("external solver failed (exit " + std::to_string(rc) +
                     "): " + cmd);
  std::ifstream in(sol_file);
  if (!in) throw ModelError("external solver produced no solution file");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::error_code ec;
  fs::remove_all(dir, ec);
  return parse_solution(model, buf.str());
}

}  // namespace mtnd::milp
