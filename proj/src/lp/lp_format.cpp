#include <iomanip>
#include <ostream>
#include <sstream>

#include "twolevel/lp.hpp"

namespace twolevel::lp {
namespace {

std::string var_name(const LinearProgram& lp, std::size_t j) {
  return lp.name(j).empty() ? "x" + std::to_string(j) : lp.name(j);
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_terms(std::ostream& out, const std::vector<std::pair<double, std::string>>& terms) {
  if (terms.empty()) {
    out << " 0";
    return;
  }
  // CPLEX LP caps line length; wrap every few terms.
  std::size_t on_line = 0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& [coef, name] = terms[k];
    const bool negative = coef < 0.0;
    if (k == 0) {
      out << (negative ? " - " : " ");
    } else {
      out << (negative ? " - " : " + ");
    }
    const double mag = negative ? -coef : coef;
    if (mag != 1.0) out << number(mag) << ' ';
    out << name;
    if (++on_line == 8 && k + 1 < terms.size()) {
      out << "\n  ";
      on_line = 0;
    }
  }
}

}  // namespace

void write_cplex_lp(const LinearProgram& lp, std::ostream& out) {
  out << "\\ two-level rule learning LP\nMinimize\n obj:";
  std::vector<std::pair<double, std::string>> terms;
  for (std::size_t j = 0; j < lp.variables(); ++j) {
    if (lp.cost(j) != 0.0) terms.emplace_back(lp.cost(j), var_name(lp, j));
  }
  write_terms(out, terms);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.constraints(); ++i) {
    const Constraint& c = lp.constraint(i);
    terms.clear();
    for (const Term& t : c.terms) terms.emplace_back(t.coef, var_name(lp, t.var));
    out << " c" << i << ":";
    write_terms(out, terms);
    switch (c.relation) {
      case Relation::greater_equal:
        out << " >= ";
        break;
      case Relation::less_equal:
        out << " <= ";
        break;
      case Relation::equal:
        out << " = ";
        break;
    }
    out << number(c.rhs) << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.variables(); ++j) {
    out << ' ' << number(lp.lower(j)) << " <= " << var_name(lp, j) << " <= " << number(lp.upper(j))
        << '\n';
  }
  out << "End\n";
}

}  // namespace twolevel::lp
