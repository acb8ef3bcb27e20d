#ifndef DSAUDIT_DIMACS_HPP
#define DSAUDIT_DIMACS_HPP

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsaudit/sat.hpp"

namespace dsaudit::sat {

class DimacsError : public std::runtime_error {
 public:
  DimacsError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct DimacsFile {
  CnfFormula formula;
  std::vector<std::string> comments;  // without the leading "c "
};

inline DimacsFile read_dimacs(std::istream& in) {
  DimacsFile out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t declared_clauses = 0;
  sat::Clause current;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == 'c') {
      std::string text = line.substr(first + 1);
      if (!text.empty() && text.front() == ' ') text.erase(0, 1);
      out.comments.push_back(text);
      continue;
    }
    if (line[first] == '%') break;
    std::istringstream tokens(line);
    if (line[first] == 'p') {
      if (header) throw DimacsError(line_no, "duplicate problem line");
      std::string p;
      std::string fmt;
      long long vars = -1;
      long long clauses = -1;
      std::string extra;
      if (!(tokens >> p >> fmt >> vars >> clauses) || p != "p" || fmt != "cnf" || vars < 0 ||
          clauses < 0 || (tokens >> extra)) {
        throw DimacsError(line_no, "malformed problem line, expected 'p cnf <vars> <clauses>'");
      }
      header = true;
      out.formula.num_vars = static_cast<int>(vars);
      declared_clauses = static_cast<std::size_t>(clauses);
      continue;
    }
    if (!header) throw DimacsError(line_no, "clause before 'p cnf' problem line");
    std::string tok;
    while (tokens >> tok) {
      char* end = nullptr;
      long long lit = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0') {
        throw DimacsError(line_no, "invalid literal '" + tok + "'");
      }
      if (lit == 0) {
        out.formula.clauses.push_back(current);
        current.clear();
        continue;
      }
      if (std::llabs(lit) > out.formula.num_vars) {
        throw DimacsError(line_no, "literal " + tok + " exceeds declared variable count");
      }
      current.push_back(static_cast<int>(lit));
    }
  }
  if (!header) throw DimacsError(line_no == 0 ? 1 : line_no, "missing 'p cnf' problem line");
  if (!current.empty()) out.formula.clauses.push_back(current);
  if (out.formula.clauses.size() != declared_clauses) {
    throw DimacsError(line_no, "declared " + std::to_string(declared_clauses) + " clauses, found " +
                                   std::to_string(out.formula.clauses.size()));
  }
  out.formula = out.formula.normalized();
  return out;
}

inline DimacsFile read_dimacs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dimacs(in);
}

inline void write_dimacs(std::ostream& out, const CnfFormula& f,
                         const std::vector<std::string>& comments = {}) {
  for (const std::string& c : comments) out << "c " << c << '\n';
  out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for (const Clause& c : f.clauses) {
    for (int lit : c) out << lit << ' ';
    out << "0\n";
  }
}

inline std::string to_dimacs(const CnfFormula& f, const std::vector<std::string>& comments = {}) {
  std::ostringstream s;
  write_dimacs(s, f, comments);
  return s.str();
}

// Runs an external DIMACS solver executable on `f` ∧ assumptions. The verdict
// is read from an "s SATISFIABLE"/"s UNSATISFIABLE" line, falling back to the
// SAT-competition exit codes 10/20.
inline Status solve_external(const std::string& executable, const CnfFormula& f,
                             const std::vector<int>& assumptions = {}) {
  CnfFormula query = f;
  for (int lit : assumptions) query.clauses.push_back({lit});
  std::random_device rd;
  auto stem = std::filesystem::temp_directory_path() /
              ("dsaudit-" + std::to_string(rd()) + "-" + std::to_string(rd()));
  std::filesystem::path cnf_path = stem.string() + ".cnf";
  std::filesystem::path out_path = stem.string() + ".out";
  {
    std::ofstream cnf(cnf_path);
    write_dimacs(cnf, query);
  }
  std::string cmd = "\"" + executable + "\" \"" + cnf_path.string() + "\" > \"" +
                    out_path.string() + "\" 2>/dev/null";
  int raw = std::system(cmd.c_str());
  int code = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  std::ifstream result(out_path);
  std::string line;
  Status status = Status::Timeout;
  bool found = false;
  while (std::getline(result, line)) {
    if (line.rfind("s UNSATISFIABLE", 0) == 0) {
      status = Status::Unsat;
      found = true;
    } else if (line.rfind("s SATISFIABLE", 0) == 0) {
      status = Status::Sat;
      found = true;
    }
  }
  if (!found) {
    if (code == 10) status = Status::Sat;
    if (code == 20) status = Status::Unsat;
  }
  std::error_code ec;
  std::filesystem::remove(cnf_path, ec);
  std::filesystem::remove(out_path, ec);
  return status;
}

}  // namespace dsaudit::sat

#endif  // DSAUDIT_DIMACS_HPP
