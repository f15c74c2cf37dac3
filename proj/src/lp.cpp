#include "wdn/lp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace wdn {

int LpProblem::add_var(double lo, double hi, double obj, std::string name) {
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(obj);
  if (!name.empty() || !var_names.empty()) {
    var_names.resize(lower.size() - 1, "");
    var_names.push_back(std::move(name));
  }
  return static_cast<int>(lower.size()) - 1;
}

int LpProblem::add_row(RowSense sense, double rhs, std::vector<std::pair<int, double>> coefs,
                       std::string name) {
  rows.push_back(LpRow{sense, rhs, std::move(coefs)});
  if (!name.empty() || !row_names.empty()) {
    row_names.resize(rows.size() - 1, "");
    row_names.push_back(std::move(name));
  }
  return static_cast<int>(rows.size()) - 1;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration-limit";
  }
  return "?";
}

namespace {

void write_bound(std::ostream& os, double v) {
  if (v == kInf) {
    os << "inf";
  } else if (v == -kInf) {
    os << "-inf";
  } else {
    os << v;
  }
}

double read_bound(const std::string& tok) {
  if (tok == "inf") return kInf;
  if (tok == "-inf") return -kInf;
  return std::stod(tok);
}

}  // namespace

void LpProblem::dump(std::ostream& os) const {
  os.precision(17);
  os << "vars " << num_vars() << "\n";
  os << "obj " << objective_offset;
  for (int j = 0; j < num_vars(); ++j) {
    if (objective[j] != 0.0) os << ' ' << j << ':' << objective[j];
  }
  os << "\n";
  for (int j = 0; j < num_vars(); ++j) {
    os << "bnd " << j << ' ';
    write_bound(os, lower[j]);
    os << ' ';
    write_bound(os, upper[j]);
    os << "\n";
  }
  for (const LpRow& r : rows) {
    os << "row " << (r.sense == RowSense::le ? "<=" : r.sense == RowSense::eq ? "=" : ">=")
       << ' ' << r.rhs;
    for (auto [j, a] : r.coefs) os << ' ' << j << ':' << a;
    os << "\n";
  }
}

LpProblem LpProblem::load(std::istream& is) {
  LpProblem p;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "vars") {
      int n = 0;
      ls >> n;
      if (n < 0) throw InputError("lp load: negative variable count");
      p.lower.assign(n, -kInf);
      p.upper.assign(n, kInf);
      p.objective.assign(n, 0.0);
    } else if (kind == "obj") {
      ls >> p.objective_offset;
      std::string term;
      while (ls >> term) {
        auto pos = term.find(':');
        if (pos == std::string::npos) throw InputError("lp load: bad obj term " + term);
        int j = std::stoi(term.substr(0, pos));
        if (j < 0 || j >= p.num_vars()) throw InputError("lp load: obj index out of range");
        p.objective[j] = std::stod(term.substr(pos + 1));
      }
    } else if (kind == "bnd") {
      int j = 0;
      std::string lo, hi;
      ls >> j >> lo >> hi;
      if (j < 0 || j >= p.num_vars()) throw InputError("lp load: bnd index out of range");
      p.lower[j] = read_bound(lo);
      p.upper[j] = read_bound(hi);
    } else if (kind == "row") {
      std::string sense_tok;
      double rhs = 0.0;
      ls >> sense_tok >> rhs;
      RowSense sense;
      if (sense_tok == "<=") {
        sense = RowSense::le;
      } else if (sense_tok == "=") {
        sense = RowSense::eq;
      } else if (sense_tok == ">=") {
        sense = RowSense::ge;
      } else {
        throw InputError("lp load: bad row sense " + sense_tok);
      }
      std::vector<std::pair<int, double>> coefs;
      std::string term;
      while (ls >> term) {
        auto pos = term.find(':');
        if (pos == std::string::npos) throw InputError("lp load: bad row term " + term);
        int j = std::stoi(term.substr(0, pos));
        if (j < 0 || j >= p.num_vars()) throw InputError("lp load: row index out of range");
        coefs.emplace_back(j, std::stod(term.substr(pos + 1)));
      }
      p.rows.push_back(LpRow{sense, rhs, std::move(coefs)});
    } else {
      throw InputError("lp load: unknown line kind " + kind);
    }
  }
  return p;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

enum VStat : int8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeNb = 3 };

// Product-form update factor. After a pivot the new basis is B * E with E
// equal to the identity except for column `row`, which holds the FTRAN'd
// entering column alpha.
struct Eta {
  int row = -1;
  double pivot = 0.0;
  std::vector<std::pair<int, double>> col;  // alpha entries excluding `row`
};

class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opts) : p_(p), opts_(opts) {}

  LpSolution run();

 private:
  const LpProblem& p_;
  LpOptions opts_;

  int m_ = 0;        // rows
  int n_ = 0;        // structural columns
  int ncols_ = 0;    // structural + slack
  SpMat A_;          // m x ncols, column-major
  std::vector<double> lo_, hi_, cost_, b_;
  std::vector<double> row_scale_, col_scale_;

  std::vector<int> basis_;       // column basic in each row
  std::vector<int> basis_pos_;   // column -> row position or -1
  std::vector<int8_t> vstat_;
  std::vector<double> x_;

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  bool lu_ok_ = false;
  std::vector<Eta> etas_;

  long iters_ = 0;
  int degen_streak_ = 0;
  bool bland_ = false;

  static constexpr double kPivotTol = 1e-8;
  static constexpr int kRefactorEvery = 100;
  static constexpr int kBlandAfter = 50;

  void build();
  void factorize();
  void compute_basic_values();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v);

  double viol(int col) const;
  double infeasibility() const;
  bool feasible_within(double tol) const;
  LpSolution finish(LpStatus status, std::string message);
};

void Simplex::build() {
  m_ = p_.num_rows();
  n_ = p_.num_vars();
  ncols_ = n_ + m_;

  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  if (opts_.scale && m_ > 0 && n_ > 0) {
    // Two passes of geometric-mean equilibration on the structural matrix.
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double> rmin(m_, kInf), rmax(m_, 0.0);
      for (int i = 0; i < m_; ++i) {
        for (auto [j, a] : p_.rows[i].coefs) {
          double v = std::abs(a) * row_scale_[i] * col_scale_[j];
          if (v > 0.0) {
            rmin[i] = std::min(rmin[i], v);
            rmax[i] = std::max(rmax[i], v);
          }
        }
      }
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0.0) row_scale_[i] /= std::sqrt(rmin[i] * rmax[i]);
      }
      std::vector<double> cmin(n_, kInf), cmax(n_, 0.0);
      for (int i = 0; i < m_; ++i) {
        for (auto [j, a] : p_.rows[i].coefs) {
          double v = std::abs(a) * row_scale_[i] * col_scale_[j];
          if (v > 0.0) {
            cmin[j] = std::min(cmin[j], v);
            cmax[j] = std::max(cmax[j], v);
          }
        }
      }
      for (int j = 0; j < n_; ++j) {
        if (cmax[j] > 0.0) col_scale_[j] /= std::sqrt(cmin[j] * cmax[j]);
      }
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m_; ++i) {
    for (auto [j, a] : p_.rows[i].coefs) {
      trips.emplace_back(i, j, a * row_scale_[i] * col_scale_[j]);
    }
    trips.emplace_back(i, n_ + i, 1.0);  // slack
  }
  A_.resize(m_, ncols_);
  A_.setFromTriplets(trips.begin(), trips.end());
  A_.makeCompressed();

  lo_.resize(ncols_);
  hi_.resize(ncols_);
  cost_.assign(ncols_, 0.0);
  for (int j = 0; j < n_; ++j) {
    // x = col_scale * x'; bounds divide, costs multiply.
    lo_[j] = p_.lower[j] == -kInf ? -kInf : p_.lower[j] / col_scale_[j];
    hi_[j] = p_.upper[j] == kInf ? kInf : p_.upper[j] / col_scale_[j];
    cost_[j] = p_.objective[j] * col_scale_[j];
  }
  b_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    b_[i] = p_.rows[i].rhs * row_scale_[i];
    int s = n_ + i;
    switch (p_.rows[i].sense) {
      case RowSense::le: lo_[s] = 0.0; hi_[s] = kInf; break;
      case RowSense::eq: lo_[s] = 0.0; hi_[s] = 0.0; break;
      case RowSense::ge: lo_[s] = -kInf; hi_[s] = 0.0; break;
    }
  }

  x_.assign(ncols_, 0.0);
  vstat_.assign(ncols_, kAtLower);
  for (int j = 0; j < ncols_; ++j) {
    bool lof = lo_[j] != -kInf, hif = hi_[j] != kInf;
    if (lof && hif) {
      if (std::abs(lo_[j]) <= std::abs(hi_[j])) {
        vstat_[j] = kAtLower;
        x_[j] = lo_[j];
      } else {
        vstat_[j] = kAtUpper;
        x_[j] = hi_[j];
      }
    } else if (lof) {
      vstat_[j] = kAtLower;
      x_[j] = lo_[j];
    } else if (hif) {
      vstat_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else {
      vstat_[j] = kFreeNb;
      x_[j] = 0.0;
    }
  }

  basis_.resize(m_);
  basis_pos_.assign(ncols_, -1);
  for (int i = 0; i < m_; ++i) {
    basis_[i] = n_ + i;
    vstat_[n_ + i] = kBasic;
    basis_pos_[n_ + i] = i;
  }
  factorize();
  compute_basic_values();
}

void Simplex::factorize() {
  etas_.clear();
  if (m_ == 0) {
    lu_ok_ = true;
    return;
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m_; ++i) {
    int col = basis_[i];
    for (SpMat::InnerIterator it(A_, col); it; ++it) trips.emplace_back(it.row(), i, it.value());
  }
  SpMat B(m_, m_);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  lu_.compute(B);
  lu_ok_ = lu_.info() == Eigen::Success;
}

void Simplex::compute_basic_values() {
  if (m_ == 0) return;
  Eigen::VectorXd rhs(m_);
  for (int i = 0; i < m_; ++i) rhs[i] = b_[i];
  for (int j = 0; j < ncols_; ++j) {
    if (vstat_[j] == kBasic || x_[j] == 0.0) continue;
    for (SpMat::InnerIterator it(A_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
  }
  ftran(rhs);
  for (int i = 0; i < m_; ++i) x_[basis_[i]] = rhs[i];
}

void Simplex::ftran(Eigen::VectorXd& v) const {
  v = lu_.solve(v);
  for (const Eta& e : etas_) {
    double piv = v[e.row] / e.pivot;
    if (piv != 0.0) {
      for (auto [i, a] : e.col) v[i] -= a * piv;
    }
    v[e.row] = piv;
  }
}

void Simplex::btran(Eigen::VectorXd& v) {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->row];
    for (auto [i, a] : it->col) acc -= a * v[i];
    v[it->row] = acc / it->pivot;
  }
  v = lu_.adjoint().solve(v);
}

double Simplex::viol(int col) const {
  if (x_[col] < lo_[col]) return lo_[col] - x_[col];
  if (x_[col] > hi_[col]) return x_[col] - hi_[col];
  return 0.0;
}

double Simplex::infeasibility() const {
  double t = 0.0;
  for (int i = 0; i < m_; ++i) t += viol(basis_[i]);
  return t;
}

bool Simplex::feasible_within(double tol) const {
  for (int i = 0; i < m_; ++i) {
    int c = basis_[i];
    double ftol = tol * (1.0 + std::abs(x_[c]));
    if (x_[c] < lo_[c] - ftol || x_[c] > hi_[c] + ftol) return false;
  }
  return true;
}

LpSolution Simplex::finish(LpStatus status, std::string message) {
  LpSolution sol;
  sol.status = status;
  sol.iterations = iters_;
  sol.message = std::move(message);
  sol.primal.assign(n_, 0.0);
  for (int j = 0; j < n_; ++j) sol.primal[j] = x_[j] * col_scale_[j];
  sol.duals.assign(m_, 0.0);
  sol.reduced_costs.assign(n_, 0.0);
  if (status == LpStatus::optimal || status == LpStatus::iteration_limit) {
    if (m_ > 0 && lu_ok_) {
      Eigen::VectorXd y(m_);
      for (int i = 0; i < m_; ++i) y[i] = cost_[basis_[i]];
      btran(y);
      for (int i = 0; i < m_; ++i) sol.duals[i] = y[i] * row_scale_[i];
      for (int j = 0; j < n_; ++j) {
        double d = cost_[j];
        for (SpMat::InnerIterator it(A_, j); it; ++it) d -= it.value() * y[it.row()];
        sol.reduced_costs[j] = d / col_scale_[j];
      }
    } else {
      for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = p_.objective[j];
    }
  }
  if (status == LpStatus::optimal) {
    double obj = p_.objective_offset;
    for (int j = 0; j < n_; ++j) obj += p_.objective[j] * sol.primal[j];
    sol.objective = obj;
  }
  return sol;
}

LpSolution Simplex::run() {
  for (int j = 0; j < p_.num_vars(); ++j) {
    if (p_.lower[j] > p_.upper[j]) {
      return LpSolution{LpStatus::infeasible, 0.0, {}, {}, {}, 0,
                        "variable bound crossover at column " + std::to_string(j)};
    }
  }
  build();

  if (m_ == 0) {
    // Pure bound problem: each variable goes to its cheaper bound.
    for (int j = 0; j < n_; ++j) {
      if (cost_[j] > 0.0) {
        if (lo_[j] == -kInf) return finish(LpStatus::unbounded, "free column with positive cost");
        x_[j] = lo_[j];
      } else if (cost_[j] < 0.0) {
        if (hi_[j] == kInf) return finish(LpStatus::unbounded, "free column with negative cost");
        x_[j] = hi_[j];
      }
    }
    return finish(LpStatus::optimal, {});
  }

  long max_iters = opts_.max_iterations > 0
                       ? opts_.max_iterations
                       : std::max<long>(20000, 200L * (m_ + n_));
  const double dtol = opts_.opt_tol;
  int since_refactor = 0;
  int phase = 1;
  bool verified = true;  // basic values come from a fresh factorization

  Eigen::VectorXd y(m_), alpha(m_);

  while (true) {
    if (++iters_ > max_iters) {
      return finish(LpStatus::iteration_limit,
                    "iteration limit " + std::to_string(max_iters) + " reached in phase " +
                        std::to_string(phase));
    }
    if (since_refactor >= kRefactorEvery) {
      factorize();
      if (!lu_ok_) {
        return finish(LpStatus::iteration_limit, "basis factorization failed");
      }
      compute_basic_values();
      since_refactor = 0;
    }

    if (phase == 1 && feasible_within(opts_.feas_tol)) phase = 2;

    // Pricing vector for the current phase.
    for (int i = 0; i < m_; ++i) {
      int c = basis_[i];
      if (phase == 1) {
        y[i] = x_[c] < lo_[c] ? -1.0 : (x_[c] > hi_[c] ? 1.0 : 0.0);
      } else {
        y[i] = cost_[c];
      }
    }
    btran(y);

    int enter = -1;
    double best = dtol;
    for (int j = 0; j < ncols_; ++j) {
      int8_t st = vstat_[j];
      if (st == kBasic) continue;
      if (lo_[j] == hi_[j]) continue;  // fixed columns never move
      double d = (phase == 2 ? cost_[j] : 0.0);
      for (SpMat::InnerIterator it(A_, j); it; ++it) d -= it.value() * y[it.row()];
      double score = 0.0;
      if (st == kAtLower) {
        score = -d;
      } else if (st == kAtUpper) {
        score = d;
      } else {  // free nonbasic
        score = std::abs(d);
      }
      if (bland_) {
        if (score > dtol) {
          enter = j;
          break;
        }
      } else if (score > best) {
        best = score;
        enter = j;
      }
    }

    if (enter < 0) {
      // No eligible entering column: optimal (phase 2) or infeasible (phase 1).
      // Re-verify on a fresh factorization before declaring a final status.
      if (!verified || !etas_.empty()) {
        factorize();
        if (!lu_ok_) return finish(LpStatus::iteration_limit, "basis factorization failed");
        compute_basic_values();
        since_refactor = 0;
        verified = true;
        if (phase == 2 && !feasible_within(opts_.feas_tol)) phase = 1;
        continue;
      }
      if (phase == 1) {
        return finish(LpStatus::infeasible,
                      "phase-1 infeasibility " + std::to_string(infeasibility()));
      }
      return finish(LpStatus::optimal, {});
    }

    // Direction: +1 means the entering variable increases.
    double d_enter = (phase == 2 ? cost_[enter] : 0.0);
    for (SpMat::InnerIterator it(A_, enter); it; ++it) d_enter -= it.value() * y[it.row()];
    double dir;
    if (vstat_[enter] == kAtLower) {
      dir = 1.0;
    } else if (vstat_[enter] == kAtUpper) {
      dir = -1.0;
    } else {
      dir = d_enter < 0.0 ? 1.0 : -1.0;
    }

    alpha.setZero();
    for (SpMat::InnerIterator it(A_, enter); it; ++it) alpha[it.row()] = it.value();
    ftran(alpha);

    // Ratio test. Basic variable i moves at rate delta_i = -dir * alpha_i.
    // Phase 1 lets an infeasible basic run until it regains its violated
    // bound; feasible basics block at whichever bound they approach.
    const double ratio_tie = 1e-10;
    double t_best = kInf;
    int leave_pos = -1;
    int8_t leave_stat = kAtLower;
    double leave_abs = 0.0;
    for (int i = 0; i < m_; ++i) {
      double a = alpha[i];
      if (std::abs(a) < kPivotTol) continue;
      double delta = -dir * a;
      int c = basis_[i];
      double t = kInf;
      int8_t stat = kAtLower;
      if (phase == 1 && x_[c] < lo_[c] - opts_.feas_tol) {
        if (delta > 0.0) {
          t = (lo_[c] - x_[c]) / delta;
          stat = kAtLower;
        }
      } else if (phase == 1 && x_[c] > hi_[c] + opts_.feas_tol) {
        if (delta < 0.0) {
          t = (hi_[c] - x_[c]) / delta;
          stat = kAtUpper;
        }
      } else if (delta > 0.0 && hi_[c] != kInf) {
        t = (hi_[c] - x_[c]) / delta;
        stat = kAtUpper;
      } else if (delta < 0.0 && lo_[c] != -kInf) {
        t = (lo_[c] - x_[c]) / delta;
        stat = kAtLower;
      }
      if (t == kInf) continue;
      if (t < 0.0) t = 0.0;
      bool take = false;
      if (leave_pos < 0 || t < t_best - ratio_tie) {
        take = true;
      } else if (t <= t_best + ratio_tie) {
        take = bland_ ? basis_[i] < basis_[leave_pos] : std::abs(a) > leave_abs;
      }
      if (take) {
        t_best = leave_pos < 0 ? t : std::min(t, t_best);
        leave_pos = i;
        leave_stat = stat;
        leave_abs = std::abs(a);
      }
    }

    double t_own = (lo_[enter] != -kInf && hi_[enter] != kInf) ? hi_[enter] - lo_[enter] : kInf;
    if (t_best == kInf && t_own == kInf) {
      if (phase == 1) {
        return finish(LpStatus::iteration_limit, "phase-1 ray; numerical breakdown");
      }
      return finish(LpStatus::unbounded, "ray detected from column " + std::to_string(enter));
    }

    bool flip = t_own <= t_best;
    double t_step = flip ? t_own : t_best;
    degen_streak_ = (t_step <= ratio_tie) ? degen_streak_ + 1 : 0;
    if (degen_streak_ > kBlandAfter) bland_ = true;
    if (degen_streak_ == 0) bland_ = false;
    verified = false;

    double step = dir * t_step;
    x_[enter] += step;
    for (int i = 0; i < m_; ++i) {
      if (alpha[i] != 0.0) x_[basis_[i]] -= step * alpha[i];
    }

    if (flip) {
      vstat_[enter] = dir > 0 ? kAtUpper : kAtLower;
      x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
      continue;
    }

    int leave_col = basis_[leave_pos];
    x_[leave_col] = leave_stat == kAtLower ? lo_[leave_col] : hi_[leave_col];
    vstat_[leave_col] = leave_stat;
    basis_pos_[leave_col] = -1;
    basis_[leave_pos] = enter;
    basis_pos_[enter] = leave_pos;
    vstat_[enter] = kBasic;

    Eta e;
    e.row = leave_pos;
    e.pivot = alpha[leave_pos];
    for (int i = 0; i < m_; ++i) {
      if (i != leave_pos && alpha[i] != 0.0) e.col.emplace_back(i, alpha[i]);
    }
    etas_.push_back(std::move(e));
    ++since_refactor;
  }
}

}  // namespace

LpSolution lp_solve(const LpProblem& p, const LpOptions& opts) {
  Simplex s(p, opts);
  return s.run();
}

}  // namespace wdn
