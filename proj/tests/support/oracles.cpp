#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace wdn::testgen {

namespace {

// One linear condition a'x = rhs.
struct Condition {
  std::vector<double> a;
  double rhs;
};

bool point_feasible(const LpProblem& p, const Eigen::VectorXd& x, double tol) {
  for (int j = 0; j < p.num_vars(); ++j) {
    if (x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol) return false;
  }
  for (const LpRow& r : p.rows) {
    double v = 0.0;
    for (auto [j, a] : r.coefs) v += a * x[j];
    if (r.sense == RowSense::le && v > r.rhs + tol) return false;
    if (r.sense == RowSense::ge && v < r.rhs - tol) return false;
    if (r.sense == RowSense::eq && std::abs(v - r.rhs) > tol) return false;
  }
  return true;
}

}  // namespace

VertexOracleResult vertex_enumeration_solve(const LpProblem& p) {
  const int n = p.num_vars();
  std::vector<Condition> conds;
  for (const LpRow& r : p.rows) {
    Condition c;
    c.a.assign(n, 0.0);
    for (auto [j, a] : r.coefs) c.a[j] += a;
    c.rhs = r.rhs;
    conds.push_back(std::move(c));
  }
  for (int j = 0; j < n; ++j) {
    if (p.lower[j] != -kInf) {
      Condition c;
      c.a.assign(n, 0.0);
      c.a[j] = 1.0;
      c.rhs = p.lower[j];
      conds.push_back(std::move(c));
    }
    if (p.upper[j] != kInf && p.upper[j] != p.lower[j]) {
      Condition c;
      c.a.assign(n, 0.0);
      c.a[j] = 1.0;
      c.rhs = p.upper[j];
      conds.push_back(std::move(c));
    }
  }

  const int m = static_cast<int>(conds.size());
  VertexOracleResult best;
  std::vector<int> pick(n);

  // Iterate over all n-subsets of conditions.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (m < n) return best;

  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd b(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < n; ++j) A(r, j) = conds[idx[r]].a[j];
      b[r] = conds[idx[r]].rhs;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.isInvertible()) {
      Eigen::VectorXd x = lu.solve(b);
      if (point_feasible(p, x, 1e-7)) {
        double obj = p.objective_offset;
        for (int j = 0; j < n; ++j) obj += p.objective[j] * x[j];
        if (!best.feasible || obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
        }
      }
    }
    // next combination
    int pos = n - 1;
    while (pos >= 0 && idx[pos] == m - n + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int t = pos + 1; t < n; ++t) idx[t] = idx[t - 1] + 1;
  }
  return best;
}

double newton_single_pipe_head(double h0, double a, double b, double demand) {
  // q is pinned by the demand; theta = a|q|q + bq; h = h0 - theta.
  double theta = a * std::abs(demand) * demand + b * demand;
  return h0 - theta;
}

}  // namespace wdn::testgen
