#include "sweep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sweep {

namespace {

Mat columns(const Mat& A, const std::vector<int>& idx) {
  Mat out(A.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
  return out;
}

// Shared Lawson-Hanson loop. `solve_passive` returns the unconstrained minimizer
// restricted to the passive index list; `descent` returns the negative gradient.
template <class SolvePassive, class Descent>
void lawson_hanson(int n, const std::vector<bool>& free, double tol, int max_iterations,
                   SolvePassive solve_passive, Descent descent, Vec& x, int& iterations,
                   bool& converged) {
  x = Vec::Zero(n);
  std::vector<bool> passive(free);
  auto passive_list = [&] {
    std::vector<int> p;
    for (int i = 0; i < n; ++i)
      if (passive[i]) p.push_back(i);
    return p;
  };
  if (std::any_of(free.begin(), free.end(), [](bool f) { return f; })) {
    auto p = passive_list();
    Vec s = solve_passive(p);
    for (std::size_t c = 0; c < p.size(); ++c) x[p[c]] = s[static_cast<Eigen::Index>(c)];
  }
  std::vector<bool> blocked(n, false);
  iterations = 0;
  converged = true;
  while (true) {
    Vec w = descent(x);
    int j = -1;
    double best = tol;
    for (int i = 0; i < n; ++i) {
      if (passive[i] || blocked[i]) continue;
      if (w[i] > best) {
        best = w[i];
        j = i;
      }
    }
    if (j < 0) break;
    if (++iterations > max_iterations) {
      converged = false;
      break;
    }
    passive[j] = true;
    while (true) {
      auto p = passive_list();
      Vec s_p = solve_passive(p);
      Vec s = Vec::Zero(n);
      for (std::size_t c = 0; c < p.size(); ++c) s[p[c]] = s_p[static_cast<Eigen::Index>(c)];
      double alpha = std::numeric_limits<double>::infinity();
      for (int i : p) {
        if (free[i] || s[i] > 0.0) continue;
        double denom = x[i] - s[i];
        double a = denom > 0.0 ? x[i] / denom : 0.0;
        alpha = std::min(alpha, a);
      }
      if (!std::isfinite(alpha)) {
        x = s;
        break;
      }
      x += alpha * (s - x);
      bool removed = false;
      for (int i : p) {
        if (!free[i] && x[i] <= tol) {
          x[i] = 0.0;
          passive[i] = false;
          removed = true;
        }
      }
      if (!removed) {
        x = s;
        break;
      }
      if (!passive[j]) {
        // The entering variable left immediately; skip it until the next change.
        blocked[j] = true;
        break;
      }
      if (++iterations > max_iterations) {
        converged = false;
        return;
      }
    }
    if (passive[j]) std::fill(blocked.begin(), blocked.end(), false);
  }
}

}  // namespace

Vec lstsq(const Mat& A, const Vec& b) {
  if (A.cols() == 0) return Vec::Zero(0);
  if (A.rows() == 0) return Vec::Zero(A.cols());
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  cod.setThreshold(1e-13);
  return cod.solve(b);
}

int numerical_rank(const Mat& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * sv[0]) ++r;
  return r;
}

NnlsResult bounded_least_squares(const Mat& A, const Vec& b, const std::vector<bool>& free) {
  const int n = static_cast<int>(A.cols());
  NnlsResult out;
  if (n == 0) {
    out.x = Vec::Zero(0);
    out.residual = b.norm();
    return out;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  double tol = 10.0 * eps * A.cwiseAbs().colwise().sum().maxCoeff() *
               static_cast<double>(std::max<Eigen::Index>(A.rows(), A.cols())) *
               std::max(1.0, b.norm());
  auto solve_passive = [&](const std::vector<int>& p) { return lstsq(columns(A, p), b); };
  auto descent = [&](const Vec& x) -> Vec { return A.transpose() * (b - A * x); };
  lawson_hanson(n, free, tol, 3 * n + 20, solve_passive, descent, out.x, out.iterations,
                out.converged);
  out.residual = (A * out.x - b).norm();
  return out;
}

NnlsResult nnls(const Mat& A, const Vec& b, int max_iterations) {
  const int n = static_cast<int>(A.cols());
  if (max_iterations < 0) return bounded_least_squares(A, b, std::vector<bool>(n, false));
  NnlsResult out;
  if (n == 0) {
    out.x = Vec::Zero(0);
    out.residual = b.norm();
    return out;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  double tol = 10.0 * eps * A.cwiseAbs().colwise().sum().maxCoeff() *
               static_cast<double>(std::max<Eigen::Index>(A.rows(), A.cols())) *
               std::max(1.0, b.norm());
  auto solve_passive = [&](const std::vector<int>& p) { return lstsq(columns(A, p), b); };
  auto descent = [&](const Vec& x) -> Vec { return A.transpose() * (b - A * x); };
  lawson_hanson(n, std::vector<bool>(n, false), tol, max_iterations, solve_passive, descent, out.x,
                out.iterations, out.converged);
  out.residual = (A * out.x - b).norm();
  return out;
}

NonnegQpResult nonneg_qp(const Mat& Q, const Vec& c, int max_iterations) {
  const int n = static_cast<int>(Q.cols());
  NonnegQpResult out;
  if (n == 0) {
    out.x = Vec::Zero(0);
    return out;
  }
  if (max_iterations < 0) max_iterations = 3 * n + 20;
  const double eps = std::numeric_limits<double>::epsilon();
  double tol = 100.0 * eps * (Q.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff() + 1.0);
  auto solve_passive = [&](const std::vector<int>& p) -> Vec {
    Mat Qp(p.size(), p.size());
    Vec cp(p.size());
    for (std::size_t r = 0; r < p.size(); ++r) {
      cp[static_cast<Eigen::Index>(r)] = c[p[r]];
      for (std::size_t s = 0; s < p.size(); ++s)
        Qp(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = Q(p[r], p[s]);
    }
    return lstsq(Qp, -cp);
  };
  auto descent = [&](const Vec& x) -> Vec { return -(Q * x + c); };
  lawson_hanson(n, std::vector<bool>(n, false), tol, max_iterations, solve_passive, descent, out.x,
                out.iterations, out.converged);
  return out;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

Vec simpson_weights(int N, double h) {
  if (N % 2) throw DomainError("simpson_weights: number of intervals must be even");
  Vec w(N + 1);
  for (int i = 0; i <= N; ++i) w[i] = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w * (h / 3.0);
}

std::vector<double> tail_integrals(const std::vector<double>& f, double h) {
  const int N = static_cast<int>(f.size()) - 1;
  std::vector<double> tail(f.size(), 0.0);
  if (N <= 0) return tail;
  if (N == 1) {
    tail[0] = 0.5 * h * (f[0] + f[1]);
    return tail;
  }
  // even[i]: Simpson from t_i to t_N, defined when N - i is even.
  std::vector<double> even(f.size(), 0.0);
  for (int i = N - 2; i >= 0; i -= 2)
    even[i] = even[i + 2] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  for (int i = N - 1; i >= 0; --i) {
    int m = N - i;
    if (m % 2 == 0) {
      tail[i] = even[i];
    } else if (m >= 3) {
      double e38 = 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
      double rest = 0.0;
      if (i + 3 < N) {
        // N - (i + 3) is even: reuse the Simpson suffix
        rest = even[i + 3];
      }
      tail[i] = e38 + rest;
    } else {
      tail[i] = h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
    }
  }
  return tail;
}

}  // namespace sweep
