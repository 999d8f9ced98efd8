#include "starlab/tridiag.hpp"

#include "starlab/error.hpp"

namespace starlab {

std::vector<double> solve_excess_tridiagonal(const std::vector<double>& s,
                                             const std::vector<double>& l,
                                             const std::vector<double>& u,
                                             const std::vector<double>& r) {
  const std::size_t n = s.size();
  if (l.size() != n || u.size() != n || r.size() != n || n == 0) {
    throw Error(ErrorCode::InvalidParams, "tridiagonal operands must have equal nonzero size");
  }
  std::vector<double> p(n), rr(n), x(n);
  double e = s[0];
  double up = n > 1 ? u[0] : 0.0;
  p[0] = e + up;
  rr[0] = r[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double ui = i + 1 < n ? u[i] : 0.0;
    const double ratio = l[i] / p[i - 1];
    e = s[i] + ratio * e;  // excess of pivot i over u_i
    p[i] = e + ui;
    rr[i] = r[i] + ratio * rr[i - 1];
  }
  if (!(p[n - 1] > 0.0)) {
    throw Error(ErrorCode::StepFailure, "singular tridiagonal system");
  }
  x[n - 1] = rr[n - 1] / p[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rr[i] + u[i] * x[i + 1]) / p[i];
  return x;
}

}  // namespace starlab
