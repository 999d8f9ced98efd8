#pragma once

#include <vector>

namespace starlab {

// Solves the diagonally dominant tridiagonal system
//   -l_i x_{i-1} + (s_i + l_i + u_i) x_i - u_i x_{i+1} = r_i
// with l, u >= 0 and row excess s >= 0 (at least one s_i > 0). The
// elimination carries the excess of each pivot explicitly, so no
// subtraction of nearly equal numbers occurs even when l, u dwarf s.
// l[0] and u[n-1] are ignored.
std::vector<double> solve_excess_tridiagonal(const std::vector<double>& s,
                                             const std::vector<double>& l,
                                             const std::vector<double>& u,
                                             const std::vector<double>& r);

}  // namespace starlab
