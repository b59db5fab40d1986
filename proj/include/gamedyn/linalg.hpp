#pragma once

#include <stdexcept>
#include <vector>

#include "gamedyn/rational.hpp"
#include "gamedyn/simplex.hpp"

namespace gamedyn {

enum class SolveKind { inconsistent, unique, underdetermined };

struct LinearSolution {
  SolveKind kind = SolveKind::inconsistent;
  RatVec particular;               // one solution (free variables at 0)
  std::vector<RatVec> nullspace;   // basis of the homogeneous solution space
  int rank = 0;
};

// Exact solve of A z = b given the augmented matrix [A | b] (m rows, k
// unknowns). Forward elimination is fraction-free (Bareiss) on integers
// after clearing row denominators; back-substitution is rational. No
// tolerances anywhere.
inline LinearSolution solve_exact(const std::vector<RatVec>& aug, int k) {
  const int m = static_cast<int>(aug.size());
  std::vector<std::vector<mpz_class>> M(m, std::vector<mpz_class>(k + 1));
  for (int r = 0; r < m; ++r) {
    if (static_cast<int>(aug[r].size()) != k + 1)
      throw std::invalid_argument("solve_exact: bad augmented row width");
    mpz_class lcm = 1;
    for (const Rat& q : aug[r]) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), q.get_den().get_mpz_t());
    for (int c = 0; c <= k; ++c) {
      mpz_class scaled = aug[r][c].get_num() * (lcm / aug[r][c].get_den());
      M[r][c] = scaled;
    }
  }

  std::vector<int> pivot_col;  // pivot column of row i (rows reordered in place)
  mpz_class prev = 1;
  int row = 0;
  for (int col = 0; col < k && row < m; ++col) {
    int pr = -1;
    for (int r = row; r < m; ++r)
      if (sgn(M[r][col]) != 0) { pr = r; break; }
    if (pr < 0) continue;  // free column
    std::swap(M[row], M[pr]);
    for (int r = row + 1; r < m; ++r) {
      for (int c = col + 1; c <= k; ++c) {
        mpz_class t = M[row][col] * M[r][c] - M[r][col] * M[row][c];
        mpz_divexact(M[r][c].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      M[r][col] = 0;
    }
    prev = M[row][col];
    pivot_col.push_back(col);
    ++row;
  }
  const int rank = row;

  LinearSolution sol;
  sol.rank = rank;
  for (int r = rank; r < m; ++r)
    if (sgn(M[r][k]) != 0) {
      sol.kind = SolveKind::inconsistent;
      return sol;
    }

  std::vector<bool> is_pivot(k, false);
  for (int c : pivot_col) is_pivot[c] = true;

  auto back_substitute = [&](const std::vector<Rat>& fixed_free, bool homogeneous) {
    RatVec z(k, Rat(0));
    int fi = 0;
    for (int c = 0; c < k; ++c)
      if (!is_pivot[c]) z[c] = fixed_free[fi++];
    for (int r = rank - 1; r >= 0; --r) {
      int pc = pivot_col[r];
      Rat acc = homogeneous ? Rat(0) : Rat(M[r][k]);
      for (int c = pc + 1; c < k; ++c)
        if (sgn(M[r][c]) != 0) acc -= Rat(M[r][c]) * z[c];
      z[pc] = acc / Rat(M[r][pc]);
    }
    return z;
  };

  const int free_count = k - rank;
  sol.particular = back_substitute(std::vector<Rat>(free_count, Rat(0)), false);
  if (free_count == 0) {
    sol.kind = SolveKind::unique;
    return sol;
  }
  sol.kind = SolveKind::underdetermined;
  for (int f = 0; f < free_count; ++f) {
    std::vector<Rat> e(free_count, Rat(0));
    e[f] = 1;
    sol.nullspace.push_back(back_substitute(e, true));
  }
  return sol;
}

}  // namespace gamedyn
