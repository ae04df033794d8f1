#pragma once

// Pointwise linear algebra of a possibly degenerate Gram matrix.
//
// The co-inner product of two radical-annihilating covectors is tau . x with x
// the minimum-norm solution of G x = omega. Rank decisions use a cutoff relative
// to the largest |eigenvalue| so that uniformly rescaling the metric does not
// change which directions count as radical.

#include <vector>

#include "koszul/fields.hpp"
#include "koszul/jet.hpp"

namespace koszul {

inline constexpr double kDefaultRankTol = 1e-9;

struct GramSnapshot {
  SmallMat matrix;
  double rank_tol = kDefaultRankTol;
};

// Eigendecomposition of one snapshot, reused across queries at a point.
class PseudoSolver {
 public:
  explicit PseudoSolver(const GramSnapshot& g);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const SmallVec& eigenvalues() const { return eigenvalues_; }
  double max_abs_eigenvalue() const { return max_abs_; }
  // Smallest |eigenvalue| over largest, 0 for the zero matrix.
  double condition_ratio() const;
  double cutoff() const { return cutoff_; }
  int rank() const;

  std::vector<SmallVec> radical_basis() const;
  bool is_annihilator(const SmallVec& omega) const;
  // Throws NotAnnihilator when either argument has a radical component.
  double co_inner(const SmallVec& omega, const SmallVec& tau) const;
  // Minimum-norm x with G x = omega (omega assumed in range).
  SmallVec solve(const SmallVec& omega) const;

 private:
  SmallVec eigenvalues_;
  SmallMat eigenvectors_;
  double rank_tol_;
  double max_abs_ = 0.0;
  double cutoff_ = 0.0;
};

std::vector<SmallVec> radical_basis(const GramSnapshot& g);
bool is_annihilator(const SmallVec& omega, const GramSnapshot& g);
double co_inner(const SmallVec& omega, const SmallVec& tau, const GramSnapshot& g);

// alpha^T g(p)^-1 beta on a nondegenerate metric; the point is alpha.point.
double cometric(const MetricField& g, const CovectorValue& alpha, const CovectorValue& beta);

// Throws SingularBaseMetric if |eigenvalue|_min <= rank_tol * |eigenvalue|_max.
void require_nondegenerate(const SmallMat& g, double rank_tol);

}  // namespace koszul
