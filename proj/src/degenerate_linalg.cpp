#include "koszul/degenerate_linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "koszul/error.hpp"

namespace koszul {

PseudoSolver::PseudoSolver(const GramSnapshot& g) : rank_tol_(g.rank_tol) {
  if (!(g.rank_tol > 0.0)) throw Error("rank tolerance must be positive");
  if (g.matrix.rows() != g.matrix.cols()) throw DimensionMismatch("Gram matrix must be square");
  Eigen::SelfAdjointEigenSolver<SmallMat> es(g.matrix);
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  max_abs_ = eigenvalues_.size() ? eigenvalues_.cwiseAbs().maxCoeff() : 0.0;
  cutoff_ = rank_tol_ * max_abs_;
}

double PseudoSolver::condition_ratio() const {
  if (max_abs_ == 0.0) return 0.0;
  return eigenvalues_.cwiseAbs().minCoeff() / max_abs_;
}

int PseudoSolver::rank() const {
  int r = 0;
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(eigenvalues_[i]) > cutoff_) ++r;
  }
  return r;
}

std::vector<SmallVec> PseudoSolver::radical_basis() const {
  std::vector<SmallVec> out;
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(eigenvalues_[i]) <= cutoff_) out.push_back(eigenvectors_.col(i));
  }
  return out;
}

bool PseudoSolver::is_annihilator(const SmallVec& omega) const {
  if (omega.size() != dim()) throw DimensionMismatch("covector and Gram matrix dimensions differ");
  const double norm = omega.norm();
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(eigenvalues_[i]) > cutoff_) continue;
    // Radical vectors are unit length.
    if (std::abs(omega.dot(eigenvectors_.col(i))) > rank_tol_ * norm) return false;
  }
  return true;
}

SmallVec PseudoSolver::solve(const SmallVec& omega) const {
  SmallVec x = SmallVec::Zero(dim());
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(eigenvalues_[i]) <= cutoff_) continue;
    x += (eigenvectors_.col(i).dot(omega) / eigenvalues_[i]) * eigenvectors_.col(i);
  }
  return x;
}

double PseudoSolver::co_inner(const SmallVec& omega, const SmallVec& tau) const {
  if (!is_annihilator(omega) || !is_annihilator(tau)) {
    throw NotAnnihilator("co-inner product of a covector that does not annihilate the radical");
  }
  // Symmetric form: sum over the range of (q.omega)(q.tau)/lambda.
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(eigenvalues_[i]) <= cutoff_) continue;
    s += eigenvectors_.col(i).dot(omega) * eigenvectors_.col(i).dot(tau) / eigenvalues_[i];
  }
  return s;
}

std::vector<SmallVec> radical_basis(const GramSnapshot& g) { return PseudoSolver(g).radical_basis(); }

bool is_annihilator(const SmallVec& omega, const GramSnapshot& g) { return PseudoSolver(g).is_annihilator(omega); }

double co_inner(const SmallVec& omega, const SmallVec& tau, const GramSnapshot& g) {
  return PseudoSolver(g).co_inner(omega, tau);
}

void require_nondegenerate(const SmallMat& g, double rank_tol) {
  const PseudoSolver s(GramSnapshot{g, rank_tol});
  if (s.max_abs_eigenvalue() == 0.0 || s.rank() < s.dim()) {
    throw SingularBaseMetric("metric is singular at this point");
  }
}

double cometric(const MetricField& g, const CovectorValue& alpha, const CovectorValue& beta) {
  require_same_dim(static_cast<int>(alpha.components.size()), g.dim(), "cometric");
  require_same_dim(static_cast<int>(beta.components.size()), g.dim(), "cometric");
  const SmallMat m = metric_at(g, alpha.point);
  require_nondegenerate(m, kDefaultRankTol);
  return alpha.components.dot(m.inverse() * beta.components);
}

}  // namespace koszul
