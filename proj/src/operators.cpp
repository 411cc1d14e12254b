#include "kwc/operators.hpp"

#include <cmath>
#include <vector>

namespace kwc {

// Barycentric P1 exact integrals on a simplex e of measure |e| in R^d:
//   int_e phi_i phi_j = |e| (1 + delta_ij) / ((d+1)(d+2)),
//   int_e phi_i       = |e| / (d+1).
std::unique_ptr<DiscreteOperators> assemble_operators(const SpatialGrid& grid) {
  auto ops = std::make_unique<DiscreteOperators>();
  ops->grid = grid;
  const int n = grid.n_nodes(), d = grid.dim, nv = d + 1;

  ops->grad_phi.resize(grid.n_elems());
  std::vector<Eigen::Triplet<double>> tm, tk;
  tm.reserve(grid.n_elems() * nv * nv);
  tk.reserve(grid.n_elems() * nv * nv);
  for (int e = 0; e < grid.n_elems(); ++e) {
    // gradients of the barycentric basis: solve [1 x_i^T] c = e_i
    Eigen::MatrixXd B(nv, nv);
    for (int i = 0; i < nv; ++i) {
      B(i, 0) = 1.0;
      for (int k = 0; k < d; ++k) B(i, k + 1) = grid.nodes(grid.elems(e, i), k);
    }
    const Eigen::MatrixXd C = B.inverse();  // column i = coeffs of phi_i
    Eigen::MatrixXd G(nv, d);
    for (int i = 0; i < nv; ++i)
      for (int k = 0; k < d; ++k) G(i, k) = C(k + 1, i);
    ops->grad_phi[e] = G;

    const double me = grid.elem_measure(e);
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) {
        const int gi = grid.elems(e, i), gj = grid.elems(e, j);
        tm.emplace_back(gi, gj, me * (i == j ? 2.0 : 1.0) / ((d + 1) * (d + 2)));
        tk.emplace_back(gi, gj, me * G.row(i).dot(G.row(j)));
      }
  }
  ops->M.resize(n, n);
  ops->K.resize(n, n);
  ops->M.setFromTriplets(tm.begin(), tm.end());
  ops->K.setFromTriplets(tk.begin(), tk.end());
  ops->lumped = ops->M * Eigen::VectorXd::Ones(n);

  ops->mk_solver_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
  ops->mk_solver_->compute(SpMat(ops->M + ops->K));
  if (ops->mk_solver_->info() != Eigen::Success)
    throw SolverError("factorization of M+K failed");
  ops->m_solver_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
  ops->m_solver_->compute(ops->M);
  if (ops->m_solver_->info() != Eigen::Success)
    throw SolverError("factorization of M failed");
  return ops;
}

SpMat DiscreteOperators::weighted_mass(const ScalarField& c) const {
  const int n = grid.n_nodes();
  SpMat D(n, n);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(n);
  for (int j = 0; j < n; ++j) t.emplace_back(j, j, lumped(j) * c(j));
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

SpMat DiscreteOperators::weighted_stiffness(const MatrixField& A) const {
  const int n = grid.n_nodes(), d = grid.dim, nv = d + 1;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(grid.n_elems() * nv * nv);
  for (int e = 0; e < grid.n_elems(); ++e) {
    const auto& G = grad_phi[e];
    const double me = grid.elem_measure(e);
    const Eigen::MatrixXd& Ae = A[static_cast<size_t>(e)];
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j)
        t.emplace_back(grid.elems(e, i), grid.elems(e, j),
                       me * G.row(i).dot((Ae * G.row(j).transpose()).transpose()));
  }
  SpMat out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpMat DiscreteOperators::convection(const VectorField& w) const {
  // (C_w z)_j = sum_e (w_e . grad z|_e) int_e phi_j
  const int n = grid.n_nodes(), d = grid.dim, nv = d + 1;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(grid.n_elems() * nv * nv);
  for (int e = 0; e < grid.n_elems(); ++e) {
    const auto& G = grad_phi[e];
    const double w_int = grid.elem_measure(e) / (d + 1);
    for (int j = 0; j < nv; ++j) {
      const double a = w.row(e).head(d).dot(G.row(j));  // w_e . grad phi_j
      for (int i = 0; i < nv; ++i)
        t.emplace_back(grid.elems(e, i), grid.elems(e, j), w_int * a);
    }
  }
  SpMat out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

VectorField DiscreteOperators::gradient_of(const ScalarField& w) const {
  const int d = grid.dim, nv = d + 1;
  VectorField g(grid.n_elems(), d);
  for (int e = 0; e < grid.n_elems(); ++e) {
    Eigen::RowVectorXd ge = Eigen::RowVectorXd::Zero(d);
    for (int i = 0; i < nv; ++i) ge += w(grid.elems(e, i)) * grad_phi[e].row(i);
    g.row(e) = ge;
  }
  return g;
}

Eigen::VectorXd DiscreteOperators::integrate_against_basis(
    const Eigen::VectorXd& c_elem) const {
  const int d = grid.dim, nv = d + 1;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.n_nodes());
  for (int e = 0; e < grid.n_elems(); ++e) {
    const double v = c_elem(e) * grid.elem_measure(e) / (d + 1);
    for (int i = 0; i < nv; ++i) out(grid.elems(e, i)) += v;
  }
  return out;
}

ScalarField DiscreteOperators::nodal_average(const Eigen::VectorXd& c_elem) const {
  return integrate_against_basis(c_elem).cwiseQuotient(lumped);
}

Eigen::VectorXd DiscreteOperators::solve_MK(const Eigen::VectorXd& rhs) const {
  return mk_solver_->solve(rhs);
}

Eigen::VectorXd DiscreteOperators::solve_M(const Eigen::VectorXd& rhs) const {
  return m_solver_->solve(rhs);
}

Eigen::VectorXd solve_sparse(const SpMat& A, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  const double res = (A * x - b).cwiseAbs().maxCoeff();
  if (!(res <= 1e-10 * (1.0 + b.cwiseAbs().maxCoeff())))
    throw SolverError("sparse solve residual " + std::to_string(res) +
                      " exceeds tolerance");
  return x;
}

double norm_H(const DiscreteOperators& ops, const ScalarField& w) {
  return std::sqrt(std::max(0.0, w.dot(ops.M * w)));
}

double norm_V(const DiscreteOperators& ops, const ScalarField& w) {
  return std::sqrt(std::max(0.0, w.dot(ops.M * w) + w.dot(ops.K * w)));
}

double norm_grad(const DiscreteOperators& ops, const VectorField& g) {
  double s = 0;
  for (int e = 0; e < ops.grid.n_elems(); ++e)
    s += ops.grid.elem_measure(e) * g.row(e).squaredNorm();
  return std::sqrt(s);
}

double norm_Vstar_load(const DiscreteOperators& ops, const Eigen::VectorXd& f) {
  return std::sqrt(std::max(0.0, f.dot(ops.solve_MK(f))));
}

double norm_Vstar_field(const DiscreteOperators& ops, const ScalarField& w) {
  return norm_Vstar_load(ops, ops.M * w);
}

double trajectory_norm_Hs(const DiscreteOperators& ops, const ScalarTrajectory& w) {
  double s = 0;
  for (int i = 0; i < w.steps(); ++i) {
    const double ni = norm_H(ops, w[i]);
    s += ni * ni;
  }
  return std::sqrt(w.time.tau * s);
}

double trajectory_inner_Hs(const DiscreteOperators& ops,
                           const ScalarTrajectory& w1, const ScalarTrajectory& w2) {
  double s = 0;
  for (int i = 0; i < w1.steps(); ++i) s += w1[i].dot(ops.M * w2[i]);
  return w1.time.tau * s;
}

double step_inner_Hs(const DiscreteOperators& ops,
                     const ScalarTrajectory& w1, const ScalarTrajectory& w2) {
  double s = 0;
  for (int i = 1; i <= w1.steps(); ++i) s += w1[i].dot(ops.M * w2[i]);
  return w1.time.tau * s;
}

double step_norm_Vstar(const DiscreteOperators& ops, const ScalarTrajectory& w) {
  double s = 0;
  for (int i = 1; i <= w.steps(); ++i) {
    const double ni = norm_Vstar_field(ops, w[i]);
    s += ni * ni;
  }
  return std::sqrt(w.time.tau * s);
}

double step_norm_V(const DiscreteOperators& ops, const ScalarTrajectory& w) {
  double s = 0;
  for (int i = 1; i <= w.steps(); ++i) {
    const double ni = norm_V(ops, w[i]);
    s += ni * ni;
  }
  return std::sqrt(w.time.tau * s);
}

}  // namespace kwc
