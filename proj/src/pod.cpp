#include "flownet/pod.hpp"

#include "flownet/io_util.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace flownet {

using nlohmann::json;

VecX weighted_projection(const MatX& M, const MatX& V, const VecX& x) {
  const MatX G = V.transpose() * M * V;
  Eigen::LDLT<MatX> ldlt(G);
  if (ldlt.info() != Eigen::Success)
    throw ValidationError("projection Gram matrix is singular");
  return V * ldlt.solve(V.transpose() * (M * x));
}

PcaResult pca_in_product(const MatX& S, const MatX& MS, int count, double rank_tol) {
  const Eigen::Index L = S.cols();
  const MatX G = S.transpose() * MS;
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (G + G.transpose()));
  if (eig.info() != Eigen::Success) throw ValidationError("snapshot Gram eigensolve failed");

  // Eigenvalues ascending; flip to descending singular values.
  PcaResult res;
  res.singular_values.resize(L);
  for (Eigen::Index i = 0; i < L; ++i)
    res.singular_values[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[L - 1 - i]));
  const double smax = res.singular_values.size() ? res.singular_values[0] : 0.0;
  // The Gram route resolves ranks only down to its eigenvalue noise floor;
  // cut there as well as at the requested singular-value tolerance.
  const double lam_floor = 100.0 * std::numeric_limits<double>::epsilon() *
                           std::max(0.0, eig.eigenvalues().maxCoeff());
  res.rank = 0;
  for (Eigen::Index i = 0; i < L; ++i)
    if (res.singular_values[i] > rank_tol * smax &&
        eig.eigenvalues()[L - 1 - i] > lam_floor)
      ++res.rank;

  if (count > res.rank)
    throw ValidationError("requested " + std::to_string(count) +
                          " modes but the numerical rank is " + std::to_string(res.rank));
  res.modes.resize(S.rows(), count);
  for (int i = 0; i < count; ++i)
    res.modes.col(i) = S * eig.eigenvectors().col(L - 1 - i) / res.singular_values[i];
  return res;
}

DxPlusSolver::DxPlusSolver(const FemModel& fm) : fm_(&fm) {
  const int N1 = fm.N1, N2 = fm.N2;
  // Equilibrate the saddle blocks: the mass matrix carries the cell
  // measure while the derivative pairing does not.
  double wmean = 0.0;
  for (int i = 0; i < N2; ++i) wmean += fm.W.coeff(i, i);
  wmean /= N2;
  double jmax = 0.0;
  for (int k = 0; k < fm.J.outerSize(); ++k)
    for (SpMat::InnerIterator it(fm.J, k); it; ++it)
      jmax = std::max(jmax, std::abs(it.value()));
  gamma_ = std::max(1.0, wmean / std::max(jmax, 1e-300));

  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(fm.W.nonZeros() + 2 * fm.J.nonZeros()));
  for (int k = 0; k < fm.W.outerSize(); ++k)
    for (SpMat::InnerIterator it(fm.W, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < fm.J.outerSize(); ++k)
    for (SpMat::InnerIterator it(fm.J, k); it; ++it) {
      trip.emplace_back(N2 + static_cast<int>(it.row()), static_cast<int>(it.col()),
                        gamma_ * it.value());
      trip.emplace_back(static_cast<int>(it.col()), N2 + static_cast<int>(it.row()),
                        gamma_ * it.value());
    }
  saddle_.resize(N1 + N2, N1 + N2);
  saddle_.setFromTriplets(trip.begin(), trip.end());
  saddle_.makeCompressed();
  lu_.compute(saddle_);
  if (lu_.info() != Eigen::Success)
    throw ValidationError("saddle factorization for the derivative right-inverse failed");
}

MatX DxPlusSolver::apply(const MatX& X) const {
  const int N1 = fm_->N1, N2 = fm_->N2;
  MatX Z(N2, X.cols());
  VecX rhs = VecX::Zero(N1 + N2);
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    rhs.tail(N1) = gamma_ * fm_->Q_diag.cwiseProduct(X.col(c));
    VecX sol = lu_.solve(rhs);
    // Two rounds of iterative refinement recover the last digits.
    for (int round = 0; round < 2; ++round) {
      const VecX resid = rhs - saddle_ * sol;
      sol += lu_.solve(resid);
    }
    Z.col(c) = sol.head(N2);
  }
  return Z;
}

namespace {

// M-orthonormalize columns in place (Gram Cholesky, two passes).
void orthonormalize(MatX& V, const std::function<MatX(const MatX&)>& apply_M) {
  for (int pass = 0; pass < 2; ++pass) {
    const MatX G = V.transpose() * apply_M(V);
    Eigen::LLT<MatX> llt(G);
    if (llt.info() != Eigen::Success)
      throw ValidationError("basis Gram matrix not positive definite");
    llt.matrixU().solveInPlace<Eigen::OnTheRight>(V);
  }
}

}  // namespace

ReductionBasis compatible_pod(const FemModel& fm, const SnapshotSet& snaps, int n1) {
  if (snaps.S1.rows() != fm.N1 || snaps.S2.rows() != fm.N2)
    throw ValidationError("snapshot dimensions do not match the model");

  // Combined snapshot block [S1, Q^{-1} J S2] in the Q inner product.
  MatX Y = fm.J * snaps.S2;
  for (Eigen::Index c = 0; c < Y.cols(); ++c)
    Y.col(c) = Y.col(c).cwiseQuotient(fm.Q_diag);
  MatX S(fm.N1, snaps.count() * 2);
  S << snaps.S1, Y;
  const MatX MS = fm.Q_diag.asDiagonal() * S;

  PcaResult pca = pca_in_product(S, MS, n1);
  ReductionBasis basis;
  basis.kind = "compatible-pod";
  basis.singular_values = pca.singular_values;
  basis.V1 = pca.modes;
  orthonormalize(basis.V1,
                 [&](const MatX& V) { return MatX(fm.Q_diag.asDiagonal() * V); });

  // Flux space: the kernel plus the lifted image of Q V1.
  DxPlusSolver dxp(fm);
  MatX V2(fm.N2, fm.kernel_dim() + n1);
  V2 << fm.Kbasis, dxp.apply(basis.V1);
  orthonormalize(V2, [&](const MatX& V) { return MatX(fm.W * V); });
  basis.V2 = V2;
  return basis;
}

double CompatibilityReport::worst() const {
  // The pass criterion covers the two compatibility conditions; the
  // orthonormality defects are reported for diagnostics only (the FOM
  // identity basis is compatible without being orthonormal).
  return std::max(range_defect, kernel_defect);
}

CompatibilityReport check_compatibility(const FemModel& fm, const ReductionBasis& basis,
                                        double tol) {
  CompatibilityReport rep;
  rep.tolerance = tol;
  const int n1 = static_cast<int>(basis.V1.cols());

  const MatX QV1 = fm.Q_diag.asDiagonal() * basis.V1;
  const MatX JV2 = fm.J * basis.V2;

  // Orthonormal range bases, rank-revealing for J V2.
  Eigen::HouseholderQR<MatX> qr1(QV1);
  const MatX U1 = qr1.householderQ() * MatX::Identity(fm.N1, n1);
  Eigen::ColPivHouseholderQR<MatX> qr2(JV2);
  qr2.setThreshold(1e-12);
  const int rank2 = static_cast<int>(qr2.rank());
  if (rank2 != n1) {
    rep.range_defect = 1.0;
  } else {
    // sin of the largest principal angle, via the projection residual
    // (numerically exact for tiny angles, unlike sqrt(1 - cos^2)).
    const MatX U2 = qr2.householderQ() * MatX::Identity(fm.N1, rank2);
    const MatX R12 = U2 - U1 * (U1.transpose() * U2);
    const MatX R21 = U1 - U2 * (U2.transpose() * U1);
    const double s12 = Eigen::JacobiSVD<MatX>(R12).singularValues().maxCoeff();
    const double s21 = Eigen::JacobiSVD<MatX>(R21).singularValues().maxCoeff();
    rep.range_defect = std::max(s12, s21);
  }

  // Kernel inclusion, measured per W-normalized kernel direction.
  const MatX G2 = basis.V2.transpose() * (fm.W * basis.V2);
  Eigen::LDLT<MatX> ldlt(G2);
  double kd = 0.0;
  for (int c = 0; c < fm.kernel_dim(); ++c) {
    const VecX k = fm.Kbasis.col(c);
    const VecX r = k - basis.V2 * ldlt.solve(basis.V2.transpose() * (fm.W * k));
    kd = std::max(kd, std::sqrt(r.dot(fm.W * r)) / std::sqrt(k.dot(fm.W * k)));
  }
  rep.kernel_defect = kd;

  rep.orth_defect_V1 =
      (basis.V1.transpose() * QV1 - MatX::Identity(n1, n1)).cwiseAbs().maxCoeff();
  rep.orth_defect_V2 =
      (G2 - MatX::Identity(G2.rows(), G2.cols())).cwiseAbs().maxCoeff();

  rep.pass = rep.worst() <= tol;
  return rep;
}

double kernel_derivative_product(const FemModel& fm, const VecX& w, const VecX& wt) {
  // Pi_K is the W-orthogonal projection; with a W-orthonormal kernel basis
  // the first term reduces to a coefficient dot product.
  const VecX cw = fm.Kbasis.transpose() * (fm.W * w);
  const VecX cwt = fm.Kbasis.transpose() * (fm.W * wt);
  const VecX jw = fm.J * w;
  const VecX jwt = fm.J * wt;
  return cw.dot(cwt) + jw.dot(jwt.cwiseQuotient(fm.Q_diag));
}

MatX kernel_derivative_gram(const FemModel& fm) {
  const MatX WK = fm.W * fm.Kbasis;
  MatX D = WK * WK.transpose();
  const MatX Jd = MatX(fm.J);
  D += Jd.transpose() * fm.Q_diag.cwiseInverse().asDiagonal() * Jd;
  return D;
}

std::pair<double, double> projection_equivalence_check(const FemModel& fm, const VecX& m,
                                                      const MatX& Qtilde) {
  // Derivative route: || dx m - Pi_{Qtilde} dx m ||_{L^2}.
  const VecX y = (fm.J * m).cwiseQuotient(fm.Q_diag);
  const MatX Qd = MatX(fm.Q_diag.asDiagonal());
  const VecX py = weighted_projection(Qd, Qtilde, y);
  const VecX dy = y - py;
  const double deriv_route = std::sqrt(dy.dot(fm.Q_diag.cwiseProduct(dy)));

  // Diamond route on the kernel complement.
  const VecX yk = m - fm.Kbasis * (fm.Kbasis.transpose() * (fm.W * m));
  DxPlusSolver dxp(fm);
  const MatX Vplus = dxp.apply(Qtilde);
  const MatX D = kernel_derivative_gram(fm);
  const VecX z = weighted_projection(D, Vplus, yk);
  const VecX dz = yk - z;
  const double diamond_route = std::sqrt(dz.dot(D * dz));

  return {diamond_route, deriv_route};
}

double pod_objective_flux_form(const FemModel& fm, const SnapshotSet& snaps,
                               const MatX& V1, const MatX& V2) {
  const MatX Qd = MatX(fm.Q_diag.asDiagonal());
  const MatX D = kernel_derivative_gram(fm);
  double obj = 0.0;
  for (int l = 0; l < snaps.count(); ++l) {
    const VecX e1 = snaps.S1.col(l) - weighted_projection(Qd, V1, snaps.S1.col(l));
    obj += e1.dot(fm.Q_diag.cwiseProduct(e1));
    const VecX e2 = snaps.S2.col(l) - weighted_projection(D, V2, snaps.S2.col(l));
    obj += e2.dot(D * e2);
  }
  return obj;
}

double pod_objective_derivative_form(const FemModel& fm, const SnapshotSet& snaps,
                                     const MatX& V1) {
  const MatX Qd = MatX(fm.Q_diag.asDiagonal());
  double obj = 0.0;
  for (int l = 0; l < snaps.count(); ++l) {
    const VecX e1 = snaps.S1.col(l) - weighted_projection(Qd, V1, snaps.S1.col(l));
    obj += e1.dot(fm.Q_diag.cwiseProduct(e1));
    const VecX y = (fm.J * snaps.S2.col(l)).cwiseQuotient(fm.Q_diag);
    const VecX e2 = y - weighted_projection(Qd, V1, y);
    obj += e2.dot(fm.Q_diag.cwiseProduct(e2));
  }
  return obj;
}

double singular_tail(const VecX& singular_values, int n1) {
  double tail = 0.0;
  for (Eigen::Index i = n1; i < singular_values.size(); ++i)
    tail += singular_values[i] * singular_values[i];
  return tail;
}

std::unique_ptr<ReducedSystem> project_rom(const FemModel& fm, const PhysicsConfig& cfg,
                                           const BoundarySchedule& bc,
                                           const ReductionBasis& basis, double tol) {
  const CompatibilityReport rep = check_compatibility(fm, basis, tol);
  if (!rep.pass)
    throw ValidationError("basis fails the compatibility conditions (worst defect " +
                          std::to_string(rep.worst()) + ")");
  return std::make_unique<ReducedSystem>(fm, cfg, bc, basis.V1, basis.V2, full_form(fm));
}

void save_basis(const ReductionBasis& basis, const std::string& prefix,
                uint64_t snapshot_hash) {
  write_matrix_csv(prefix + "_V1.csv", basis.V1);
  write_matrix_csv(prefix + "_V2.csv", basis.V2);
  json j;
  j["kind"] = basis.kind;
  j["N1"] = basis.V1.rows();
  j["N2"] = basis.V2.rows();
  j["n1"] = basis.V1.cols();
  j["n2"] = basis.V2.cols();
  j["singular_values"] = std::vector<double>(
      basis.singular_values.data(), basis.singular_values.data() + basis.singular_values.size());
  j["singular_values_2"] = std::vector<double>(
      basis.singular_values_2.data(),
      basis.singular_values_2.data() + basis.singular_values_2.size());
  std::ostringstream hash;
  hash << std::hex << snapshot_hash;
  j["snapshot_hash"] = hash.str();
  j["files"] = {{"V1", prefix + "_V1.csv"}, {"V2", prefix + "_V2.csv"}};
  std::ofstream out(prefix + ".json");
  if (!out) throw ParseError("cannot write basis header: " + prefix + ".json");
  out << j.dump(2) << "\n";
}

ReductionBasis load_basis(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw ParseError("cannot open basis header: " + prefix + ".json");
  json j;
  in >> j;
  ReductionBasis basis;
  basis.kind = j.value("kind", "compatible-pod");
  basis.V1 = read_matrix_csv(j.at("files").at("V1").get<std::string>());
  basis.V2 = read_matrix_csv(j.at("files").at("V2").get<std::string>());
  auto sv = j.value("singular_values", std::vector<double>{});
  basis.singular_values =
      Eigen::Map<const VecX>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  auto sv2 = j.value("singular_values_2", std::vector<double>{});
  basis.singular_values_2 =
      Eigen::Map<const VecX>(sv2.data(), static_cast<Eigen::Index>(sv2.size()));
  if (basis.V1.cols() != j.at("n1").get<int>() || basis.V2.cols() != j.at("n2").get<int>())
    throw ParseError("basis header dimensions disagree with matrix files");
  return basis;
}

uint64_t matrix_hash(const MatX& a, const MatX& b) {
  uint64_t h = fnv1a64(a.data(), sizeof(double) * static_cast<size_t>(a.size()));
  return fnv1a64(b.data(), sizeof(double) * static_cast<size_t>(b.size()), h);
}

}  // namespace flownet
