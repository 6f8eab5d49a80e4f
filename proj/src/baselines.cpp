#include "flownet/baselines.hpp"

#include "flownet/io_util.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <fstream>
#include <functional>
#include <map>

namespace flownet {

namespace {

void orthonormalize_in(MatX& V, const std::function<MatX(const MatX&)>& apply_M) {
  for (int pass = 0; pass < 2; ++pass) {
    const MatX G = V.transpose() * apply_M(V);
    Eigen::LLT<MatX> llt(G);
    if (llt.info() != Eigen::Success)
      throw ValidationError("basis Gram matrix not positive definite");
    llt.matrixU().solveInPlace<Eigen::OnTheRight>(V);
  }
}

}  // namespace

ReductionBasis block_pod(const FemModel& fm, const SnapshotSet& snaps, int n) {
  if (n < 2 || n % 2 != 0)
    throw ValidationError("block POD expects an even total dimension n >= 2");
  const int half = n / 2;

  ReductionBasis basis;
  basis.kind = "incompatible-baseline";

  const MatX MS1 = fm.Q_diag.asDiagonal() * snaps.S1;
  PcaResult p1 = pca_in_product(snaps.S1, MS1, half);
  basis.V1 = p1.modes;
  orthonormalize_in(basis.V1,
                    [&](const MatX& V) { return MatX(fm.Q_diag.asDiagonal() * V); });
  basis.singular_values = p1.singular_values;

  const MatX MS2 = fm.W * snaps.S2;
  PcaResult p2 = pca_in_product(snaps.S2, MS2, half);
  basis.V2 = p2.modes;
  orthonormalize_in(basis.V2, [&](const MatX& V) { return MatX(fm.W * V); });
  basis.singular_values_2 = p2.singular_values;
  return basis;
}

DeimOperator deim_train(const MatX& snapshots, int n_c, const std::string& target) {
  Eigen::JacobiSVD<MatX> svd(snapshots, Eigen::ComputeThinU);
  const VecX& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * sv[0]) ++rank;
  if (n_c > rank)
    throw ValidationError("DEIM dimension " + std::to_string(n_c) +
                          " exceeds snapshot rank " + std::to_string(rank));

  DeimOperator op;
  op.target = target;
  op.U = svd.matrixU().leftCols(n_c);

  // Greedy residual-max interpolation points.
  op.indices.clear();
  Eigen::Index p0;
  op.U.col(0).cwiseAbs().maxCoeff(&p0);
  op.indices.push_back(static_cast<int>(p0));
  for (int k = 1; k < n_c; ++k) {
    MatX Up(k, k);
    VecX up(k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) Up(r, c) = op.U(op.indices[r], c);
      up[r] = op.U(op.indices[r], k);
    }
    const VecX coeff = Up.colPivHouseholderQr().solve(up);
    const VecX resid = op.U.col(k) - op.U.leftCols(k) * coeff;
    Eigen::Index pk;
    resid.cwiseAbs().maxCoeff(&pk);
    op.indices.push_back(static_cast<int>(pk));
  }

  MatX PU(n_c, n_c);
  for (int r = 0; r < n_c; ++r)
    for (int c = 0; c < n_c; ++c) PU(r, c) = op.U(op.indices[r], c);
  op.interp = op.U * PU.partialPivLu().inverse();
  return op;
}

VecX deim_apply(const DeimOperator& op, const VecX& values_at_indices) {
  return op.interp * values_at_indices;
}

namespace {

// Restriction of full-order snapshots to reduced coordinates.
std::pair<MatX, MatX> restrict_snapshots(const FemModel& fm, const ReductionBasis& basis,
                                         const SnapshotSet& snaps) {
  const MatX G1 = basis.V1.transpose() * fm.Q_diag.asDiagonal() * basis.V1;
  const MatX G2 = basis.V2.transpose() * (fm.W * basis.V2);
  Eigen::LLT<MatX> llt1(G1), llt2(G2);
  MatX A1 = llt1.solve(basis.V1.transpose() * (fm.Q_diag.asDiagonal() * snaps.S1));
  MatX A2 = llt2.solve(basis.V2.transpose() * (fm.W * snaps.S2));
  return {A1, A2};
}

}  // namespace

DeimOperators train_deim_operators(const FemModel& fm, const PhysicsConfig& cfg,
                                   const ReductionBasis& basis, const SnapshotSet& snaps,
                                   int n_c, bool naive_beta) {
  const auto [A1, A2] = restrict_snapshots(fm, basis, snaps);
  const BilinearForm form = full_form(fm);

  MatX Ga(fm.N2, snaps.count());
  MatX Gg(fm.N2, snaps.count());
  MatX Gb = naive_beta ? MatX(fm.N2, snaps.count()) : MatX(fm.N1, snaps.count());

  for (int l = 0; l < snaps.count(); ++l) {
    const VecX rho = basis.V1 * A1.col(l);
    const VecX m_nodal = fm.E_map * (basis.V2 * A2.col(l));
    const NodalNonlinears nl = assemble_nonlinear_nodal(fm, cfg, rho, m_nodal, form);
    Ga.col(l) = fm.E_map.transpose() * nl.f_alpha;
    Gg.col(l) = fm.E_map.transpose() * nl.f_gamma;
    if (naive_beta) {
      Gb.col(l) = fm.E_map.transpose() * nl.f_beta;
    } else {
      // Cellwise mean of the integrand: f^beta = J^T beta-tilde exactly.
      VecX bt(fm.N1);
      for (int i = 0; i < fm.N1; ++i) {
        const CellEval ce = eval_cell_nonlinear(fm, cfg, i, 1.0, rho[i],
                                                m_nodal[fm.cell_dof_left[i]],
                                                m_nodal[fm.cell_dof_right[i]], false);
        bt[i] = ce.fb[1];
      }
      Gb.col(l) = bt;
    }
  }

  DeimOperators ops;
  ops.naive_beta = naive_beta;
  ops.alpha = deim_train(Ga, n_c, "alpha");
  ops.beta = deim_train(Gb, n_c, naive_beta ? "beta" : "beta-tilde");
  ops.gamma = deim_train(Gg, n_c, "gamma");
  return ops;
}

std::unique_ptr<ReducedSystem> project_rom_baseline(const FemModel& fm,
                                                    const PhysicsConfig& cfg,
                                                    const BoundarySchedule& bc,
                                                    const ReductionBasis& pair) {
  return std::make_unique<ReducedSystem>(fm, cfg, bc, pair.V1, pair.V2, full_form(fm));
}

namespace {

/// Reduced system with DEIM-approximated nonlinear terms. Only the cells
/// feeding the selected rows are evaluated.
class DeimSystem final : public ReducedSystem {
 public:
  DeimSystem(const FemModel& fm, const PhysicsConfig& cfg, const BoundarySchedule& bc,
             const ReductionBasis& basis, const DeimOperators& ops)
      : ReducedSystem(fm, cfg, bc, basis.V1, basis.V2, full_form(fm)), ops_(ops) {
    M_alpha_ = V2_.transpose() * ops_.alpha.interp;
    M_gamma_ = V2_.transpose() * ops_.gamma.interp;
    if (ops_.naive_beta)
      M_beta_ = V2_.transpose() * ops_.beta.interp;
    else
      M_beta_ = (MatX(fm.J) * V2_).transpose() * ops_.beta.interp;

    // Reverse map: nodal dof -> cells and sides touching it.
    std::vector<std::vector<std::pair<int, int>>> dof_cells(fm.num_nodal);
    for (int i = 0; i < fm.N1; ++i) {
      dof_cells[fm.cell_dof_left[i]].push_back({i, 0});
      dof_cells[fm.cell_dof_right[i]].push_back({i, 1});
    }
    auto row_deps = [&](int n) {
      std::vector<Dep> deps;
      for (SpMat::InnerIterator it(fm.E_map, n); it; ++it)
        for (auto [cell, side] : dof_cells[static_cast<int>(it.row())])
          deps.push_back({cell, side, it.value()});
      return deps;
    };
    for (int n : ops_.alpha.indices) alpha_deps_.push_back(row_deps(n));
    for (int n : ops_.gamma.indices) gamma_deps_.push_back(row_deps(n));
    if (ops_.naive_beta)
      for (int n : ops_.beta.indices) beta_deps_.push_back(row_deps(n));

    for (const auto& deps : alpha_deps_)
      for (const auto& d : deps) needed_cells_.push_back(d.cell);
    for (const auto& deps : gamma_deps_)
      for (const auto& d : deps) needed_cells_.push_back(d.cell);
    for (const auto& deps : beta_deps_)
      for (const auto& d : deps) needed_cells_.push_back(d.cell);
    if (!ops_.naive_beta)
      for (int i : ops_.beta.indices) needed_cells_.push_back(i);
    std::sort(needed_cells_.begin(), needed_cells_.end());
    needed_cells_.erase(std::unique(needed_cells_.begin(), needed_cells_.end()),
                        needed_cells_.end());
  }

 protected:
  ReducedNonlinears eval_nonlinears(const VecX& a1r, const VecX& a2r,
                                    bool want_jacobians) const override {
    const auto& fm = *fm_;
    const int m = n1(), n = n2();

    // Evaluate each needed cell once. Mean-integrand rows use unit weight.
    std::map<int, CellEval> weighted, unit;
    for (int i : needed_cells_) {
      const double rho = V1_.row(i).dot(a1r);
      const double ml = P2nodal_.row(fm.cell_dof_left[i]).dot(a2r);
      const double mr = P2nodal_.row(fm.cell_dof_right[i]).dot(a2r);
      weighted.emplace(i, eval_cell_nonlinear(fm, *cfg_, i, fm.cell_area[i], rho, ml, mr,
                                              want_jacobians));
      if (!ops_.naive_beta)
        unit.emplace(i, eval_cell_nonlinear(fm, *cfg_, i, 1.0, rho, ml, mr, want_jacobians));
    }

    struct RowSet {
      VecX values;
      MatX d1, d2;
    };
    auto gather = [&](const std::vector<std::vector<Dep>>& deps_list,
                      auto value_of, auto drho_of, auto dm_of) {
      RowSet rs;
      const int rows = static_cast<int>(deps_list.size());
      rs.values = VecX::Zero(rows);
      if (want_jacobians) {
        rs.d1 = MatX::Zero(rows, m);
        rs.d2 = MatX::Zero(rows, n);
      }
      for (int r = 0; r < rows; ++r) {
        for (const Dep& d : deps_list[r]) {
          const CellEval& ce = weighted.at(d.cell);
          rs.values[r] += d.coeff * value_of(ce, d.side);
          if (want_jacobians) {
            rs.d1.row(r) += d.coeff * drho_of(ce, d.side) * V1_.row(d.cell);
            rs.d2.row(r) +=
                d.coeff * (dm_of(ce, d.side, 0) * P2nodal_.row(fm.cell_dof_left[d.cell]) +
                           dm_of(ce, d.side, 1) * P2nodal_.row(fm.cell_dof_right[d.cell]));
          }
        }
      }
      return rs;
    };

    RowSet ra = gather(
        alpha_deps_, [](const CellEval& c, int s) { return c.fa[s]; },
        [](const CellEval& c, int s) { return c.jac.dalpha_drho[s]; },
        [](const CellEval& c, int s, int q) { return c.jac.dalpha_dm[s][q]; });
    RowSet rg = gather(
        gamma_deps_, [](const CellEval& c, int s) { return c.fg[s]; },
        [](const CellEval& c, int s) { return c.jac.dgamma_drho[s]; },
        [](const CellEval& c, int s, int q) { return c.jac.dgamma_dm[s][q]; });

    RowSet rb;
    if (ops_.naive_beta) {
      rb = gather(
          beta_deps_, [](const CellEval& c, int s) { return c.fb[s]; },
          [](const CellEval& c, int s) { return c.jac.dbeta_drho[s]; },
          [](const CellEval& c, int s, int q) { return c.jac.dbeta_dm[s][q]; });
    } else {
      const int rows = static_cast<int>(ops_.beta.indices.size());
      rb.values = VecX::Zero(rows);
      if (want_jacobians) {
        rb.d1 = MatX::Zero(rows, m);
        rb.d2 = MatX::Zero(rows, n);
      }
      for (int r = 0; r < rows; ++r) {
        const int i = ops_.beta.indices[r];
        const CellEval& ce = unit.at(i);
        rb.values[r] = ce.fb[1];
        if (want_jacobians) {
          rb.d1.row(r) = ce.jac.dbeta_drho[1] * V1_.row(i);
          rb.d2.row(r) = ce.jac.dbeta_dm[1][0] * P2nodal_.row(fm.cell_dof_left[i]) +
                         ce.jac.dbeta_dm[1][1] * P2nodal_.row(fm.cell_dof_right[i]);
        }
      }
    }

    ReducedNonlinears out;
    out.fa = M_alpha_ * ra.values;
    out.fb = M_beta_ * rb.values;
    out.fg = M_gamma_ * rg.values;
    if (want_jacobians) {
      out.dfa_d1 = M_alpha_ * ra.d1;
      out.dfa_d2 = M_alpha_ * ra.d2;
      out.dfb_d1 = M_beta_ * rb.d1;
      out.dfb_d2 = M_beta_ * rb.d2;
      out.dfg_d1 = M_gamma_ * rg.d1;
      out.dfg_d2 = M_gamma_ * rg.d2;
    }
    return out;
  }

 private:
  struct Dep {
    int cell;
    int side;
    double coeff;
  };

  DeimOperators ops_;
  MatX M_alpha_, M_beta_, M_gamma_;
  std::vector<std::vector<Dep>> alpha_deps_, beta_deps_, gamma_deps_;
  std::vector<int> needed_cells_;
};

}  // namespace

std::unique_ptr<ReducedSystem> project_deim(const FemModel& fm, const PhysicsConfig& cfg,
                                            const BoundarySchedule& bc,
                                            const ReductionBasis& basis,
                                            const DeimOperators& ops) {
  return std::make_unique<DeimSystem>(fm, cfg, bc, basis, ops);
}

namespace {

nlohmann::json deim_op_json(const DeimOperator& op, const std::string& csv_path) {
  return nlohmann::json{
      {"target", op.target}, {"indices", op.indices}, {"modes", csv_path}};
}

DeimOperator deim_op_from_json(const nlohmann::json& j) {
  DeimOperator op;
  op.target = j.at("target").get<std::string>();
  op.indices = j.at("indices").get<std::vector<int>>();
  op.U = read_matrix_csv(j.at("modes").get<std::string>());
  const int n_c = static_cast<int>(op.indices.size());
  if (op.U.cols() != n_c) throw ParseError("DEIM mode count disagrees with indices");
  MatX PU(n_c, n_c);
  for (int r = 0; r < n_c; ++r)
    for (int c = 0; c < n_c; ++c) PU(r, c) = op.U(op.indices[r], c);
  op.interp = op.U * PU.partialPivLu().inverse();
  return op;
}

}  // namespace

void save_deim_operators(const DeimOperators& ops, const std::string& prefix) {
  write_matrix_csv(prefix + "_alpha_U.csv", ops.alpha.U);
  write_matrix_csv(prefix + "_beta_U.csv", ops.beta.U);
  write_matrix_csv(prefix + "_gamma_U.csv", ops.gamma.U);
  nlohmann::json j;
  j["kind"] = "deim-baseline";
  j["naive_beta"] = ops.naive_beta;
  j["alpha"] = deim_op_json(ops.alpha, prefix + "_alpha_U.csv");
  j["beta"] = deim_op_json(ops.beta, prefix + "_beta_U.csv");
  j["gamma"] = deim_op_json(ops.gamma, prefix + "_gamma_U.csv");
  std::ofstream out(prefix + ".json");
  if (!out) throw ParseError("cannot write DEIM header: " + prefix + ".json");
  out << j.dump(2) << "\n";
}

DeimOperators load_deim_operators(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw ParseError("cannot open DEIM header: " + prefix + ".json");
  nlohmann::json j;
  in >> j;
  DeimOperators ops;
  ops.naive_beta = j.value("naive_beta", false);
  ops.alpha = deim_op_from_json(j.at("alpha"));
  ops.beta = deim_op_from_json(j.at("beta"));
  ops.gamma = deim_op_from_json(j.at("gamma"));
  return ops;
}

}  // namespace flownet
