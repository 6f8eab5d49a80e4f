#include <CLI11.hpp>

#include "flownet/baselines.hpp"
#include "flownet/benchmarks.hpp"
#include "flownet/error_metric.hpp"
#include "flownet/integrator.hpp"
#include "flownet/io_util.hpp"
#include "flownet/pod.hpp"
#include "flownet/quadrature_training.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

using namespace flownet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// trajectory files

void write_trajectory_csv(const std::string& path, const FemModel& fm,
                          const LiftedTrajectory& traj, const std::vector<VecX>& lambdas,
                          int stride) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot write " + path);
  std::fprintf(f, "time");
  for (int i = 0; i < fm.N1; ++i) std::fprintf(f, ",rho_c%d", i);
  for (int d = 0; d < fm.num_nodal; ++d) std::fprintf(f, ",m_d%d", d);
  const int nlam = lambdas.empty() ? 0 : static_cast<int>(lambdas.front().size());
  for (int k = 0; k < nlam; ++k) std::fprintf(f, ",lambda_%d", k);
  std::fprintf(f, "\n");
  for (int s = 0; s < traj.num_states(); s += stride) {
    std::fprintf(f, "%.17g", traj.times[s]);
    for (int i = 0; i < fm.N1; ++i) std::fprintf(f, ",%.17g", traj.a1[s][i]);
    const VecX nodal = fm.nodal_values(traj.a2[s]);
    for (int d = 0; d < fm.num_nodal; ++d) std::fprintf(f, ",%.17g", nodal[d]);
    for (int k = 0; k < nlam; ++k) std::fprintf(f, ",%.17g", lambdas[s][k]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

void write_monitors_csv(const std::string& path, const Trajectory& traj) {
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < traj.num_states(); ++k)
    rows.push_back({traj.times[k], traj.monitors.hamiltonian[k],
                    traj.monitors.boundary_power[k], traj.monitors.dissipation[k],
                    traj.monitors.mass_residual[k], traj.monitors.min_density[k]});
  write_table_csv(path, {"time", "H", "boundary_power", "dissipation", "mass_residual",
                         "min_density"},
                  rows);
}

LiftedTrajectory read_trajectory_csv(const std::string& path, const FemModel& fm) {
  const CsvTable t = read_table_csv(path);
  const size_t expected = 1 + static_cast<size_t>(fm.N1) + static_cast<size_t>(fm.num_nodal);
  if (t.header.size() < expected)
    throw ParseError("trajectory file has too few columns for this mesh: " + path);
  LiftedTrajectory traj;
  for (const auto& row : t.rows) {
    traj.times.push_back(row[0]);
    VecX a1(fm.N1);
    for (int i = 0; i < fm.N1; ++i) a1[i] = row[1 + i];
    VecX nodal(fm.num_nodal);
    for (int d = 0; d < fm.num_nodal; ++d) nodal[d] = row[1 + fm.N1 + d];
    traj.a1.push_back(std::move(a1));
    traj.a2.push_back(fm.coords_from_nodal(nodal));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// model construction

struct LoadedCase {
  Network net;
  Scenario sc;
  FemModel fm;
  BoundarySchedule bc;

  LoadedCase(const std::string& net_path, const std::string& sc_path, double dx)
      : net(load_network(net_path)),
        sc(load_scenario(sc_path)),
        fm(assemble_operators(net, build_mesh(net, dx))),
        bc(sc, net) {}
};

std::unique_ptr<System> make_model(const LoadedCase& c, const std::string& model,
                                   const std::string& basis_prefix,
                                   const std::string& rule_path) {
  if (model == "fom") return std::make_unique<FomSystem>(c.fm, c.sc.physics, c.bc);
  if (basis_prefix.empty()) throw ValidationError("model '" + model + "' needs --basis");
  ReductionBasis basis = load_basis(basis_prefix);
  if (basis.V1.rows() != c.fm.N1 || basis.V2.rows() != c.fm.N2)
    throw ValidationError("basis dimensions do not match the mesh (check --dx)");
  if (model == "rom") return project_rom(c.fm, c.sc.physics, c.bc, basis);
  if (model == "blockpod") return project_rom_baseline(c.fm, c.sc.physics, c.bc, basis);
  if (model == "crom") {
    if (rule_path.empty()) throw ValidationError("model 'crom' needs --rule");
    return project_crom(c.fm, c.sc.physics, c.bc, basis, load_rule(rule_path));
  }
  if (model == "deim") {
    if (rule_path.empty()) throw ValidationError("model 'deim' needs --rule (DEIM prefix)");
    return project_deim(c.fm, c.sc.physics, c.bc, basis, load_deim_operators(rule_path));
  }
  throw ValidationError("unknown model: " + model);
}

StateVec initial_state(const LoadedCase& c, const System& sys,
                       const StateVec* fom_steady = nullptr) {
  if (c.sc.uniform_initial) {
    return sys.restrict_full(VecX::Constant(c.fm.N1, c.sc.uniform_initial->rho),
                             VecX::Constant(c.fm.N2, c.sc.uniform_initial->m),
                             VecX::Zero(sys.num_multipliers()));
  }
  // Steady initial data: solve on the FOM and restrict, so that every
  // model level starts from the projection of the same state.
  if (fom_steady) return sys.restrict_full(fom_steady->a1, fom_steady->a2, fom_steady->lambda);
  FomSystem fom(c.fm, c.sc.physics, c.bc);
  StateVec steady = solve_steady(fom, 0.0);
  return sys.restrict_full(steady.a1, steady.a2, steady.lambda);
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_generate(const std::string& name, const std::string& out, bool paper_scale,
                 double lambda) {
  fs::create_directories(out);
  if (name == "diamond") {
    write_file(out + "/diamond_network.json", network_to_json(make_diamond_network()));
    write_file(out + "/diamond_scenario.json", diamond_scenario_json(paper_scale, lambda));
    std::cout << "wrote diamond_network.json, diamond_scenario.json\n";
    return 0;
  }
  if (name == "large38") {
    write_file(out + "/large38_network.json", network_to_json(make_large38_network()));
    write_file(out + "/large38_scenario_A.json", large38_scenario_json('A', paper_scale));
    write_file(out + "/large38_scenario_B.json", large38_scenario_json('B', paper_scale));
    std::cout << "wrote large38_network.json, large38_scenario_{A,B}.json\n";
    return 0;
  }
  throw ValidationError("unknown benchmark name: " + name);
}

int cmd_simulate(const std::string& net_path, const std::string& sc_path, double dx,
                 const std::string& model, const std::string& basis_prefix,
                 const std::string& rule_path, const std::string& out, int stride,
                 bool dump) {
  fs::create_directories(out);
  LoadedCase c(net_path, sc_path, dx);
  if (dump) dump_matrices(c.fm, out + "/matrices");

  auto sys = make_model(c, model, basis_prefix, rule_path);
  const auto t0 = std::chrono::steady_clock::now();
  Trajectory traj = simulate(*sys, c.sc, initial_state(c, *sys));
  const double wall = seconds_since(t0);

  std::vector<VecX> lambdas;
  for (const auto& s : traj.states) lambdas.push_back(s.lambda);
  write_trajectory_csv(out + "/trajectory.csv", c.fm, lift_trajectory(*sys, traj), lambdas,
                       stride);
  write_monitors_csv(out + "/monitors.csv", traj);

  json summary;
  summary["model"] = model;
  summary["breakdown"] = traj.breakdown;
  if (traj.breakdown) summary["breakdown_time"] = traj.breakdown_time;
  summary["steps"] = traj.num_states() - 1;
  summary["wall_seconds"] = wall;
  const PositivityReport pos = positivity_monitor(*sys, traj);
  summary["min_density"] = pos.min_density;
  const VecX ebr = energy_balance_residual(traj);
  summary["max_energy_residual"] = ebr.size() ? ebr.cwiseAbs().maxCoeff() : 0.0;
  write_file(out + "/run_summary.json", summary.dump(2) + "\n");

  std::cout << (traj.breakdown ? "breakdown at t = " + std::to_string(traj.breakdown_time)
                               : "completed")
            << ", wall " << wall << " s\n";
  return 0;
}

int cmd_train(const std::string& net_path, const std::string& sc_path, double dx, int L,
              int n1, int nc, double ctilde, const std::string& baseline, bool naive_beta,
              bool normalize_rows, const std::string& out) {
  fs::create_directories(out);
  LoadedCase c(net_path, sc_path, dx);
  FomSystem fom(c.fm, c.sc.physics, c.bc);

  const auto t0 = std::chrono::steady_clock::now();
  Trajectory traj = simulate(fom, c.sc);
  if (traj.breakdown)
    throw SimulationBreakdown(traj.breakdown_time, 0.0);
  SnapshotSet snaps = collect_snapshots(lift_trajectory(fom, traj), L);
  const uint64_t hash = matrix_hash(snaps.S1, snaps.S2);

  ReductionBasis basis = compatible_pod(c.fm, snaps, n1);
  save_basis(basis, out + "/basis", hash);
  const CompatibilityReport rep = check_compatibility(c.fm, basis);
  std::cout << "basis n1=" << n1 << " n2=" << basis.V2.cols()
            << " compatibility defect " << rep.worst() << "\n";

  if (nc > 0) {
    NonlinearSnapshotData data = build_nonlinear_snapshots(c.fm, c.sc.physics, snaps, basis);
    GreedyReport grep;
    QuadratureRule rule =
        greedy_quadrature(data, nc, ctilde, c.fm, basis, &grep, normalize_rows);
    save_rule(rule, out + "/rule.json");
    std::vector<std::vector<double>> hist;
    for (size_t k = 0; k < grep.objective_history.size(); ++k)
      hist.push_back({static_cast<double>(k + 1), grep.objective_history[k]});
    write_table_csv(out + "/training_history.csv", {"round", "objective"}, hist);
    std::cout << "rule |I|=" << rule.cells.size() << " cond(Mc)=" << rule.cond_Mc << "\n";
  }

  if (baseline == "blockpod") {
    int total = 2 * n1 + c.fm.kernel_dim();
    if (total % 2) ++total;
    ReductionBasis bp = block_pod(c.fm, snaps, total);
    save_basis(bp, out + "/blockpod", hash);
    std::cout << "block POD basis with " << total << " columns\n";
  } else if (baseline == "deim") {
    if (nc <= 0) throw ValidationError("--baseline deim needs --nc");
    DeimOperators ops = train_deim_operators(c.fm, c.sc.physics, basis, snaps, nc, naive_beta);
    save_deim_operators(ops, out + "/deim");
    std::cout << "DEIM operators with n_c=" << nc << "\n";
  } else if (!baseline.empty()) {
    throw ValidationError("unknown baseline: " + baseline);
  }

  std::cout << "training wall " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_evaluate(const std::string& net_path, double dx, const std::string& ref_dir,
                 const std::string& approx_dir, const std::string& out_file) {
  Network net = load_network(net_path);
  FemModel fm = assemble_operators(net, build_mesh(net, dx));
  LiftedTrajectory ref = read_trajectory_csv(ref_dir + "/trajectory.csv", fm);
  LiftedTrajectory approx = read_trajectory_csv(approx_dir + "/trajectory.csv", fm);
  const double et = error_metric_ET(fm, ref, approx);

  const CsvTable mon = read_table_csv(approx_dir + "/monitors.csv");
  const int c_mass = mon.column("mass_residual");
  const int c_min = mon.column("min_density");
  const int c_diss = mon.column("dissipation");
  double max_mass = 0.0, min_density = std::numeric_limits<double>::infinity(),
         min_diss = std::numeric_limits<double>::infinity();
  for (const auto& row : mon.rows) {
    max_mass = std::max(max_mass, std::abs(row[c_mass]));
    min_density = std::min(min_density, row[c_min]);
    min_diss = std::min(min_diss, row[c_diss]);
  }

  write_table_csv(out_file, {"E_T", "max_mass_residual", "min_density", "min_dissipation"},
                  {{et, max_mass, min_density, min_diss}});
  std::cout << "E_T = " << et << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  std::string model;
  int n = 0;
  int nc = 0;
  double et = 0.0;
  double cond = 0.0;
  bool breakdown = false;
  double wall = 0.0;
};

class WorkerPool {
 public:
  explicit WorkerPool(int threads) : threads_(std::max(1, threads)) {}

  void add(std::function<void()> task) { tasks_.push_back(std::move(task)); }

  void run() {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks_.size()) return;
        tasks_[i]();
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads_; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    tasks_.clear();
  }

 private:
  int threads_;
  std::vector<std::function<void()>> tasks_;
};

int cmd_sweep(const std::string& campaign_path, const std::string& out, int threads) {
  std::ifstream in(campaign_path);
  if (!in) throw ParseError("cannot open campaign file: " + campaign_path);
  json cj;
  in >> cj;

  const std::string net_path = cj.at("network").get<std::string>();
  const std::string train_sc = cj.at("training_scenario").get<std::string>();
  const auto eval_paths = cj.at("evaluation_scenarios").get<std::vector<std::string>>();
  const auto n_list = cj.at("n_list").get<std::vector<int>>();
  const auto nc_list = cj.at("nc_list").get<std::vector<int>>();
  const double dx = cj.at("dx").get<double>();
  const int L = cj.value("snapshots", 100);
  const double ctilde = cj.value("C_tilde", 10.0);
  const bool baselines = cj.value("include_baselines", true);
  if (n_list.empty() || nc_list.empty())
    throw ValidationError("campaign sweep lists must be nonempty");

  fs::create_directories(out);
  LoadedCase training(net_path, train_sc, dx);
  FomSystem fom(training.fm, training.sc.physics, training.bc);

  std::cout << "training run on " << train_sc << "\n";
  Trajectory train_traj = simulate(fom, training.sc);
  if (train_traj.breakdown) throw SimulationBreakdown(train_traj.breakdown_time, 0.0);
  SnapshotSet snaps = collect_snapshots(lift_trajectory(fom, train_traj), L);
  const uint64_t hash = matrix_hash(snaps.S1, snaps.S2);

  const int kd = training.fm.kernel_dim();
  const int pf = training.bc.num_flow();

  struct TrainedSet {
    int n_target = 0;
    int n_actual = 0;
    ReductionBasis basis;
    ReductionBasis blockpod;
    std::vector<std::pair<int, QuadratureRule>> rules;       // per nc
    std::vector<std::pair<int, DeimOperators>> deim;         // per nc
  };
  std::vector<TrainedSet> trained;

  for (int n : n_list) {
    TrainedSet ts;
    ts.n_target = n;
    const int n1 = std::max(1, (n - kd - pf) / 2);
    ts.basis = compatible_pod(training.fm, snaps, n1);
    ts.n_actual = n1 + static_cast<int>(ts.basis.V2.cols()) + pf;
    save_basis(ts.basis, out + "/basis_n" + std::to_string(ts.n_actual), hash);

    NonlinearSnapshotData data =
        build_nonlinear_snapshots(training.fm, training.sc.physics, snaps, ts.basis);
    for (int nc : nc_list) {
      QuadratureRule rule =
          greedy_quadrature(data, nc, ctilde, training.fm, ts.basis, nullptr);
      save_rule(rule, out + "/rule_n" + std::to_string(ts.n_actual) + "_nc" +
                          std::to_string(nc) + ".json");
      ts.rules.push_back({nc, std::move(rule)});
    }
    if (baselines) {
      int total = 2 * n1 + kd;
      if (total % 2) ++total;
      ts.blockpod = block_pod(training.fm, snaps, total);
      for (int nc : nc_list) {
        try {
          ts.deim.push_back({nc, train_deim_operators(training.fm, training.sc.physics,
                                                      ts.basis, snaps, nc)});
        } catch (const ValidationError& e) {
          std::cout << "DEIM training skipped for n=" << ts.n_actual << " nc=" << nc
                    << ": " << e.what() << "\n";
        }
      }
    }
    trained.push_back(std::move(ts));
    std::cout << "trained bases and rules for n=" << trained.back().n_actual << "\n";
  }

  for (const std::string& eval_path : eval_paths) {
    LoadedCase c(net_path, eval_path, dx);
    std::cout << "evaluation scenario " << eval_path << "\n";

    const auto t0 = std::chrono::steady_clock::now();
    Trajectory ref_traj = simulate(FomSystem(c.fm, c.sc.physics, c.bc), c.sc);
    const double fom_wall = seconds_since(t0);
    if (ref_traj.breakdown)
      throw SimulationBreakdown(ref_traj.breakdown_time, 0.0);
    FomSystem ref_sys(c.fm, c.sc.physics, c.bc);
    const LiftedTrajectory ref = lift_trajectory(ref_sys, ref_traj);
    // Every model level starts from the same full-order initial state.
    std::optional<StateVec> fom_steady;
    if (!c.sc.uniform_initial) fom_steady = solve_steady(ref_sys, 0.0);

    std::vector<SweepRow> rows;
    std::mutex rows_mutex;
    rows.push_back({"fom", c.fm.N1 + c.fm.N2 + pf, 0, 0.0, 0.0, false, fom_wall});

    WorkerPool pool(threads);
    auto schedule = [&](const std::string& model, int n, int nc, double cond,
                        std::function<std::unique_ptr<System>()> factory) {
      pool.add([&, model, n, nc, cond, factory]() {
        SweepRow row{model, n, nc, 0.0, cond, false, 0.0};
        try {
          auto sys = factory();
          const auto tstart = std::chrono::steady_clock::now();
          Trajectory traj = simulate(*sys, c.sc,
                                     initial_state(c, *sys, fom_steady ? &*fom_steady : nullptr));
          row.wall = seconds_since(tstart);
          row.breakdown = traj.breakdown;
          row.et = error_metric_ET(c.fm, ref, lift_trajectory(*sys, traj));
        } catch (const std::exception&) {
          row.breakdown = true;
          row.et = std::numeric_limits<double>::quiet_NaN();
        }
        std::lock_guard<std::mutex> lock(rows_mutex);
        rows.push_back(row);
      });
    };

    for (const TrainedSet& ts : trained) {
      schedule("rom", ts.n_actual, 0, 0.0, [&]() {
        return project_rom(c.fm, c.sc.physics, c.bc, ts.basis);
      });
      for (const auto& [nc, rule] : ts.rules) {
        schedule("crom", ts.n_actual, nc, rule.cond_Mc, [&, &rule = rule]() {
          return project_crom(c.fm, c.sc.physics, c.bc, ts.basis, rule);
        });
      }
      if (baselines) {
        const int bp_n = static_cast<int>(ts.blockpod.V1.cols() + ts.blockpod.V2.cols()) + pf;
        schedule("blockpod", bp_n, 0, 0.0, [&]() {
          return project_rom_baseline(c.fm, c.sc.physics, c.bc, ts.blockpod);
        });
        for (const auto& [nc, ops] : ts.deim) {
          schedule("deim", ts.n_actual, nc, 0.0, [&, &ops = ops]() {
            return project_deim(c.fm, c.sc.physics, c.bc, ts.basis, ops);
          });
        }
      }
    }
    pool.run();

    // Projection errors alongside the reduction errors.
    for (const TrainedSet& ts : trained) {
      const auto tp = std::chrono::steady_clock::now();
      const double ep = error_metric_ET(
          c.fm, ref, project_trajectory(c.fm, ts.basis.V1, ts.basis.V2, ref));
      rows.push_back({"rom-proj", ts.n_actual, 0, ep, 0.0, false, seconds_since(tp)});
      if (baselines) {
        const auto tb = std::chrono::steady_clock::now();
        const double eb = error_metric_ET(
            c.fm, ref, project_trajectory(c.fm, ts.blockpod.V1, ts.blockpod.V2, ref));
        const int bp_n =
            static_cast<int>(ts.blockpod.V1.cols() + ts.blockpod.V2.cols()) + pf;
        rows.push_back({"blockpod-proj", bp_n, 0, eb, 0.0, false, seconds_since(tb)});
      }
    }

    // Deterministic order: by model name, then n, then nc.
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
      return std::tie(a.model, a.n, a.nc) < std::tie(b.model, b.n, b.nc);
    });
    std::vector<std::vector<double>> table;
    std::vector<std::string> names;
    for (const auto& r : rows) {
      names.push_back(r.model);
      table.push_back({static_cast<double>(r.n), static_cast<double>(r.nc), r.et, r.cond,
                       r.breakdown ? 1.0 : 0.0, r.wall});
    }
    const std::string stem = fs::path(eval_path).stem().string();
    const std::string csv_path = out + "/sweep_" + stem + ".csv";
    std::FILE* f = std::fopen(csv_path.c_str(), "w");
    if (!f) throw ParseError("cannot write " + csv_path);
    std::fprintf(f, "model,n,n_c,E_T,cond_Mc,breakdown,wall_seconds\n");
    for (size_t i = 0; i < table.size(); ++i)
      std::fprintf(f, "%s,%d,%d,%.17g,%.17g,%d,%.6f\n", names[i].c_str(),
                   static_cast<int>(table[i][0]), static_cast<int>(table[i][1]),
                   table[i][2], table[i][3], static_cast<int>(table[i][4]), table[i][5]);
    std::fclose(f);
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flownet: structure-preserving reduced models for gas pipe networks"};
  app.require_subcommand(1);

  int seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "reserved for randomized experiments");
  app.add_option("--threads", threads, "worker pool size for sweeps");

  // generate
  auto* gen = app.add_subcommand("generate", "emit a built-in network and scenario files");
  std::string gen_name, gen_out = ".";
  bool gen_paper = false;
  double gen_lambda = 0.01;
  gen->add_option("--name", gen_name, "diamond | large38")->required();
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--paper-scale", gen_paper, "full-size time discretization");
  gen->add_option("--lambda", gen_lambda, "diamond friction factor");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one model on a scenario");
  std::string sim_net, sim_sc, sim_model = "fom", sim_basis, sim_rule, sim_out = "run";
  double sim_dx = 2000.0;
  int sim_stride = 1;
  bool sim_dump = false;
  bool sim_paper = false;
  sim->add_option("--network", sim_net)->required();
  sim->add_option("--scenario", sim_sc)->required();
  auto* sim_dx_opt = sim->add_option("--dx", sim_dx, "maximal cell size [m]");
  sim->add_flag("--paper-scale", sim_paper, "default to the 200 m mesh");
  sim->add_option("--model", sim_model, "fom | rom | crom | deim | blockpod");
  sim->add_option("--basis", sim_basis, "basis file prefix (reduced models)");
  sim->add_option("--rule", sim_rule, "rule file (crom) or DEIM prefix (deim)");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--csv-stride", sim_stride, "write every k-th state");
  sim->add_flag("--dump-matrices", sim_dump, "export Q/W/J/B in matrix-market format");

  // train
  auto* tr = app.add_subcommand("train", "train reduction bases and quadrature rules");
  std::string tr_net, tr_sc, tr_baseline, tr_out = "training";
  double tr_dx = 2000.0, tr_ctilde = 10.0;
  int tr_L = 100, tr_n1 = 5, tr_nc = 0;
  bool tr_naive = false;
  bool tr_paper = false;
  tr->add_option("--network", tr_net)->required();
  tr->add_option("--scenario", tr_sc)->required();
  auto* tr_dx_opt = tr->add_option("--dx", tr_dx);
  tr->add_flag("--paper-scale", tr_paper, "default to the 200 m mesh");
  tr->add_option("--snapshots", tr_L, "number of snapshots");
  tr->add_option("--n", tr_n1, "density modes n1");
  tr->add_option("--nc", tr_nc, "quadrature budget (0 = skip)");
  tr->add_option("--ctilde", tr_ctilde, "spectrum bound constant");
  tr->add_option("--baseline", tr_baseline, "blockpod | deim");
  tr->add_flag("--deim-naive-beta", tr_naive, "DEIM on f^beta directly");
  bool tr_normalize = false;
  tr->add_flag("--normalize-rows", tr_normalize, "rescale training rows to unit norm");
  tr->add_option("--out", tr_out);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "relative error between two runs");
  std::string ev_net, ev_ref, ev_approx, ev_out = "evaluation.csv";
  double ev_dx = 2000.0;
  ev->add_option("--network", ev_net)->required();
  ev->add_option("--dx", ev_dx);
  ev->add_option("--reference", ev_ref, "directory of the reference run")->required();
  ev->add_option("--approx", ev_approx, "directory of the approximate run")->required();
  ev->add_option("--out", ev_out, "output CSV");

  // sweep
  auto* sw = app.add_subcommand("sweep", "train and evaluate a campaign");
  std::string sw_campaign, sw_out = "sweep";
  sw->add_option("--campaign", sw_campaign, "campaign JSON")->required();
  sw->add_option("--out", sw_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_name, gen_out, gen_paper, gen_lambda);
    if (sim->parsed()) {
      if (sim_paper && sim_dx_opt->count() == 0) sim_dx = 200.0;
      return cmd_simulate(sim_net, sim_sc, sim_dx, sim_model, sim_basis, sim_rule, sim_out,
                          sim_stride, sim_dump);
    }
    if (tr->parsed()) {
      if (tr_paper && tr_dx_opt->count() == 0) tr_dx = 200.0;
      return cmd_train(tr_net, tr_sc, tr_dx, tr_L, tr_n1, tr_nc, tr_ctilde, tr_baseline,
                       tr_naive, tr_normalize, tr_out);
    }
    if (ev->parsed()) return cmd_evaluate(ev_net, ev_dx, ev_ref, ev_approx, ev_out);
    if (sw->parsed()) return cmd_sweep(sw_campaign, sw_out, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
