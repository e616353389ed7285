// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Pass the CLI binary path as argv[1] to include the subprocess
// determinism checks.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "btoep/block_operator.hpp"
#include "btoep/distributed.hpp"
#include "btoep/grid_planner.hpp"
#include "btoep/inverse.hpp"
#include "btoep/io.hpp"
#include "btoep/lti.hpp"
#include "btoep/rng.hpp"
#include "oracles.hpp"

using namespace btoep;
using namespace btoep::testing;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. FFT forward/adjoint matvecs match the direct O(steps^2/2) sum and the
//    elementwise backend to 1e-11 relative max-norm on >= 100 instances.
void criterion_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1001);
    const std::size_t step_choices[5] = {1, 2, 8, 64, 128};
    double worst = 0.0;
    int instances = 0;
    for (int round = 0; round < 21; ++round) {
        for (std::size_t steps : step_choices) {
            const std::size_t sensors = 1 + rng.integer(8);
            const std::size_t sources = 1 + rng.integer(8);
            CompactP2O op = random_operator(rng, sensors, sources, steps);
            SpectralP2O spectral = setup(op, {.keep_channel_layout = true});
            SpaceTimeVector m = random_vector(rng, sources, steps, Ordering::SOTI);
            SpaceTimeVector d = random_vector(rng, sensors, steps, Ordering::SOTI);

            const SpaceTimeVector fwd_oracle =
                tosi_to_soti(naive_apply_forward(op, soti_to_tosi(m)));
            worst = std::max(worst,
                             rel_max_diff(apply_forward(spectral, m).values, fwd_oracle.values));
            worst = std::max(
                worst, rel_max_diff(apply_forward_ewp(spectral, m).values, fwd_oracle.values));

            const SpaceTimeVector adj_oracle =
                tosi_to_soti(naive_apply_adjoint(op, soti_to_tosi(d)));
            worst = std::max(worst,
                             rel_max_diff(apply_adjoint(spectral, d).values, adj_oracle.values));
            worst = std::max(
                worst, rel_max_diff(apply_adjoint_ewp(spectral, d).values, adj_oracle.values));
            ++instances;
        }
    }
    const double elapsed = seconds_since(start);
    report(1, "oracle equivalence of fft/ewp/naive backends",
           instances >= 100 && worst < 1e-11 && elapsed < 60.0,
           std::to_string(instances) + " instances, max rel err " + fmt(worst) + ", " +
               fmt(elapsed) + " s");
}

// 2. <F m, d> = <m, F* d> to 1e-11 on 100 instances, adjoint served by the
//    same stored operator.
void criterion_adjoint_identity() {
    Rng rng(1002);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t sensors = 1 + rng.integer(8);
        const std::size_t sources = 1 + rng.integer(8);
        const std::size_t steps = 1 + rng.integer(64);
        const SpectralP2O spectral = setup(random_operator(rng, sensors, sources, steps));
        SpaceTimeVector m = random_vector(rng, sources, steps, Ordering::SOTI);
        SpaceTimeVector d = random_vector(rng, sensors, steps, Ordering::SOTI);
        const double lhs = dot(apply_forward(spectral, m).values, d.values);
        const double rhs = dot(m.values, apply_adjoint(spectral, d).values);
        worst = std::max(worst,
                         std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-30}));
    }
    report(2, "adjoint identity through the single stored operator", worst < 1e-11,
           "max rel err " + fmt(worst));
}

// 3. Time stepping equals the assembled-operator matvec to 1e-11 and the two
//    assembly routes agree to 1e-12 at N_u <= 200, steps <= 256.
void criterion_lti_consistency() {
    Rng rng(1003);
    double worst_sim = 0.0;
    double worst_routes = 0.0;

    LTISystemSpec fixture = make_advection_diffusion_fixture(
        {.state_dim = 200, .num_sources = 6, .num_sensors = 4, .num_steps = 256});
    CompactP2O assembled = assemble_compact_p2o(fixture);
    worst_routes = std::max(
        worst_routes,
        rel_max_diff(assembled.blocks, assemble_compact_p2o_adjoint_route(fixture).blocks));
    SpaceTimeVector m = random_vector(rng, 6, 256, Ordering::TOSI);
    worst_sim = std::max(worst_sim, rel_max_diff(simulate_forward(fixture, m).values,
                                                 naive_apply_forward(assembled, m).values));

    // A dense random stable system as a second fixture family.
    LTISystemSpec dense;
    dense.state_dim = 50;
    dense.num_sources = 5;
    dense.num_sensors = 3;
    dense.num_steps = 64;
    dense.state_update.resize(50 * 50);
    dense.input_map.resize(50 * 5);
    dense.observation_map.resize(3 * 50);
    for (double& v : dense.state_update) v = rng.uniform(-1.0, 1.0);
    for (double& v : dense.input_map) v = rng.uniform(-1.0, 1.0);
    for (double& v : dense.observation_map) v = rng.uniform(-1.0, 1.0);
    const double radius = dense.spectral_radius_estimate();
    for (double& v : dense.state_update) v *= 0.9 / radius;

    CompactP2O assembled2 = assemble_compact_p2o(dense);
    worst_routes = std::max(
        worst_routes,
        rel_max_diff(assembled2.blocks, assemble_compact_p2o_adjoint_route(dense).blocks));
    SpaceTimeVector m2 = random_vector(rng, 5, 64, Ordering::TOSI);
    worst_sim = std::max(worst_sim, rel_max_diff(simulate_forward(dense, m2).values,
                                                 naive_apply_forward(assembled2, m2).values));

    report(3, "lti simulation consistency and assembly-route agreement",
           worst_sim < 1e-11 && worst_routes < 1e-12,
           "sim err " + fmt(worst_sim) + ", route err " + fmt(worst_routes));
}

// 4. Distributed equals serial on the ragged 5x7 instance for the listed
//    grids, and byte counts equal the analytic formulas (closed form on even
//    partitions, per-shard sums on ragged ones).
void criterion_distributed_equivalence() {
    Rng rng(1004);
    const std::size_t steps = 32;
    double worst = 0.0;
    bool bytes_ok = true;

    CompactP2O ragged = random_operator(rng, 5, 7, steps);
    SpectralP2O serial_op = setup(ragged);
    SpaceTimeVector m = random_vector(rng, 7, steps, Ordering::SOTI);
    SpaceTimeVector d = random_vector(rng, 5, steps, Ordering::SOTI);
    const SpaceTimeVector serial_fwd = apply_forward(serial_op, m);
    const SpaceTimeVector serial_adj = apply_adjoint(serial_op, d);

    for (const GridShape grid : {GridShape{1, 1}, GridShape{1, 4}, GridShape{2, 2},
                                 GridShape{4, 1}, GridShape{2, 3}}) {
        Partition partition = partition_operator(ragged, grid);
        CommLog log;
        worst = std::max(worst, rel_max_diff(distributed_forward(partition, m, {}, &log).values,
                                             serial_fwd.values));
        worst = std::max(worst, rel_max_diff(distributed_adjoint(partition, d, {}, &log).values,
                                             serial_adj.values));

        // Per-shard generalization of the byte model, forward plus adjoint.
        std::uint64_t expected = 0;
        for (std::size_t j = 0; j < grid.cols; ++j)
            expected += static_cast<std::uint64_t>(8 * steps *
                                                   partition.shard(0, j).local_sources()) *
                        (grid.rows - 1);
        for (std::size_t i = 0; i < grid.rows; ++i)
            expected += static_cast<std::uint64_t>(8 * steps *
                                                   partition.shard(i, 0).local_sensors()) *
                        (grid.cols - 1);
        for (std::size_t i = 0; i < grid.rows; ++i)
            expected += static_cast<std::uint64_t>(8 * steps *
                                                   partition.shard(i, 0).local_sensors()) *
                        (grid.cols - 1);
        for (std::size_t j = 0; j < grid.cols; ++j)
            expected += static_cast<std::uint64_t>(8 * steps *
                                                   partition.shard(0, j).local_sources()) *
                        (grid.rows - 1);
        bytes_ok = bytes_ok && log.total_bytes() == expected;
    }

    // Even partitions: the closed Table-style formulas, exact.
    CompactP2O even = random_operator(rng, 4, 8, steps);
    SpaceTimeVector me = random_vector(rng, 8, steps, Ordering::SOTI);
    for (const GridShape grid :
         {GridShape{1, 4}, GridShape{2, 2}, GridShape{4, 1}, GridShape{2, 4}}) {
        Partition partition = partition_operator(even, grid);
        CommLog log;
        distributed_forward(partition, me, {}, &log);
        const std::uint64_t local_src = 8 / grid.cols;
        const std::uint64_t local_sen = 4 / grid.rows;
        const std::uint64_t expected =
            grid.cols * (grid.rows - 1) * 8 * steps * local_src +
            grid.rows * (grid.cols - 1) * 8 * steps * local_sen;
        bytes_ok = bytes_ok && log.total_bytes() == expected;
    }

    report(4, "distributed equivalence and communication byte accounting",
           worst < 1e-11 && bytes_ok,
           "max rel err " + fmt(worst) + ", bytes " + (bytes_ok ? "exact" : "MISMATCH"));
}

// 5. Planner: exact integer minimization for every p <= 1024 at k=1, and the
//    80-worker hardware-aware selections.
void criterion_grid_planner() {
    const auto start = std::chrono::steady_clock::now();
    bool brute_ok = true;
    for (std::size_t p = 1; p <= 1024 && brute_ok; ++p) {
        for (int l = -6; l <= 0; ++l) {
            const GridShape chosen = select_grid(p, static_cast<double>(l), 1);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 1; r <= p; ++r) {
                if (p % r != 0) continue;
                best =
                    std::min(best, modified_cost(static_cast<double>(r), p, static_cast<double>(l)));
            }
            const double cost =
                modified_cost(static_cast<double>(chosen.rows), p, static_cast<double>(l));
            if (!(cost <= best * (1.0 + 1e-9) + 1e-18)) {
                brute_ok = false;
                break;
            }
        }
    }
    const bool fig_ok = select_grid(80, -4.0, 4).rows == 1 && select_grid(80, -3.0, 4).rows == 1 &&
                        select_grid(80, -2.0, 4).rows == 4;
    const double elapsed = seconds_since(start);
    report(5, "grid planner matches brute force and the 80-worker minima", brute_ok && fig_ok,
           std::string("brute ") + (brute_ok ? "ok" : "MISMATCH") + ", rows(l=-4,-3,-2)=(" +
               std::to_string(select_grid(80, -4.0, 4).rows) + "," +
               std::to_string(select_grid(80, -3.0, 4).rows) + "," +
               std::to_string(select_grid(80, -2.0, 4).rows) + "), " + fmt(elapsed) + " s");
}

// 6. Whole-inversion cost model: 9.72e15 per solve, 1.944e21 conventional,
//    2.57e18 fft-based, ratio above 750 (1% tolerance on the totals).
void criterion_cost_estimator() {
    const CostEstimate est = conventional_cost_estimate(1e9, 1e4, 100.0, 0.1);
    const bool ok = std::abs(est.per_solve_flops - 9.72e15) <= 0.01 * 9.72e15 &&
                    std::abs(est.conventional_total_flops - 1.944e21) <= 0.01 * 1.944e21 &&
                    std::abs(est.fft_total_flops - 2.57e18) <= 0.01 * 2.57e18 && est.ratio > 750.0;
    report(6, "cost estimator reproduces the reference flop figures", ok,
           "per-solve " + fmt(est.per_solve_flops) + ", conventional " +
               fmt(est.conventional_total_flops) + ", fft " + fmt(est.fft_total_flops) +
               ", ratio " + fmt(est.ratio));
}

// 7. Measured apply counters equal the analytic intensity exactly and sit
//    within 0.01 of 1/2 at 100 x 800.
void criterion_arithmetic_intensity() {
    Rng rng(1007);
    bool exact = true;
    const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {3, 5}, {8, 2}, {100, 800}};
    for (const auto& [sensors, sources] : shapes) {
        const std::size_t steps = 4;
        CompactP2O op = random_operator(rng, sensors, sources, steps);
        SpectralP2O spectral = setup(op);
        SpaceTimeVector m = random_vector(rng, sources, steps, Ordering::SOTI);
        PipelineCounters counters;
        apply_forward(spectral, m, &counters);
        const double analytic = apply_arithmetic_intensity(static_cast<double>(sensors),
                                                           static_cast<double>(sources));
        exact = exact && counters.apply_intensity() == analytic;
    }
    const double at_target = apply_arithmetic_intensity(100.0, 800.0);
    report(7, "apply arithmetic intensity counter", exact && std::abs(at_target - 0.5) < 0.01,
           "measured==analytic " + std::string(exact ? "exactly" : "MISMATCH") + ", value " +
               fmt(at_target));
}

// 8. Counted operations: the apply stage grows linearly in each spatial
//    dimension (ratio 2 within 5% across doublings) and the fft-versus-naive
//    counted-op ratio beats steps / (4 log2(2 steps)).
void criterion_complexity_scaling() {
    Rng rng(1008);
    bool linear_ok = true;
    const std::size_t steps_fixed = 64;
    auto apply_ops = [&](std::size_t sensors, std::size_t sources) {
        CompactP2O op = random_operator(rng, sensors, sources, steps_fixed);
        SpectralP2O spectral = setup(op);
        SpaceTimeVector m = random_vector(rng, sources, steps_fixed, Ordering::SOTI);
        PipelineCounters counters;
        apply_forward(spectral, m, &counters);
        return counters.apply.ops;
    };
    for (const std::size_t base : {2, 4}) {
        const double src_ratio = apply_ops(3, 2 * base) / apply_ops(3, base);
        const double sen_ratio = apply_ops(2 * base, 5) / apply_ops(base, 5);
        linear_ok = linear_ok && std::abs(src_ratio - 2.0) < 0.1 && std::abs(sen_ratio - 2.0) < 0.1;
    }

    bool ratio_ok = true;
    std::string ratios;
    for (const std::size_t steps : {64, 256, 1024}) {
        CompactP2O op = random_operator(rng, 3, 5, steps);
        SpectralP2O spectral = setup(op);
        SpaceTimeVector m = random_vector(rng, 5, steps, Ordering::SOTI);

        PipelineCounters fft_counters;
        apply_forward(spectral, m, &fft_counters);
        PipelineCounters naive_counters;
        naive_apply_forward(op, soti_to_tosi(m), &naive_counters);

        const double ratio = naive_counters.naive_ops / fft_counters.total_ops();
        const double bound = static_cast<double>(steps) /
                             (4.0 * std::log2(2.0 * static_cast<double>(steps)));
        ratio_ok = ratio_ok && ratio > bound;
        ratios += fmt(ratio) + ">" + fmt(bound) + " ";
    }
    report(8, "counted-operation scaling in space and time", linear_ok && ratio_ok,
           std::string("spatial doubling ") + (linear_ok ? "linear" : "NONLINEAR") + ", " + ratios);
}

// 9. CG with the fast Hessian action matches a dense factorization to 1e-8;
//    the finite-difference gradient at the solution is below 1e-5.
void criterion_inverse_solve() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1009);
    const std::size_t sensors = 3, sources = 4, steps = 32;  // 128 unknowns
    CompactP2O compact = random_operator(rng, sensors, sources, steps);
    SpectralP2O op = setup(compact);
    const Regularization reg{.kind = RegKind::ScaledIdentity, .alpha = 0.1};
    HessianOperator hessian{.op = &op, .reg = reg};

    SpaceTimeVector m_true = random_vector(rng, sources, steps, Ordering::SOTI);
    const SpaceTimeVector d_obs = apply_forward(op, m_true);
    const SpaceTimeVector rhs = apply_adjoint(op, d_obs);

    // Dense oracle in SOTI index order.
    const std::size_t n = sources * steps;
    const std::vector<double> tosi = dense_block_operator(compact);
    Eigen::MatrixXd F(sensors * steps, n);
    for (std::size_t bi = 0; bi < steps; ++bi)
        for (std::size_t i = 0; i < sensors; ++i)
            for (std::size_t bj = 0; bj < steps; ++bj)
                for (std::size_t j = 0; j < sources; ++j)
                    F(static_cast<Eigen::Index>(i * steps + bi),
                      static_cast<Eigen::Index>(j * steps + bj)) =
                        tosi[(bi * sensors + i) * n + (bj * sources + j)];
    const Eigen::MatrixXd H =
        F.transpose() * F + reg.alpha * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd rhs_vec =
        Eigen::Map<const Eigen::VectorXd>(rhs.values.data(), rhs.values.size());
    const Eigen::VectorXd direct = Eigen::LLT<Eigen::MatrixXd>(H).solve(rhs_vec);
    std::vector<double> direct_vec(direct.data(), direct.data() + direct.size());

    const CGResult result = cg_solve(hessian, rhs, 1e-13, 2000);
    const double solve_err = rel_max_diff(result.solution.values, direct_vec);

    const double j0 = objective_eval(op, result.solution, d_obs, reg);
    double worst_grad = 0.0;
    const double h = 1e-6;
    for (int dir = 0; dir < 5; ++dir) {
        SpaceTimeVector step_dir = random_vector(rng, sources, steps, Ordering::SOTI);
        double nrm = std::sqrt(dot(step_dir.values, step_dir.values));
        for (double& v : step_dir.values) v /= nrm;
        SpaceTimeVector plus = result.solution, minus = result.solution;
        for (std::size_t i = 0; i < n; ++i) {
            plus.values[i] += h * step_dir.values[i];
            minus.values[i] -= h * step_dir.values[i];
        }
        const double derivative =
            (objective_eval(op, plus, d_obs, reg) - objective_eval(op, minus, d_obs, reg)) /
            (2.0 * h);
        worst_grad = std::max(worst_grad, std::abs(derivative) / (1.0 + std::abs(j0)));
    }
    const double elapsed = seconds_since(start);
    report(9, "cg inverse solve against the dense factorization",
           result.converged && solve_err < 1e-8 && worst_grad <= 1e-5,
           "solution err " + fmt(solve_err) + ", fd gradient " + fmt(worst_grad) + ", " +
               std::to_string(result.iterations) + " iters, " + fmt(elapsed) + " s");
}

// 10. Fixed seed, fixed grid: repeated CLI runs produce bit-identical output
//     files.
void criterion_determinism(const char* cli_path) {
    if (!cli_path) {
        report(10, "subcommand determinism", false, "no CLI path supplied");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "btoep-acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::string spec_path = (dir / "fixture.json").string();
    {
        std::ofstream spec(spec_path);
        spec << R"({"state_dim": 32, "num_sources": 4, "num_sensors": 3, "num_steps": 16,)"
             << R"( "diffusion": 0.3, "advection": 0.2, "true_param_seed": 7,)"
             << R"( "noise_snr_db": 30.0})";
    }

    auto run = [&](const std::string& args) {
        const std::string cmd =
            std::string(cli_path) + " " + args + " > /dev/null 2> /dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    auto same_bytes = [&](const fs::path& a, const fs::path& b) {
        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        if (!fa || !fb) return false;
        const std::vector<char> ba{std::istreambuf_iterator<char>(fa), {}};
        const std::vector<char> bb{std::istreambuf_iterator<char>(fb), {}};
        return !ba.empty() && ba == bb;
    };

    bool ok = true;
    std::string detail;
    for (int run_id = 0; run_id < 2; ++run_id) {
        const std::string p = (dir / ("r" + std::to_string(run_id) + "_")).string();
        ok = ok && run("generate --spec " + spec_path + " --seed 11 --out " + p + "fix");
        ok = ok && run("setup --operator " + p + "fix.btop --out " + p + "hat.btop");
        ok = ok && run("matvec --operator " + p + "hat.btop --in " + p + "fix_m_true.btvc" +
                       " --grid 2x2 --out " + p + "d.btvc");
        ok = ok && run("matvec --operator " + p + "hat.btop --in " + p +
                       "fix_d_obs.btvc --adjoint --out " + p + "adj.btvc");
        ok = ok && run("solve --operator " + p + "hat.btop --data " + p +
                       "fix_d_obs.btvc --alpha 0.01 --tol 1e-10 --out " + p + "m.btvc");
        ok = ok && run("plan-grid -p 80 -l -2 -k 4 --curve " + p + "curve.csv");
    }
    if (!ok) {
        detail = "a subcommand exited nonzero";
    } else {
        const fs::path a = dir / "r0_", b = dir / "r1_";
        for (const char* name : {"fix.btop", "fix_m_true.btvc", "fix_d_obs.btvc", "hat.btop",
                                 "d.btvc", "adj.btvc", "m.btvc", "curve.csv"}) {
            if (!same_bytes(dir / ("r0_" + std::string(name)), dir / ("r1_" + std::string(name)))) {
                ok = false;
                detail = std::string(name) + " differs between runs";
                break;
            }
        }
        if (ok) detail = "8 output files bit-identical across runs";
    }
    report(10, "subcommand determinism under a fixed seed", ok, detail);
    fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
    const char* cli_path = argc > 1 ? argv[1] : nullptr;
    std::cout << "acceptance suite\n";
    criterion_oracle_equivalence();
    criterion_adjoint_identity();
    criterion_lti_consistency();
    criterion_distributed_equivalence();
    criterion_grid_planner();
    criterion_cost_estimator();
    criterion_arithmetic_intensity();
    criterion_complexity_scaling();
    criterion_inverse_solve();
    criterion_determinism(cli_path);
    if (failures == 0)
        std::cout << "all criteria passed\n";
    else
        std::cout << failures << " criterion(s) failed\n";
    return failures;
}
