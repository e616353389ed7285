// btoep: command-line front end for the block-Toeplitz operator toolkit.
//
// Subcommands: generate, setup, matvec, solve, plan-grid, bench, verify.
// All randomness is seeded; fixed seeds give bit-identical output files.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "btoep/bench.hpp"
#include "btoep/block_operator.hpp"
#include "btoep/distributed.hpp"
#include "btoep/errors.hpp"
#include "btoep/grid_planner.hpp"
#include "btoep/inverse.hpp"
#include "btoep/io.hpp"
#include "btoep/lti.hpp"
#include "btoep/rng.hpp"
#include "btoep/verify.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::json;
using namespace btoep;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> matrix_from_json(const json& rows, std::size_t& out_rows,
                                     std::size_t& out_cols) {
    out_rows = rows.size();
    out_cols = out_rows == 0 ? 0 : rows.front().size();
    std::vector<double> mat;
    mat.reserve(out_rows * out_cols);
    for (const auto& row : rows) {
        if (row.size() != out_cols) throw Error("fixture: ragged matrix rows in JSON");
        for (const auto& v : row) mat.push_back(v.get<double>());
    }
    return mat;
}

LTISystemSpec system_from_json(const json& spec) {
    if (spec.contains("state_update")) {
        LTISystemSpec sys;
        std::size_t rows = 0, cols = 0;
        sys.state_update = matrix_from_json(spec.at("state_update"), rows, cols);
        if (rows != cols) throw Error("fixture: state update must be square");
        sys.state_dim = rows;
        sys.input_map = matrix_from_json(spec.at("input_map"), rows, cols);
        if (rows != sys.state_dim) throw Error("fixture: input map rows must match the state");
        sys.num_sources = cols;
        sys.observation_map = matrix_from_json(spec.at("observation_map"), rows, cols);
        if (cols != sys.state_dim)
            throw Error("fixture: observation map columns must match the state");
        sys.num_sensors = rows;
        sys.num_steps = spec.at("num_steps").get<std::size_t>();
        sys.validate();
        return sys;
    }
    FixtureConfig config;
    config.state_dim = spec.at("state_dim").get<std::size_t>();
    config.num_sources = spec.at("num_sources").get<std::size_t>();
    config.num_sensors = spec.at("num_sensors").get<std::size_t>();
    config.num_steps = spec.at("num_steps").get<std::size_t>();
    config.diffusion = spec.value("diffusion", config.diffusion);
    config.advection = spec.value("advection", config.advection);
    return make_advection_diffusion_fixture(config);
}

json counters_to_json(const PipelineCounters& counters) {
    auto stage = [](const StageCounters& s) {
        return json{{"ops", s.ops}, {"bytes", s.bytes}, {"seconds", s.seconds}};
    };
    return json{{"pad", stage(counters.pad)},
                {"fft", stage(counters.forward_fft)},
                {"reorder_in", stage(counters.reorder_in)},
                {"apply", stage(counters.apply)},
                {"reorder_out", stage(counters.reorder_out)},
                {"ifft", stage(counters.inverse_fft)},
                {"unpad", stage(counters.unpad)},
                {"block_products", counters.block_products},
                {"naive_ops", counters.naive_ops},
                {"total_ops", counters.total_ops()},
                {"apply_intensity", counters.apply_intensity()}};
}

json comm_to_json(const CommLog& log, const CostParams& params) {
    json phases = json::array();
    for (const PhaseReport& phase : comm_report(log, params)) {
        phases.push_back({{"phase", phase.phase},
                          {"messages", phase.messages},
                          {"bytes", phase.bytes},
                          {"modeled_seconds", phase.modeled_seconds}});
    }
    return json{{"mode", log.mode},
                {"total_bytes", log.total_bytes()},
                {"total_messages", log.total_messages()},
                {"phases", phases}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
}

// generate: JSON fixture -> operator file (+ optional truth and observations).
int cmd_generate(const std::string& spec_path, const std::string& out_prefix,
                 std::uint64_t seed) {
    std::ifstream in(spec_path);
    if (!in) throw Error("cannot open fixture spec '" + spec_path + "'");
    json spec = json::parse(in);

    const LTISystemSpec system = system_from_json(spec);
    if (const auto warning = stability_warning(system))
        std::cerr << "warning: " << *warning << "\n";

    const CompactP2O op = assemble_compact_p2o(system);
    io::write_operator(out_prefix + ".btop", op);

    json sidecar{{"seed", seed},
                 {"prng", "mt19937_64"},
                 {"state_dim", system.state_dim},
                 {"num_sources", system.num_sources},
                 {"num_sensors", system.num_sensors},
                 {"num_steps", system.num_steps},
                 {"spectral_radius_estimate", system.spectral_radius_estimate()},
                 {"operator_file", out_prefix + ".btop"}};

    if (spec.contains("true_param_seed")) {
        Rng rng(seed ^ spec.at("true_param_seed").get<std::uint64_t>() * 0x9e3779b97f4a7c15ull);
        SpaceTimeVector m_true =
            SpaceTimeVector::zeros(system.num_sources, system.num_steps, Ordering::TOSI);
        for (double& v : m_true.values) v = rng.normal();
        SpaceTimeVector d_obs = simulate_forward(system, m_true);

        if (spec.contains("noise_snr_db")) {
            const double snr_db = spec.at("noise_snr_db").get<double>();
            double signal_power = 0.0;
            for (double v : d_obs.values) signal_power += v * v;
            signal_power /= static_cast<double>(d_obs.values.size());
            const double noise_std = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
            for (double& v : d_obs.values) v += noise_std * rng.normal();
            sidecar["noise_snr_db"] = snr_db;
        }

        io::write_vector(out_prefix + "_m_true.btvc", tosi_to_soti(m_true));
        io::write_vector(out_prefix + "_d_obs.btvc", tosi_to_soti(d_obs));
        sidecar["m_true_file"] = out_prefix + "_m_true.btvc";
        sidecar["d_obs_file"] = out_prefix + "_d_obs.btvc";
    }

    write_text(out_prefix + ".json", sidecar.dump(2) + "\n");
    std::cout << sidecar.dump(2) << "\n";
    return 0;
}

// setup: time-domain operator file -> frequency-domain operator file.
int cmd_setup(const std::string& in_path, const std::string& out_path) {
    const CompactP2O op = io::read_compact_operator(in_path);
    const auto start = Clock::now();
    const SpectralP2O spectral = setup(op);
    const double setup_seconds = seconds_since(start);
    io::write_operator(out_path, spectral);
    std::cout << json{{"setup_seconds", setup_seconds},
                      {"num_freq", spectral.num_freq()},
                      {"out", out_path}}
                     .dump(2)
              << "\n";
    return 0;
}

struct LoadedOperator {
    std::optional<CompactP2O> compact;
    std::optional<SpectralP2O> spectral;
};

LoadedOperator load_operator(const std::string& path, Backend backend, bool need_spectral) {
    LoadedOperator loaded;
    const io::OperatorHeader header = io::peek_operator(path);
    if (header.domain == io::Domain::Time) {
        loaded.compact = io::read_compact_operator(path);
        if (need_spectral && backend != Backend::Naive)
            loaded.spectral = setup(*loaded.compact,
                                    {.keep_channel_layout = backend == Backend::Ewp});
    } else {
        if (backend == Backend::Naive)
            throw Error("'" + path + "' is frequency-domain; the naive backend needs the "
                        "time-domain operator file");
        loaded.spectral = io::read_spectral_operator(path);
        if (backend == Backend::Ewp) ensure_channel_layout(*loaded.spectral);
    }
    return loaded;
}

Partition make_partition(const LoadedOperator& loaded, const GridShape& grid, Backend backend) {
    const SetupOptions options{.keep_channel_layout = backend == Backend::Ewp};
    if (loaded.compact) return partition_operator(*loaded.compact, grid, options);
    return partition_operator(*loaded.spectral, grid, options);
}

// matvec: operator x vector with backend and grid choices.
int cmd_matvec(const std::string& op_path, const std::string& in_path,
               const std::string& out_path, bool adjoint, const std::string& grid_text,
               const std::string& backend_name, const std::string& report_path,
               const std::string& comm_log_path, const CostParams& params) {
    const Backend backend = parse_backend(backend_name);
    const GridShape grid = GridShape::parse(grid_text);
    const LoadedOperator loaded = load_operator(op_path, backend, true);
    const Partition partition = make_partition(loaded, grid, backend);

    const SpaceTimeVector input = io::read_vector(in_path);
    const Ordering out_ordering = input.ordering;
    const SpaceTimeVector soti_input = with_ordering(input, Ordering::SOTI);

    PipelineCounters counters;
    counters.time_stages = true;
    CommLog log;
    const EngineOptions engine{.backend = backend};

    const auto start = Clock::now();
    const SpaceTimeVector result =
        adjoint ? distributed_adjoint(partition, soti_input, engine, &log, &counters)
                : distributed_forward(partition, soti_input, engine, &log, &counters);
    const double wall = seconds_since(start);

    io::write_vector(out_path, with_ordering(result, out_ordering));

    json report{{"adjoint", adjoint},
                {"backend", backend_name},
                {"grid", grid.to_string()},
                {"wall_seconds", wall},
                {"counters", counters_to_json(counters)},
                {"comm", comm_to_json(log, params)},
                {"out", out_path}};
    std::cout << report.dump(2) << "\n";
    if (!report_path.empty()) write_text(report_path, report.dump(2) + "\n");
    if (!comm_log_path.empty()) write_text(comm_log_path, comm_to_json(log, params).dump(2) + "\n");
    return 0;
}

// solve: regularized least squares via conjugate gradients.
int cmd_solve(const std::string& op_path, const std::string& data_path,
              const std::string& out_path, double alpha, double tol, std::size_t maxiter,
              const std::string& reg_name, bool precondition, const std::string& grid_text,
              const std::string& report_path) {
    const GridShape grid = GridShape::parse(grid_text);
    const LoadedOperator loaded = load_operator(op_path, Backend::Fft, true);
    const SpectralP2O& op = *loaded.spectral;

    const SpaceTimeVector d_obs =
        with_ordering(io::read_vector(data_path), Ordering::SOTI);

    const Regularization reg{.kind = parse_reg_kind(reg_name), .alpha = alpha};
    std::optional<Partition> partition;
    if (grid.workers() > 1) partition = make_partition(loaded, grid, Backend::Fft);

    HessianOperator hessian{.op = &op, .reg = reg,
                            .partition = partition ? &*partition : nullptr};

    const SpaceTimeVector rhs = partition ? distributed_adjoint(*partition, d_obs)
                                          : apply_adjoint(op, d_obs);

    const auto start = Clock::now();
    const CGResult result = cg_solve(hessian, rhs, tol, maxiter, precondition);
    const double wall = seconds_since(start);

    io::write_vector(out_path, result.solution);

    const double objective = objective_eval(op, result.solution, d_obs, reg);
    json report{{"converged", result.converged},
                {"iterations", result.iterations},
                {"relative_residual", result.relative_residual},
                {"objective", objective},
                {"alpha", alpha},
                {"tol", tol},
                {"regularization", reg_name},
                {"preconditioned", precondition},
                {"grid", grid.to_string()},
                {"wall_seconds", wall},
                {"out", out_path}};
    std::cout << report.dump(2) << "\n";
    if (!report_path.empty()) write_text(report_path, report.dump(2) + "\n");
    return result.converged ? 0 : 2;
}

// plan-grid: pick a grid shape and emit the cost curve.
int cmd_plan_grid(std::size_t workers, std::optional<double> log_ratio,
                  std::optional<std::size_t> num_sensors, std::optional<std::size_t> num_sources,
                  unsigned gpus_per_node, const std::string& curve_path) {
    double ratio = 0.0;
    if (log_ratio) {
        ratio = *log_ratio;
    } else if (num_sensors && num_sources) {
        ratio = std::log10(static_cast<double>(*num_sensors) /
                           static_cast<double>(*num_sources));
    } else {
        throw Error("plan-grid: give either -l or both --num-sensors and --num-sources");
    }

    const GridShape chosen = select_grid(workers, ratio, gpus_per_node);
    json report{{"workers", workers},
                {"log_dim_ratio", ratio},
                {"gpus_per_node", gpus_per_node},
                {"rows", chosen.rows},
                {"cols", chosen.cols},
                {"modified_cost",
                 modified_cost(static_cast<double>(chosen.rows), workers, ratio)}};
    std::cout << report.dump(2) << "\n";

    if (!curve_path.empty()) {
        std::ostringstream csv;
        csv << "kind,rows,cols,modified_cost\n";
        csv.precision(12);
        for (std::size_t r = 1; r <= workers; ++r) {
            if (workers % r != 0) continue;
            csv << "grid," << r << "," << workers / r << ","
                << modified_cost(static_cast<double>(r), workers, ratio) << "\n";
        }
        const int samples = 256;
        for (int s = 0; s <= samples; ++s) {
            const double r = std::pow(static_cast<double>(workers),
                                      static_cast<double>(s) / static_cast<double>(samples));
            csv << "continuous," << r << "," << static_cast<double>(workers) / r << ","
                << modified_cost(r, workers, ratio) << "\n";
        }
        write_text(curve_path, csv.str());
    }
    return 0;
}

// bench: sweep sizes and emit per-stage timings plus counters as CSV.
int cmd_bench(const BenchConfig& config, const CostParams& params, const std::string& out_path) {
    const std::vector<BenchRow> rows = run_bench(config, params);
    std::ostringstream csv;
    csv << bench_csv_header() << "\n";
    for (const BenchRow& row : rows) write_csv_row(csv, row);
    if (out_path.empty())
        std::cout << csv.str();
    else
        write_text(out_path, csv.str());
    std::cerr << rows.size() << " bench rows\n";
    return 0;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) values.push_back(std::stoull(item));
    }
    if (values.empty()) throw Error("empty size list '" + text + "'");
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FFT-accelerated block-Toeplitz operator toolkit"};
    app.require_subcommand(1);

    CostParams params;

    // generate
    auto* gen = app.add_subcommand("generate", "Build a test problem from a JSON fixture spec");
    std::string gen_spec, gen_out;
    std::uint64_t gen_seed = 1;
    gen->add_option("--spec", gen_spec, "fixture spec JSON")->required();
    gen->add_option("--out", gen_out, "output path prefix")->required();
    gen->add_option("--seed", gen_seed, "PRNG seed");

    // setup
    auto* setup_cmd = app.add_subcommand("setup", "Transform an operator to frequency domain");
    std::string setup_in, setup_out;
    setup_cmd->add_option("--operator", setup_in, "time-domain operator file")->required();
    setup_cmd->add_option("--out", setup_out, "frequency-domain output file")->required();

    // matvec
    auto* matvec_cmd = app.add_subcommand("matvec", "Apply the operator or its adjoint");
    std::string mv_op, mv_in, mv_out, mv_grid = "1x1", mv_backend = "fft";
    std::string mv_report, mv_comm_log;
    bool mv_adjoint = false;
    matvec_cmd->add_option("--operator", mv_op, "operator file")->required();
    matvec_cmd->add_option("--in", mv_in, "input vector file")->required();
    matvec_cmd->add_option("--out", mv_out, "output vector file")->required();
    matvec_cmd->add_flag("--adjoint", mv_adjoint, "apply the adjoint");
    matvec_cmd->add_option("--grid", mv_grid, "worker grid RxC");
    matvec_cmd->add_option("--backend", mv_backend, "fft | ewp | naive");
    matvec_cmd->add_option("--report", mv_report, "write timing/counter JSON here");
    matvec_cmd->add_option("--comm-log", mv_comm_log, "write communication JSON here");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Regularized inversion by conjugate gradients");
    std::string sol_op, sol_data, sol_out, sol_reg = "identity", sol_grid = "1x1", sol_report;
    double sol_alpha = 1e-2, sol_tol = 1e-8;
    std::size_t sol_maxiter = 0;
    bool sol_precondition = false;
    solve_cmd->add_option("--operator", sol_op, "operator file")->required();
    solve_cmd->add_option("--data", sol_data, "observations vector file")->required();
    solve_cmd->add_option("--out", sol_out, "solution vector file")->required();
    solve_cmd->add_option("--alpha", sol_alpha, "regularization weight");
    solve_cmd->add_option("--tol", sol_tol, "relative residual tolerance");
    solve_cmd->add_option("--maxiter", sol_maxiter, "iteration cap (0 = automatic)");
    solve_cmd->add_option("--reg", sol_reg, "identity | temporal-laplacian");
    solve_cmd->add_flag("--precondition", sol_precondition, "precondition with the regularizer");
    solve_cmd->add_option("--grid", sol_grid, "worker grid RxC");
    solve_cmd->add_option("--report", sol_report, "write convergence JSON here");

    // plan-grid
    auto* plan_cmd = app.add_subcommand("plan-grid", "Choose a worker grid shape");
    std::size_t plan_workers = 1;
    double plan_ratio_value = 0.0;
    std::size_t plan_sensors_value = 0, plan_sources_value = 0;
    unsigned plan_node = 1;
    std::string plan_curve;
    plan_cmd->add_option("-p,--workers", plan_workers, "total workers")->required();
    auto* ratio_opt = plan_cmd->add_option("-l,--log-ratio", plan_ratio_value,
                                           "log10(sensors / sources)");
    auto* sensors_opt =
        plan_cmd->add_option("--num-sensors", plan_sensors_value, "global data dimension");
    auto* sources_opt =
        plan_cmd->add_option("--num-sources", plan_sources_value, "global parameter dimension");
    plan_cmd->add_option("-k,--gpus-per-node", plan_node, "accelerators per node");
    plan_cmd->add_option("--curve", plan_curve, "write the cost curve CSV here");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Sweep sizes; CSV of timings and counters");
    std::string bench_sources = "8", bench_sensors = "4", bench_steps = "64";
    std::string bench_grids = "1x1", bench_backends = "fft", bench_out;
    std::size_t bench_trials = 3;
    std::uint64_t bench_seed = 1;
    bool bench_no_adjoint = false;
    bench_cmd->add_option("--sources", bench_sources, "comma list of source counts");
    bench_cmd->add_option("--sensors", bench_sensors, "comma list of sensor counts");
    bench_cmd->add_option("--steps", bench_steps, "comma list of step counts");
    bench_cmd->add_option("--grids", bench_grids, "comma list of RxC grids");
    bench_cmd->add_option("--backends", bench_backends, "comma list of backends");
    bench_cmd->add_option("--trials", bench_trials, "repetitions per configuration");
    bench_cmd->add_option("--seed", bench_seed, "PRNG seed");
    bench_cmd->add_flag("--no-adjoint", bench_no_adjoint, "skip the adjoint direction");
    bench_cmd->add_option("--out", bench_out, "CSV output path (stdout otherwise)");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite");
    std::uint64_t verify_seed = 20240901;
    verify_cmd->add_option("--seed", verify_seed, "PRNG seed");

    // shared machine-model flags
    for (CLI::App* sub : {matvec_cmd, bench_cmd}) {
        sub->add_option("--latency", params.latency, "modeled seconds per message");
        sub->add_option("--bandwidth", params.bandwidth, "modeled bytes per second");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(gen_spec, gen_out, gen_seed);
        if (setup_cmd->parsed()) return cmd_setup(setup_in, setup_out);
        if (matvec_cmd->parsed())
            return cmd_matvec(mv_op, mv_in, mv_out, mv_adjoint, mv_grid, mv_backend, mv_report,
                              mv_comm_log, params);
        if (solve_cmd->parsed())
            return cmd_solve(sol_op, sol_data, sol_out, sol_alpha, sol_tol, sol_maxiter, sol_reg,
                             sol_precondition, sol_grid, sol_report);
        if (plan_cmd->parsed()) {
            std::optional<double> ratio;
            std::optional<std::size_t> sensors, sources;
            if (ratio_opt->count() > 0) ratio = plan_ratio_value;
            if (sensors_opt->count() > 0) sensors = plan_sensors_value;
            if (sources_opt->count() > 0) sources = plan_sources_value;
            return cmd_plan_grid(plan_workers, ratio, sensors, sources, plan_node, plan_curve);
        }
        if (bench_cmd->parsed()) {
            BenchConfig config;
            config.sources_list = parse_size_list(bench_sources);
            config.sensors_list = parse_size_list(bench_sensors);
            config.steps_list = parse_size_list(bench_steps);
            config.grids.clear();
            {
                std::stringstream stream(bench_grids);
                std::string item;
                while (std::getline(stream, item, ','))
                    if (!item.empty()) config.grids.push_back(GridShape::parse(item));
            }
            config.backends.clear();
            {
                std::stringstream stream(bench_backends);
                std::string item;
                while (std::getline(stream, item, ','))
                    if (!item.empty()) config.backends.push_back(parse_backend(item));
            }
            config.trials = bench_trials;
            config.seed = bench_seed;
            config.include_adjoint = !bench_no_adjoint;
            return cmd_bench(config, params, bench_out);
        }
        if (verify_cmd->parsed()) return run_verification(std::cout, verify_seed) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
