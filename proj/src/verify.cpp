#include "btoep/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "btoep/block_operator.hpp"
#include "btoep/distributed.hpp"
#include "btoep/grid_planner.hpp"
#include "btoep/inverse.hpp"
#include "btoep/io.hpp"
#include "btoep/lti.hpp"
#include "btoep/rng.hpp"
#include "btoep/toeplitz.hpp"

namespace btoep {
namespace {

double rel_max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return scale == 0.0 ? diff : diff / scale;
}

CompactP2O random_operator(Rng& rng, std::size_t sensors, std::size_t sources,
                           std::size_t steps) {
    CompactP2O op = CompactP2O::zeros(sensors, sources, steps);
    for (double& v : op.blocks) v = rng.uniform(-1.0, 1.0);
    return op;
}

SpaceTimeVector random_vector(Rng& rng, std::size_t dim, std::size_t steps, Ordering ordering) {
    SpaceTimeVector v = SpaceTimeVector::zeros(dim, steps, ordering);
    for (double& x : v.values) x = rng.uniform(-1.0, 1.0);
    return v;
}

class Harness {
public:
    explicit Harness(std::ostream& out) : out_(out) {}

    void check(const std::string& name, bool ok, const std::string& detail = "") {
        out_ << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out_ << " (" << detail << ")";
        out_ << "\n";
        if (!ok) ++failures_;
    }

    bool all_passed() const { return failures_ == 0; }

private:
    std::ostream& out_;
    int failures_ = 0;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

bool run_verification(std::ostream& out, std::uint64_t seed) {
    Harness h(out);
    Rng rng(seed);

    // Scalar Toeplitz matvec against dense assembly.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + rng.integer(32);
            ToeplitzSpec spec;
            spec.order = n;
            spec.first_col.resize(n);
            spec.first_row_tail.resize(n - 1);
            for (double& v : spec.first_col) v = rng.uniform(-1.0, 1.0);
            for (double& v : spec.first_row_tail) v = rng.uniform(-1.0, 1.0);
            std::vector<double> x(n);
            for (double& v : x) v = rng.uniform(-1.0, 1.0);
            std::vector<double> dense(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double entry = i >= j ? spec.first_col[i - j]
                                                : spec.first_row_tail[j - i - 1];
                    dense[i] += entry * x[j];
                }
            worst = std::max(worst, rel_max_diff(toeplitz_matvec(spec, x), dense));
        }
        h.check("toeplitz matvec matches dense assembly", worst < 1e-11, "err " + fmt(worst));
    }

    // Backend equivalence and adjoint pairing on random block operators.
    {
        double worst_fwd = 0.0, worst_adj = 0.0, worst_pair = 0.0;
        for (int trial = 0; trial < 25; ++trial) {
            const std::size_t sensors = 1 + rng.integer(6);
            const std::size_t sources = 1 + rng.integer(6);
            const std::size_t steps = 1 + rng.integer(32);
            CompactP2O op = random_operator(rng, sensors, sources, steps);
            SpectralP2O spectral = setup(op, {.keep_channel_layout = true});

            SpaceTimeVector m = random_vector(rng, sources, steps, Ordering::SOTI);
            SpaceTimeVector d = random_vector(rng, sensors, steps, Ordering::SOTI);

            SpaceTimeVector fwd = apply_forward(spectral, m);
            SpaceTimeVector fwd_ewp = apply_forward_ewp(spectral, m);
            SpaceTimeVector fwd_naive =
                tosi_to_soti(naive_apply_forward(op, soti_to_tosi(m)));
            worst_fwd = std::max(worst_fwd, rel_max_diff(fwd.values, fwd_naive.values));
            worst_fwd = std::max(worst_fwd, rel_max_diff(fwd_ewp.values, fwd_naive.values));

            SpaceTimeVector adj = apply_adjoint(spectral, d);
            SpaceTimeVector adj_ewp = apply_adjoint_ewp(spectral, d);
            SpaceTimeVector adj_naive =
                tosi_to_soti(naive_apply_adjoint(op, soti_to_tosi(d)));
            worst_adj = std::max(worst_adj, rel_max_diff(adj.values, adj_naive.values));
            worst_adj = std::max(worst_adj, rel_max_diff(adj_ewp.values, adj_naive.values));

            double fwd_dot = 0.0, adj_dot = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < d.values.size(); ++i) fwd_dot += fwd.values[i] * d.values[i];
            for (std::size_t i = 0; i < m.values.size(); ++i) adj_dot += adj.values[i] * m.values[i];
            scale = std::max(std::abs(fwd_dot), std::abs(adj_dot));
            worst_pair = std::max(worst_pair,
                                  scale == 0.0 ? 0.0 : std::abs(fwd_dot - adj_dot) / scale);
        }
        h.check("fft/ewp backends match the direct triangular sum", worst_fwd < 1e-11,
                "err " + fmt(worst_fwd));
        h.check("adjoint backends match the transposed sum", worst_adj < 1e-11,
                "err " + fmt(worst_adj));
        h.check("adjoint pairing <Fm,d> = <m,F*d>", worst_pair < 1e-11, "err " + fmt(worst_pair));
    }

    // Simulation consistency and the two assembly routes.
    {
        LTISystemSpec spec = make_advection_diffusion_fixture(
            {.state_dim = 48, .num_sources = 5, .num_sensors = 3, .num_steps = 24});
        CompactP2O forward_route = assemble_compact_p2o(spec);
        CompactP2O adjoint_route = assemble_compact_p2o_adjoint_route(spec);
        const double route_err = rel_max_diff(forward_route.blocks, adjoint_route.blocks);
        h.check("forward and adjoint assembly routes agree", route_err < 1e-12,
                "err " + fmt(route_err));

        SpaceTimeVector m = random_vector(rng, spec.num_sources, spec.num_steps, Ordering::TOSI);
        SpaceTimeVector simulated = simulate_forward(spec, m);
        SpaceTimeVector applied = naive_apply_forward(forward_route, m);
        const double sim_err = rel_max_diff(simulated.values, applied.values);
        h.check("time stepping matches the assembled operator", sim_err < 1e-11,
                "err " + fmt(sim_err));
    }

    // Distributed execution equals the single worker, bytes follow the model.
    {
        CompactP2O op = random_operator(rng, 5, 7, 16);
        SpectralP2O spectral = setup(op);
        SpaceTimeVector m = random_vector(rng, 7, 16, Ordering::SOTI);
        SpaceTimeVector serial = apply_forward(spectral, m);

        double worst = 0.0;
        bool bytes_ok = true;
        for (const GridShape grid : {GridShape{1, 1}, GridShape{1, 4}, GridShape{2, 2},
                                     GridShape{4, 1}, GridShape{2, 3}}) {
            Partition partition = partition_operator(op, grid);
            CommLog log;
            SpaceTimeVector dist = distributed_forward(partition, m, {}, &log);
            worst = std::max(worst, rel_max_diff(dist.values, serial.values));

            std::uint64_t expected = 0;
            for (std::size_t j = 0; j < grid.cols; ++j)
                expected += 8 * 16 *
                            static_cast<std::uint64_t>(partition.shard(0, j).local_sources()) *
                            (grid.rows - 1);
            for (std::size_t i = 0; i < grid.rows; ++i)
                expected += 8 * 16 *
                            static_cast<std::uint64_t>(partition.shard(i, 0).local_sensors()) *
                            (grid.cols - 1);
            bytes_ok = bytes_ok && log.total_bytes() == expected;
        }
        h.check("distributed matvec equals the single-worker result", worst < 1e-11,
                "err " + fmt(worst));
        h.check("communication bytes match the per-shard model", bytes_ok);
    }

    // Grid planner against exhaustive integer search.
    {
        bool ok = true;
        for (std::size_t p = 1; p <= 256 && ok; ++p) {
            for (int l = -6; l <= 0; ++l) {
                const GridShape chosen = select_grid(p, l, 1);
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t r = 1; r <= p; ++r) {
                    if (p % r != 0) continue;
                    best = std::min(best, modified_cost(static_cast<double>(r), p, l));
                }
                const double cost =
                    modified_cost(static_cast<double>(chosen.rows), p, l);
                if (cost > best * (1.0 + 1e-9) + 1e-15) {
                    ok = false;
                    break;
                }
            }
        }
        h.check("grid selection matches brute-force cost minimization", ok);

        const GridShape fig = select_grid(80, -2.0, 4);
        h.check("hardware-aware selection picks 4x20 for 80 workers at l=-2",
                fig == GridShape{4, 20}, "got " + fig.to_string());
    }

    // Whole-inversion cost model reference values.
    {
        const CostEstimate est = conventional_cost_estimate(1e9, 1e4, 100.0, 0.1);
        const bool ok = std::abs(est.per_solve_flops - 9.72e15) < 1e-2 * 9.72e15 &&
                        std::abs(est.conventional_total_flops - 1.944e21) < 1e-2 * 1.944e21 &&
                        std::abs(est.fft_total_flops - 2.572e18) < 1e-2 * 2.572e18 &&
                        est.ratio > 750.0;
        h.check("whole-inversion cost model reproduces the reference figures", ok,
                "ratio " + fmt(est.ratio));
    }

    // File round trips are bit-exact.
    {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "btoep-verify";
        fs::create_directories(dir);
        CompactP2O op = random_operator(rng, 3, 4, 8);
        SpaceTimeVector v = random_vector(rng, 4, 8, Ordering::SOTI);
        io::write_operator(dir / "op.btop", op);
        io::write_vector(dir / "v.btvc", v);
        const CompactP2O op2 = io::read_compact_operator(dir / "op.btop");
        const SpaceTimeVector v2 = io::read_vector(dir / "v.btvc");
        SpectralP2O spectral = setup(op);
        io::write_operator(dir / "op_hat.btop", spectral);
        const SpectralP2O spectral2 = io::read_spectral_operator(dir / "op_hat.btop");
        const bool ok = op2.blocks == op.blocks && v2.values == v.values &&
                        v2.ordering == v.ordering && spectral2.freq_blocks == spectral.freq_blocks;
        h.check("operator and vector files round-trip bit-exactly", ok);
        fs::remove_all(dir);
    }

    return h.all_passed();
}

}  // namespace btoep
