// Python bindings for the block-Toeplitz operator toolkit.
//
// Conventions: compact operators are (steps, sensors, sources) float64
// arrays; space-time vectors are (spatial, steps) arrays in SOTI layout
// (row-major, time fastest). Frequency blocks come back as a
// (2*steps, sensors, sources) complex array.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <cstring>
#include <optional>

#include "btoep/block_operator.hpp"
#include "btoep/distributed.hpp"
#include "btoep/errors.hpp"
#include "btoep/grid_planner.hpp"
#include "btoep/inverse.hpp"
#include "btoep/io.hpp"
#include "btoep/lti.hpp"
#include "btoep/toeplitz.hpp"
#include "btoep/verify.hpp"

namespace py = pybind11;
using namespace btoep;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

CompactP2O compact_from_array(const Array& blocks) {
    if (blocks.ndim() != 3) throw DimensionError("blocks must be (steps, sensors, sources)");
    CompactP2O op = CompactP2O::zeros(blocks.shape(1), blocks.shape(2), blocks.shape(0));
    std::memcpy(op.blocks.data(), blocks.data(), sizeof(double) * op.blocks.size());
    return op;
}

Array compact_to_array(const CompactP2O& op) {
    Array out({op.num_steps, op.num_sensors, op.num_sources});
    std::memcpy(out.mutable_data(), op.blocks.data(), sizeof(double) * op.blocks.size());
    return out;
}

SpaceTimeVector vector_from_array(const Array& values, Ordering ordering) {
    if (values.ndim() != 2) throw DimensionError("vector must be (spatial, steps)");
    SpaceTimeVector v = SpaceTimeVector::zeros(values.shape(0), values.shape(1),
                                               Ordering::SOTI);
    std::memcpy(v.values.data(), values.data(), sizeof(double) * v.values.size());
    if (ordering == Ordering::TOSI) {
        // Caller handed (steps, spatial); treat axis 0 as time.
        v.spatial_dim = values.shape(1);
        v.num_steps = values.shape(0);
        v.ordering = Ordering::TOSI;
    }
    return v;
}

Array vector_to_array(const SpaceTimeVector& v) {
    const SpaceTimeVector soti = with_ordering(v, Ordering::SOTI);
    Array out({soti.spatial_dim, soti.num_steps});
    std::memcpy(out.mutable_data(), soti.values.data(), sizeof(double) * soti.values.size());
    return out;
}

std::optional<Partition> make_partition(const CompactP2O& compact, const std::string& grid_text,
                                        bool keep_channel_layout) {
    if (grid_text.empty() || grid_text == "1x1") return std::nullopt;
    return partition_operator(compact, GridShape::parse(grid_text),
                              {.keep_channel_layout = keep_channel_layout});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "FFT-accelerated block lower-triangular Toeplitz operators";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<OrderingError>(m, "OrderingError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<GridError>(m, "GridError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<SpectralP2O>(m, "SpectralOperator")
        .def_readonly("num_sensors", &SpectralP2O::num_sensors)
        .def_readonly("num_sources", &SpectralP2O::num_sources)
        .def_readonly("num_steps", &SpectralP2O::num_steps)
        .def_property_readonly("num_freq", &SpectralP2O::num_freq)
        .def_property_readonly(
            "freq_blocks",
            [](const SpectralP2O& op) {
                py::array_t<std::complex<double>> out(
                    {op.num_freq(), op.num_sensors, op.num_sources});
                std::memcpy(out.mutable_data(), op.freq_blocks.data(),
                            sizeof(std::complex<double>) * op.freq_blocks.size());
                return out;
            })
        .def("apply_forward",
             [](const SpectralP2O& op, const Array& m) {
                 return vector_to_array(apply_forward(op, vector_from_array(m, Ordering::SOTI)));
             },
             py::arg("m"), "d = F m; input and output are (spatial, steps) SOTI arrays")
        .def("apply_adjoint",
             [](const SpectralP2O& op, const Array& d) {
                 return vector_to_array(apply_adjoint(op, vector_from_array(d, Ordering::SOTI)));
             },
             py::arg("d"), "m = F^T d")
        .def("apply_forward_ewp",
             [](SpectralP2O& op, const Array& m) {
                 ensure_channel_layout(op);
                 return vector_to_array(
                     apply_forward_ewp(op, vector_from_array(m, Ordering::SOTI)));
             },
             py::arg("m"))
        .def("apply_adjoint_ewp",
             [](SpectralP2O& op, const Array& d) {
                 ensure_channel_layout(op);
                 return vector_to_array(
                     apply_adjoint_ewp(op, vector_from_array(d, Ordering::SOTI)));
             },
             py::arg("d"));

    m.def("setup",
          [](const Array& blocks, bool keep_channel_layout) {
              return setup(compact_from_array(blocks),
                           {.keep_channel_layout = keep_channel_layout});
          },
          py::arg("blocks"), py::arg("keep_channel_layout") = false,
          "Transform (steps, sensors, sources) compact blocks to frequency form");

    m.def("naive_apply_forward",
          [](const Array& blocks, const Array& m) {
              const CompactP2O op = compact_from_array(blocks);
              return vector_to_array(tosi_to_soti(
                  naive_apply_forward(op, soti_to_tosi(vector_from_array(m, Ordering::SOTI)))));
          },
          py::arg("blocks"), py::arg("m"), "Direct triangular sum (reference backend)");

    m.def("naive_apply_adjoint",
          [](const Array& blocks, const Array& d) {
              const CompactP2O op = compact_from_array(blocks);
              return vector_to_array(tosi_to_soti(
                  naive_apply_adjoint(op, soti_to_tosi(vector_from_array(d, Ordering::SOTI)))));
          },
          py::arg("blocks"), py::arg("d"));

    m.def("distributed_forward",
          [](const Array& blocks, const Array& m, const std::string& grid,
             const std::string& backend) {
              const CompactP2O op = compact_from_array(blocks);
              const Backend b = parse_backend(backend);
              Partition partition = partition_operator(
                  op, GridShape::parse(grid), {.keep_channel_layout = b == Backend::Ewp});
              return vector_to_array(distributed_forward(
                  partition, vector_from_array(m, Ordering::SOTI), {.backend = b}));
          },
          py::arg("blocks"), py::arg("m"), py::arg("grid") = "1x1", py::arg("backend") = "fft");

    m.def("distributed_adjoint",
          [](const Array& blocks, const Array& d, const std::string& grid,
             const std::string& backend) {
              const CompactP2O op = compact_from_array(blocks);
              const Backend b = parse_backend(backend);
              Partition partition = partition_operator(
                  op, GridShape::parse(grid), {.keep_channel_layout = b == Backend::Ewp});
              return vector_to_array(distributed_adjoint(
                  partition, vector_from_array(d, Ordering::SOTI), {.backend = b}));
          },
          py::arg("blocks"), py::arg("d"), py::arg("grid") = "1x1", py::arg("backend") = "fft");

    m.def("simulate_forward",
          [](const Array& state_update, const Array& input_map, const Array& observation_map,
             const Array& m_tosi) {
              LTISystemSpec spec;
              if (state_update.ndim() != 2 || input_map.ndim() != 2 ||
                  observation_map.ndim() != 2)
                  throw DimensionError("system matrices must be 2-D");
              spec.state_dim = state_update.shape(0);
              spec.num_sources = input_map.shape(1);
              spec.num_sensors = observation_map.shape(0);
              spec.num_steps = m_tosi.shape(0);
              spec.state_update.assign(state_update.data(),
                                       state_update.data() + state_update.size());
              spec.input_map.assign(input_map.data(), input_map.data() + input_map.size());
              spec.observation_map.assign(observation_map.data(),
                                          observation_map.data() + observation_map.size());
              const SpaceTimeVector d = simulate_forward(
                  spec, vector_from_array(m_tosi, Ordering::TOSI));
              // Return (steps, sensors) to mirror the input layout.
              Array out({d.num_steps, d.spatial_dim});
              std::memcpy(out.mutable_data(), d.values.data(), sizeof(double) * d.values.size());
              return out;
          },
          py::arg("state_update"), py::arg("input_map"), py::arg("observation_map"),
          py::arg("m"), "Explicit time stepping; m is (steps, sources), result (steps, sensors)");

    m.def("assemble_compact_p2o",
          [](const Array& state_update, const Array& input_map, const Array& observation_map,
             std::size_t num_steps) {
              LTISystemSpec spec;
              spec.state_dim = state_update.shape(0);
              spec.num_sources = input_map.shape(1);
              spec.num_sensors = observation_map.shape(0);
              spec.num_steps = num_steps;
              spec.state_update.assign(state_update.data(),
                                       state_update.data() + state_update.size());
              spec.input_map.assign(input_map.data(), input_map.data() + input_map.size());
              spec.observation_map.assign(observation_map.data(),
                                          observation_map.data() + observation_map.size());
              return compact_to_array(assemble_compact_p2o(spec));
          },
          py::arg("state_update"), py::arg("input_map"), py::arg("observation_map"),
          py::arg("num_steps"));

    m.def("make_advection_diffusion_fixture",
          [](std::size_t state_dim, std::size_t num_sources, std::size_t num_sensors,
             std::size_t num_steps, double diffusion, double advection) {
              const LTISystemSpec spec = make_advection_diffusion_fixture(
                  {state_dim, num_sources, num_sensors, num_steps, diffusion, advection});
              return compact_to_array(assemble_compact_p2o(spec));
          },
          py::arg("state_dim"), py::arg("num_sources"), py::arg("num_sensors"),
          py::arg("num_steps"), py::arg("diffusion") = 0.3, py::arg("advection") = 0.2,
          "Assembled operator of the built-in 1-D transport fixture");

    m.def("cg_solve",
          [](const Array& blocks, const Array& d_obs, double alpha, const std::string& reg,
             double tol, std::size_t maxiter, bool precondition, const std::string& grid) {
              const CompactP2O compact = compact_from_array(blocks);
              const SpectralP2O op = setup(compact);
              const Regularization regularization{.kind = parse_reg_kind(reg), .alpha = alpha};
              std::optional<Partition> partition = make_partition(compact, grid, false);
              HessianOperator hessian{.op = &op, .reg = regularization,
                                      .partition = partition ? &*partition : nullptr};
              const SpaceTimeVector data = vector_from_array(d_obs, Ordering::SOTI);
              const SpaceTimeVector rhs = partition
                                              ? distributed_adjoint(*partition, data)
                                              : apply_adjoint(op, data);
              const CGResult result = cg_solve(hessian, rhs, tol, maxiter, precondition);
              return py::make_tuple(vector_to_array(result.solution), result.iterations,
                                    result.relative_residual, result.converged);
          },
          py::arg("blocks"), py::arg("d_obs"), py::arg("alpha") = 1e-2,
          py::arg("reg") = "identity", py::arg("tol") = 1e-8, py::arg("maxiter") = 0,
          py::arg("precondition") = false, py::arg("grid") = "1x1",
          "Solve (F^T F + alpha R) m = F^T d_obs; returns (m, iterations, residual, converged)");

    m.def("toeplitz_matvec",
          [](const std::vector<double>& first_col, const std::vector<double>& first_row_tail,
             const std::vector<double>& x) {
              ToeplitzSpec spec;
              spec.order = first_col.size();
              spec.first_col = first_col;
              spec.first_row_tail = first_row_tail;
              return toeplitz_matvec(spec, x);
          },
          py::arg("first_col"), py::arg("first_row_tail"), py::arg("x"));

    m.def("comm_cost",
          [](std::size_t rows, std::size_t cols, std::size_t num_sources,
             std::size_t num_sensors, std::size_t num_steps, double latency, double bandwidth) {
              return comm_cost({rows, cols}, {num_sources, num_sensors, num_steps},
                               {latency, bandwidth, 1});
          },
          py::arg("rows"), py::arg("cols"), py::arg("num_sources"), py::arg("num_sensors"),
          py::arg("num_steps"), py::arg("latency") = 1e-6, py::arg("bandwidth") = 1e10);

    m.def("modified_cost", &modified_cost, py::arg("rows"), py::arg("workers"),
          py::arg("log_dim_ratio"));

    m.def("select_grid",
          [](std::size_t workers, double log_dim_ratio, unsigned gpus_per_node) {
              const GridShape shape = select_grid(workers, log_dim_ratio, gpus_per_node);
              return py::make_tuple(shape.rows, shape.cols);
          },
          py::arg("workers"), py::arg("log_dim_ratio"), py::arg("gpus_per_node") = 1);

    m.def("weak_scaling_shape",
          [](double local_ratio, std::size_t workers) {
              const WeakScalingChoice choice = weak_scaling_shape(local_ratio, workers);
              return py::make_tuple(choice.indifferent, choice.shape.rows, choice.shape.cols);
          },
          py::arg("local_ratio"), py::arg("workers"));

    m.def("conventional_cost_estimate",
          [](double grid_points, double num_steps, double num_sensors, double rank_fraction) {
              const CostEstimate est =
                  conventional_cost_estimate(grid_points, num_steps, num_sensors, rank_fraction);
              return py::dict(
                  py::arg("per_solve_flops") = est.per_solve_flops,
                  py::arg("effective_rank") = est.effective_rank,
                  py::arg("conventional_total_flops") = est.conventional_total_flops,
                  py::arg("fft_setup_flops") = est.fft_setup_flops,
                  py::arg("fft_matvec_flops") = est.fft_matvec_flops,
                  py::arg("fft_total_flops") = est.fft_total_flops, py::arg("ratio") = est.ratio);
          },
          py::arg("grid_points"), py::arg("num_steps"), py::arg("num_sensors"),
          py::arg("rank_fraction") = 0.1);

    m.def("apply_arithmetic_intensity", &apply_arithmetic_intensity, py::arg("local_sensors"),
          py::arg("local_sources"));

    m.def("write_operator",
          [](const std::filesystem::path& path, const Array& blocks) {
              io::write_operator(path, compact_from_array(blocks));
          },
          py::arg("path"), py::arg("blocks"));
    m.def("read_operator",
          [](const std::filesystem::path& path) {
              return compact_to_array(io::read_compact_operator(path));
          },
          py::arg("path"));
    m.def("write_vector",
          [](const std::filesystem::path& path, const Array& values) {
              io::write_vector(path, vector_from_array(values, Ordering::SOTI));
          },
          py::arg("path"), py::arg("values"));
    m.def("read_vector",
          [](const std::filesystem::path& path) { return vector_to_array(io::read_vector(path)); },
          py::arg("path"));

    m.def("verify",
          [](std::uint64_t seed) {
              std::ostringstream out;
              const bool ok = run_verification(out, seed);
              return py::make_tuple(ok, out.str());
          },
          py::arg("seed") = 20240901, "Run the invariant suite; returns (ok, report_text)");
}
