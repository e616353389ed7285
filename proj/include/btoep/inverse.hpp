#pragma once

#include <cstddef>
#include <string>

#include "btoep/block_operator.hpp"
#include "btoep/distributed.hpp"
#include "btoep/space_time.hpp"

namespace btoep {

// Symmetric positive definite penalty on parameter space. The scaled-identity
// kind is R = I; the temporal-Laplacian kind is the second difference in time
// per source with clamped ends (tridiagonal 2, -1), favouring smooth source
// histories. Both invert in closed form.
enum class RegKind { ScaledIdentity, TemporalLaplacian };

RegKind parse_reg_kind(const std::string& name);  // "identity" | "temporal-laplacian"
std::string to_string(RegKind kind);

struct Regularization {
    RegKind kind = RegKind::ScaledIdentity;
    double alpha = 1.0;

    SpaceTimeVector apply(const SpaceTimeVector& v) const;          // R v
    SpaceTimeVector apply_inverse(const SpaceTimeVector& v) const;  // R^{-1} v
    double quadratic_form(const SpaceTimeVector& v) const;          // v^T R v
};

// H v = F^T F v + alpha R v through the fast matvecs; routed through the
// worker grid when a partition is attached.
struct HessianOperator {
    const SpectralP2O* op = nullptr;
    Regularization reg;
    const Partition* partition = nullptr;
    EngineOptions engine;

    SpaceTimeVector apply(const SpaceTimeVector& v) const;
};

// 1/2 |F m - d_obs|^2 + (alpha/2) m^T R m, everything SOTI.
double objective_eval(const SpectralP2O& op, const SpaceTimeVector& m,
                      const SpaceTimeVector& d_obs, const Regularization& reg);

struct CGResult {
    SpaceTimeVector solution;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Conjugate gradients on H m = rhs. Optionally preconditioned with R^{-1}.
// max_iterations == 0 selects 10 * sqrt(problem size). Throws SolverError if
// a direction of non-positive curvature shows up.
CGResult cg_solve(const HessianOperator& hessian, const SpaceTimeVector& rhs,
                  double tol = 1e-8, std::size_t max_iterations = 0,
                  bool use_reg_preconditioner = false);

}  // namespace btoep
