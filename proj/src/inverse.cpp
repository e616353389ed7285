#include "btoep/inverse.hpp"

#include <cmath>
#include <string>

#include "btoep/errors.hpp"

namespace btoep {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

RegKind parse_reg_kind(const std::string& name) {
    if (name == "identity" || name == "scaled-identity") return RegKind::ScaledIdentity;
    if (name == "temporal-laplacian") return RegKind::TemporalLaplacian;
    throw Error("unknown regularization '" + name +
                "' (expected identity or temporal-laplacian)");
}

std::string to_string(RegKind kind) {
    return kind == RegKind::ScaledIdentity ? "identity" : "temporal-laplacian";
}

SpaceTimeVector Regularization::apply(const SpaceTimeVector& v) const {
    v.validate();
    v.require_ordering(Ordering::SOTI);
    if (kind == RegKind::ScaledIdentity) return v;
    SpaceTimeVector out = v;
    const std::size_t steps = v.num_steps;
    for (std::size_t s = 0; s < v.spatial_dim; ++s) {
        const double* x = v.values.data() + s * steps;
        double* y = out.values.data() + s * steps;
        for (std::size_t t = 0; t < steps; ++t) {
            double acc = 2.0 * x[t];
            if (t > 0) acc -= x[t - 1];
            if (t + 1 < steps) acc -= x[t + 1];
            y[t] = acc;
        }
    }
    return out;
}

SpaceTimeVector Regularization::apply_inverse(const SpaceTimeVector& v) const {
    v.validate();
    v.require_ordering(Ordering::SOTI);
    if (kind == RegKind::ScaledIdentity) return v;
    // Thomas solve of the tridiagonal (-1, 2, -1) system per source.
    SpaceTimeVector out = v;
    const std::size_t steps = v.num_steps;
    std::vector<double> scratch(steps);
    for (std::size_t s = 0; s < v.spatial_dim; ++s) {
        const double* rhs = v.values.data() + s * steps;
        double* x = out.values.data() + s * steps;
        double pivot = 2.0;
        x[0] = rhs[0] / pivot;
        for (std::size_t t = 1; t < steps; ++t) {
            scratch[t] = -1.0 / pivot;
            pivot = 2.0 + scratch[t];
            x[t] = (rhs[t] + x[t - 1]) / pivot;
        }
        for (std::size_t t = steps - 1; t-- > 0;) x[t] -= scratch[t + 1] * x[t + 1];
    }
    return out;
}

double Regularization::quadratic_form(const SpaceTimeVector& v) const {
    return dot(v.values, apply(v).values);
}

SpaceTimeVector HessianOperator::apply(const SpaceTimeVector& v) const {
    if (!op) throw Error("hessian: no operator attached");
    SpaceTimeVector result = [&] {
        if (partition) {
            SpaceTimeVector d = distributed_forward(*partition, v, engine);
            return distributed_adjoint(*partition, d, engine);
        }
        return apply_adjoint(*op, apply_forward(*op, v));
    }();
    SpaceTimeVector penalty = reg.apply(v);
    for (std::size_t i = 0; i < result.values.size(); ++i)
        result.values[i] += reg.alpha * penalty.values[i];
    return result;
}

double objective_eval(const SpectralP2O& op, const SpaceTimeVector& m,
                      const SpaceTimeVector& d_obs, const Regularization& reg) {
    d_obs.validate();
    d_obs.require_ordering(Ordering::SOTI);
    if (d_obs.spatial_dim != op.num_sensors || d_obs.num_steps != op.num_steps)
        throw DimensionError("objective: observations do not match the operator");
    SpaceTimeVector residual = apply_forward(op, m);
    for (std::size_t i = 0; i < residual.values.size(); ++i)
        residual.values[i] -= d_obs.values[i];
    return 0.5 * dot(residual.values, residual.values) + 0.5 * reg.alpha * reg.quadratic_form(m);
}

CGResult cg_solve(const HessianOperator& hessian, const SpaceTimeVector& rhs, double tol,
                  std::size_t max_iterations, bool use_reg_preconditioner) {
    rhs.validate();
    rhs.require_ordering(Ordering::SOTI);
    if (max_iterations == 0)
        max_iterations = 10 * static_cast<std::size_t>(
                                  std::ceil(std::sqrt(static_cast<double>(rhs.size())))) + 1;

    CGResult result;
    result.solution = SpaceTimeVector::zeros(rhs.spatial_dim, rhs.num_steps, Ordering::SOTI);
    const double rhs_norm = norm(rhs.values);
    if (rhs_norm == 0.0) {
        result.converged = true;
        return result;
    }

    SpaceTimeVector residual = rhs;
    SpaceTimeVector z = use_reg_preconditioner ? hessian.reg.apply_inverse(residual) : residual;
    SpaceTimeVector direction = z;
    double rho = dot(residual.values, z.values);
    if (rho <= 0.0 && use_reg_preconditioner)
        throw SolverError("cg: preconditioned residual product r^T z = " + std::to_string(rho) +
                          " <= 0; regularization is not positive definite");

    result.relative_residual = 1.0;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        SpaceTimeVector h_dir = hessian.apply(direction);
        const double curvature = dot(direction.values, h_dir.values);
        if (curvature <= 0.0)
            throw SolverError("cg: direction of non-positive curvature, p^T H p = " +
                              std::to_string(curvature) +
                              "; the Hessian is not positive definite");
        const double step = rho / curvature;
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            result.solution.values[i] += step * direction.values[i];
            residual.values[i] -= step * h_dir.values[i];
        }
        result.iterations = it;
        result.relative_residual = norm(residual.values) / rhs_norm;
        if (result.relative_residual <= tol) {
            result.converged = true;
            break;
        }
        z = use_reg_preconditioner ? hessian.reg.apply_inverse(residual) : residual;
        const double rho_next = dot(residual.values, z.values);
        const double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t i = 0; i < rhs.size(); ++i)
            direction.values[i] = z.values[i] + beta * direction.values[i];
    }
    return result;
}

}  // namespace btoep
