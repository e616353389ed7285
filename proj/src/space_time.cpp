#include "btoep/space_time.hpp"

#include "btoep/errors.hpp"

namespace btoep {

std::string to_string(Ordering ordering) {
    return ordering == Ordering::TOSI ? "TOSI" : "SOTI";
}

SpaceTimeVector SpaceTimeVector::zeros(std::size_t spatial_dim, std::size_t num_steps,
                                       Ordering ordering) {
    SpaceTimeVector v;
    v.spatial_dim = spatial_dim;
    v.num_steps = num_steps;
    v.ordering = ordering;
    v.values.assign(spatial_dim * num_steps, 0.0);
    return v;
}

double& SpaceTimeVector::at(std::size_t space, std::size_t time) {
    return ordering == Ordering::TOSI ? values[time * spatial_dim + space]
                                      : values[space * num_steps + time];
}

double SpaceTimeVector::at(std::size_t space, std::size_t time) const {
    return ordering == Ordering::TOSI ? values[time * spatial_dim + space]
                                      : values[space * num_steps + time];
}

void SpaceTimeVector::validate() const {
    if (values.size() != spatial_dim * num_steps) {
        throw DimensionError("space-time vector: " + std::to_string(values.size()) +
                             " values for spatial_dim " + std::to_string(spatial_dim) +
                             " x " + std::to_string(num_steps) + " steps");
    }
}

void SpaceTimeVector::require_ordering(Ordering expected) const {
    if (ordering != expected) {
        throw OrderingError("expected a " + to_string(expected) + "-ordered vector, got " +
                            to_string(ordering));
    }
}

namespace {

SpaceTimeVector reindex(const SpaceTimeVector& v, Ordering from, Ordering to) {
    v.validate();
    v.require_ordering(from);
    SpaceTimeVector out = v;
    out.ordering = to;
    for (std::size_t s = 0; s < v.spatial_dim; ++s)
        for (std::size_t t = 0; t < v.num_steps; ++t) out.at(s, t) = v.at(s, t);
    return out;
}

}  // namespace

SpaceTimeVector tosi_to_soti(const SpaceTimeVector& v) {
    return reindex(v, Ordering::TOSI, Ordering::SOTI);
}

SpaceTimeVector soti_to_tosi(const SpaceTimeVector& v) {
    return reindex(v, Ordering::SOTI, Ordering::TOSI);
}

SpaceTimeVector with_ordering(const SpaceTimeVector& v, Ordering target) {
    if (v.ordering == target) return v;
    return v.ordering == Ordering::TOSI ? tosi_to_soti(v) : soti_to_tosi(v);
}

}  // namespace btoep
