#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace btoep {

// Index ordering of space-time data laid out as a flat array.
//   TOSI (time-outer-space-inner):  values[t * spatial_dim + s]
//   SOTI (space-outer-time-inner):  values[s * num_steps + t]
enum class Ordering { TOSI, SOTI };

std::string to_string(Ordering ordering);

struct SpaceTimeVector {
    std::size_t spatial_dim = 0;
    std::size_t num_steps = 0;
    Ordering ordering = Ordering::TOSI;
    std::vector<double> values;  // spatial_dim * num_steps entries

    static SpaceTimeVector zeros(std::size_t spatial_dim, std::size_t num_steps,
                                 Ordering ordering);

    std::size_t size() const { return spatial_dim * num_steps; }

    double& at(std::size_t space, std::size_t time);
    double at(std::size_t space, std::size_t time) const;

    // throws DimensionError on a length mismatch
    void validate() const;
    // throws OrderingError unless the tag matches
    void require_ordering(Ordering expected) const;
};

// Pure permutations between the two layouts; round-trip is bit-exact.
SpaceTimeVector tosi_to_soti(const SpaceTimeVector& v);
SpaceTimeVector soti_to_tosi(const SpaceTimeVector& v);

// Convenience: reorder only if needed.
SpaceTimeVector with_ordering(const SpaceTimeVector& v, Ordering target);

}  // namespace btoep
