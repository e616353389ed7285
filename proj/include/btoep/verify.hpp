#pragma once

#include <cstdint>
#include <ostream>

namespace btoep {

// Self-contained invariant suite behind the `verify` CLI subcommand: oracle
// equivalence of the matvec backends, adjoint pairing, simulation consistency,
// distributed-versus-serial agreement, communication byte accounting, planner
// optimality, file round-trips, and the whole-inversion cost figures. Prints
// one pass/fail line per invariant; returns true when everything passed.
bool run_verification(std::ostream& out, std::uint64_t seed = 20240901);

}  // namespace btoep
