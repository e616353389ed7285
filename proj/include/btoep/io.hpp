#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "btoep/block_operator.hpp"
#include "btoep/space_time.hpp"

namespace btoep::io {

// Binary operator file ("BTOP"): a 64-byte zero-padded header followed by the
// blocks in declaration order, row-major within a block, little-endian.
// Time-domain files hold num_steps real64 blocks (the compact first block
// column, TOSI); frequency-domain files hold 2*num_steps complex128 blocks.
//
// Binary vector file ("BTVC"): 64-byte header, real64 payload.

enum class Domain : std::uint32_t { Time = 0, Frequency = 1 };

struct OperatorHeader {
    Ordering ordering = Ordering::TOSI;
    Domain domain = Domain::Time;
    std::uint64_t num_sensors = 0;
    std::uint64_t num_sources = 0;
    std::uint64_t num_steps = 0;
    bool complex_scalar = false;
};

void write_operator(const std::filesystem::path& path, const CompactP2O& op);
void write_operator(const std::filesystem::path& path, const SpectralP2O& op);

OperatorHeader peek_operator(const std::filesystem::path& path);
CompactP2O read_compact_operator(const std::filesystem::path& path);
SpectralP2O read_spectral_operator(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, const SpaceTimeVector& v);
SpaceTimeVector read_vector(const std::filesystem::path& path);

}  // namespace btoep::io
