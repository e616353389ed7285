#pragma once

#include <cstdint>

namespace btoep {

// Per-stage instrumentation for one matvec. `ops` follows the operation-count
// model (8 per complex multiply-add, 2 per real multiply-add,
// 2*steps*log2(2*steps) per padded transform channel); `bytes` is the
// single-pass traffic model at 8 bytes per real and 16 per complex value.
// `seconds` is wall time when stage timing is enabled.
struct StageCounters {
    double ops = 0.0;
    double bytes = 0.0;
    double seconds = 0.0;
};

struct PipelineCounters {
    StageCounters pad;
    StageCounters forward_fft;
    StageCounters reorder_in;   // channel layout -> per-frequency layout
    StageCounters apply;        // per-frequency matrix-vector products
    StageCounters reorder_out;  // per-frequency layout -> channel layout
    StageCounters inverse_fft;
    StageCounters unpad;

    // naive backend
    std::uint64_t block_products = 0;
    double naive_ops = 0.0;

    bool time_stages = false;

    double total_ops() const {
        return pad.ops + forward_fft.ops + reorder_in.ops + apply.ops + reorder_out.ops +
               inverse_fft.ops + unpad.ops + naive_ops;
    }

    double stage_seconds() const {
        return pad.seconds + forward_fft.seconds + reorder_in.seconds + apply.seconds +
               reorder_out.seconds + inverse_fft.seconds + unpad.seconds;
    }

    // Operations per byte of the per-frequency matrix apply.
    double apply_intensity() const { return apply.bytes == 0.0 ? 0.0 : apply.ops / apply.bytes; }
};

}  // namespace btoep
