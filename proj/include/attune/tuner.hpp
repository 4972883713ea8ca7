#pragma once

#include <span>

#include "attune/masks.hpp"
#include "attune/matrix.hpp"
#include "attune/schedule.hpp"

namespace attune {

/// Step-dependent tuning strength. `step_index` counts completed steps, so
/// the remaining-step fraction (T - s)/T starts at 1 and decays: tuning is
/// strongest on the first denoising step.
struct TuneParams {
    double lambda = 0.0;
    int total_steps = 1;
    int step_index = 0;
};

/// lambda * ((T - s)/T)^4
double beta(const TuneParams& params);

/// Core rescaling primitive on a block of post-softmax rows:
/// a .* exp(beta * g_row .* (m - a)). No normalization happens here — the
/// caller renormalizes at full-row scope. `row_gain` holds one gain per row.
Matrix tune_region(const Matrix& attn_block, const Matrix& mask_block,
                   std::span<const double> row_gain, double beta_value);

struct TuneOptions {
    /// Renormalize each tuned block back to its pre-tune row mass instead of
    /// rescaling the whole row. Off by default; full-row scope matches the
    /// softmax over the complete key axis.
    bool per_region_norm = false;
};

/// Applies the region-wise rescale to a full (d_c+hw)^2 row-stochastic map.
/// Only regions and token classes named by `activation` are touched; the T2I
/// block is never tuned. An empty activation returns the input bit-identical
/// and rows without any live block are copied untouched. Tuned rows are
/// renormalized over the full key axis.
Matrix tune_attention(const Matrix& attn, const FullMask& mask, const SensitivityVector& g,
                      const Activation& activation, int total_steps, int step_index,
                      const TuneOptions& options = {});

/// Dense-Diffusion-style comparison baseline: adds beta * g * m to the raw
/// logits of live regions before softmax. Kept only so the post-softmax
/// placement can be compared against it.
void add_presoftmax_bias(Matrix& logits, const FullMask& mask, const SensitivityVector& g,
                         const Activation& activation, int total_steps, int step_index);

}  // namespace attune
