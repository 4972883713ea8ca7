#include "attune/tuner.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "attune/error.hpp"

namespace attune {

double beta(const TuneParams& params) {
    const double remaining = static_cast<double>(params.total_steps - params.step_index);
    const double frac = remaining / static_cast<double>(params.total_steps);
    const double f2 = frac * frac;
    return params.lambda * f2 * f2;
}

Matrix tune_region(const Matrix& attn_block, const Matrix& mask_block,
                   std::span<const double> row_gain, double beta_value) {
    if (!attn_block.same_shape(mask_block)) {
        throw ShapeMismatchError("tune_region: attention and mask shapes differ");
    }
    if (row_gain.size() != attn_block.rows()) {
        throw ShapeMismatchError("tune_region: one gain per row required");
    }
    Matrix out(attn_block.rows(), attn_block.cols());
    for (std::size_t r = 0; r < attn_block.rows(); ++r) {
        const double g = row_gain[r];
        for (std::size_t c = 0; c < attn_block.cols(); ++c) {
            const double a = attn_block(r, c);
            // Zero entries stay zero; the exp can overflow on its own.
            out(r, c) = a == 0.0 ? 0.0 : a * std::exp(beta_value * g * (mask_block(r, c) - a));
        }
    }
    return out;
}

namespace {

void check_dims(const Matrix& attn, const FullMask& mask, const SensitivityVector& g) {
    const std::size_t side = mask.side();
    if (attn.rows() != side || attn.cols() != side) {
        throw DimMismatchError("attention map is " + std::to_string(attn.rows()) + "x" +
                               std::to_string(attn.cols()) + ", mask expects " +
                               std::to_string(side) + " square");
    }
    if (g.g_text.size() != mask.hw || g.g_image.size() != mask.hw) {
        throw DimMismatchError("sensitivity vectors must have hw entries");
    }
    if (mask.token_classes.size() != mask.d_c) {
        throw DimMismatchError("mask token classes must cover d_c tokens");
    }
}

}  // namespace

Matrix tune_attention(const Matrix& attn, const FullMask& mask, const SensitivityVector& g,
                      const Activation& activation, int total_steps, int step_index,
                      const TuneOptions& options) {
    if (activation.empty()) {
        return attn;  // inactive hooks leave the map byte-identical
    }
    check_dims(attn, mask, g);
    const std::size_t d_c = mask.d_c;
    const std::size_t hw = mask.hw;
    const std::size_t side = mask.side();

    Matrix out = attn;
    const bool text_rows_live = activation.t2t;
    const bool image_rows_live = activation.i2i || !activation.i2t_classes.empty();

    if (activation.t2t) {
        const double b = beta({mask.lambda_for(Region::T2T), total_steps, step_index});
        for (std::size_t i = 0; i < d_c; ++i) {
            for (std::size_t j = 0; j < d_c; ++j) {
                const double a = attn(i, j);
                out(i, j) = a == 0.0 ? 0.0 : a * std::exp(b * (mask.t2t.data(i, j) - a));
            }
        }
    }
    if (activation.i2i) {
        const double b = beta({mask.lambda_for(Region::I2I), total_steps, step_index});
        for (std::size_t p = 0; p < hw; ++p) {
            const double gain = g.g_image[p];
            for (std::size_t q = 0; q < hw; ++q) {
                const double a = attn(d_c + p, d_c + q);
                out(d_c + p, d_c + q) =
                    a == 0.0 ? 0.0 : a * std::exp(b * gain * (mask.i2i.data(p, q) - a));
            }
        }
    }
    if (!activation.i2t_classes.empty()) {
        const double b = beta({mask.lambda_for(Region::I2T), total_steps, step_index});
        std::vector<std::size_t> live_cols;
        for (std::size_t j = 0; j < d_c; ++j) {
            if (activation.i2t_classes.count(mask.token_classes[j])) live_cols.push_back(j);
        }
        for (std::size_t p = 0; p < hw; ++p) {
            const double gain = g.g_text[p];
            for (std::size_t j : live_cols) {
                const double a = attn(d_c + p, j);
                out(d_c + p, j) =
                    a == 0.0 ? 0.0 : a * std::exp(b * gain * (mask.i2t.data(p, j) - a));
            }
        }
    }

    if (options.per_region_norm) {
        // Rescale each tuned block row back to its pre-tune mass; rows stay
        // distributions because untouched cells keep their values.
        auto restore_block = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
            for (std::size_t r = r0; r < r1; ++r) {
                double before = 0.0, after = 0.0;
                for (std::size_t c = c0; c < c1; ++c) {
                    before += attn(r, c);
                    after += out(r, c);
                }
                if (after < 1e-300) {
                    throw ZeroRowError("tuned block row " + std::to_string(r) + " vanished");
                }
                const double scale = before / after;
                for (std::size_t c = c0; c < c1; ++c) out(r, c) *= scale;
            }
        };
        if (activation.t2t) restore_block(0, d_c, 0, d_c);
        if (activation.i2i) restore_block(d_c, side, d_c, side);
        if (!activation.i2t_classes.empty()) restore_block(d_c, side, 0, d_c);
        return out;
    }

    for (std::size_t r = 0; r < side; ++r) {
        const bool live = r < d_c ? text_rows_live : image_rows_live;
        if (!live) continue;
        double sum = 0.0;
        for (std::size_t c = 0; c < side; ++c) sum += out(r, c);
        if (sum < 1e-300) {
            throw ZeroRowError("tuned row " + std::to_string(r) + " sums below 1e-300");
        }
        for (std::size_t c = 0; c < side; ++c) out(r, c) /= sum;
    }
    return out;
}

void add_presoftmax_bias(Matrix& logits, const FullMask& mask, const SensitivityVector& g,
                         const Activation& activation, int total_steps, int step_index) {
    if (activation.empty()) return;
    check_dims(logits, mask, g);
    const std::size_t d_c = mask.d_c;
    const std::size_t hw = mask.hw;

    if (activation.t2t) {
        const double b = beta({mask.lambda_for(Region::T2T), total_steps, step_index});
        for (std::size_t i = 0; i < d_c; ++i) {
            for (std::size_t j = 0; j < d_c; ++j) {
                logits(i, j) += b * mask.t2t.data(i, j);
            }
        }
    }
    if (activation.i2i) {
        const double b = beta({mask.lambda_for(Region::I2I), total_steps, step_index});
        for (std::size_t p = 0; p < hw; ++p) {
            for (std::size_t q = 0; q < hw; ++q) {
                logits(d_c + p, d_c + q) += b * g.g_image[p] * mask.i2i.data(p, q);
            }
        }
    }
    if (!activation.i2t_classes.empty()) {
        const double b = beta({mask.lambda_for(Region::I2T), total_steps, step_index});
        for (std::size_t p = 0; p < hw; ++p) {
            for (std::size_t j = 0; j < d_c; ++j) {
                if (!activation.i2t_classes.count(mask.token_classes[j])) continue;
                logits(d_c + p, j) += b * g.g_text[p] * mask.i2t.data(p, j);
            }
        }
    }
}

}  // namespace attune
