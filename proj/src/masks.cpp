#include "attune/masks.hpp"

#include <algorithm>
#include <string>

#include "attune/error.hpp"

namespace attune {

const char* to_string(Region r) {
    switch (r) {
        case Region::T2T: return "T2T";
        case Region::T2I: return "T2I";
        case Region::I2T: return "I2T";
        case Region::I2I: return "I2I";
    }
    return "?";
}

RegionMask build_t2t(const PromptSpec& spec) {
    RegionMask mask{Region::T2T, Matrix(spec.token_count, spec.token_count, 0.0)};
    for (const auto& sp : spec.sub_prompts) {
        for (std::size_t i = sp.begin; i < sp.end; ++i) {
            for (std::size_t j = sp.begin; j < sp.end; ++j) {
                mask.data(i, j) = 1.0;
            }
        }
    }
    return mask;
}

RegionMask build_i2i(const SketchSet& sketch, bool include_background) {
    const std::size_t hw = sketch.cell_count();
    RegionMask mask{Region::I2I, Matrix(hw, hw, 0.0)};
    for (std::size_t k = 0; k < sketch.mask_count(); ++k) {
        const auto cells = flatten(sketch, k);
        for (std::size_t i : cells) {
            for (std::size_t j : cells) {
                mask.data(i, j) = 1.0;
            }
        }
    }
    if (include_background) {
        const auto rest = complement_indices(sketch);
        for (std::size_t i : rest) {
            for (std::size_t j : rest) {
                mask.data(i, j) = 1.0;
            }
        }
    }
    return mask;
}

RegionMask build_i2t(const PromptSpec& spec, const SketchSet& sketch) {
    const std::size_t hw = sketch.cell_count();
    RegionMask mask{Region::I2T, Matrix(hw, spec.token_count, 0.0)};
    const auto binding = effective_binding(sketch, spec);
    for (std::size_t k = 0; k < sketch.mask_count(); ++k) {
        const SubPrompt& sp = spec.sub_prompts[binding[k]];
        for (std::size_t i : flatten(sketch, k)) {
            for (std::size_t j = sp.begin; j < sp.end; ++j) {
                mask.data(i, j) = 1.0;
            }
        }
    }
    if (const auto bg = spec.background_index()) {
        const SubPrompt& sp = spec.sub_prompts[*bg];
        for (std::size_t i : complement_indices(sketch)) {
            for (std::size_t j = sp.begin; j < sp.end; ++j) {
                mask.data(i, j) = 1.0;
            }
        }
    }
    return mask;
}

SensitivityVector build_sensitivity(const SketchSet& sketch, double gamma_text,
                                    double gamma_image, bool clamp) {
    const std::size_t hw = sketch.cell_count();
    // Row sums of L = sum_k S_k S_k^T collapse to sum_k S_k(j) * area_k, so
    // the full hw x hw product never needs to be formed.
    std::vector<double> row_sum(hw, 0.0);
    for (std::size_t k = 0; k < sketch.mask_count(); ++k) {
        const auto cells = flatten(sketch, k);
        const double area = static_cast<double>(cells.size());
        for (std::size_t j : cells) row_sum[j] += area;
    }
    SensitivityVector g;
    g.g_text.resize(hw);
    g.g_image.resize(hw);
    for (std::size_t j = 0; j < hw; ++j) {
        const double frac = row_sum[j] / static_cast<double>(hw);
        g.g_text[j] = 1.0 - gamma_text * frac;
        g.g_image[j] = 1.0 - gamma_image * frac;
        if (clamp) {
            g.g_text[j] = std::clamp(g.g_text[j], 0.0, 1.0);
            g.g_image[j] = std::clamp(g.g_image[j], 0.0, 1.0);
        }
    }
    return g;
}

FullMask assemble(const PromptSpec& spec, const SketchSet& sketch,
                  const MaskOptions& options) {
    FullMask full;
    full.d_c = spec.token_count;
    full.hw = sketch.cell_count();
    full.t2t = build_t2t(spec);
    full.i2i = build_i2i(sketch, options.i2i_background);
    full.i2t = build_i2t(spec, sketch);
    full.lambda_cross = options.lambda_cross;
    full.lambda_self = options.lambda_self;
    full.token_classes = spec.token_classes;
    return full;
}

}  // namespace attune
