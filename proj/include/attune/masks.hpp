#pragma once

#include <vector>

#include "attune/matrix.hpp"
#include "attune/prompt.hpp"
#include "attune/sketch.hpp"

namespace attune {

/// The four blocks of a unified attention map over d_c text + hw image
/// tokens. Rows are queries, columns keys.
enum class Region { T2T, T2I, I2T, I2I };

const char* to_string(Region r);

/// Binary membership mask for one region. Shapes: T2T d_c x d_c,
/// I2I hw x hw, I2T hw x d_c, T2I d_c x hw.
struct RegionMask {
    Region region = Region::T2T;
    Matrix data;
};

/// Per-image-cell gains derived from sketch area fractions: cells of small
/// instances stay near 1, large instances drop toward 0 (and below, for the
/// text-query gain, when an instance exceeds a quarter of the frame —
/// intentionally unclamped by default). Cells outside every mask are 1.
struct SensitivityVector {
    std::vector<double> g_text;   // gain for rows querying into text keys (I2T)
    std::vector<double> g_image;  // gain for rows querying into image keys (I2I)
};

/// The assembled tuning bundle. The T2I block is deliberately absent: it is
/// never tuned.
struct FullMask {
    std::size_t d_c = 0;
    std::size_t hw = 0;
    RegionMask t2t;
    RegionMask i2i;
    RegionMask i2t;
    double lambda_cross = 5.0;  // I2T
    double lambda_self = 3.5;   // T2T, I2I
    std::vector<TokenClass> token_classes;  // copied from the prompt at assembly

    double lambda_for(Region r) const {
        return r == Region::I2T ? lambda_cross : lambda_self;
    }
    std::size_t side() const { return d_c + hw; }
};

struct MaskOptions {
    double lambda_cross = 5.0;
    double lambda_self = 3.5;
    bool i2i_background = true;  // complement counts as an I2I region
    double gamma_text = 4.0;
    double gamma_image = 1.0;
    bool clamp_g = false;  // clamp gains to [0,1]
};

/// Text-to-text mask: 1 iff both tokens fall inside the same sub-prompt span.
RegionMask build_t2t(const PromptSpec& spec);

/// Image-to-image mask: 1 iff both cells belong to the same instance mask;
/// with include_background, the complement counts as one more region.
RegionMask build_i2i(const SketchSet& sketch, bool include_background = true);

/// Image-to-text mask: 1 iff the cell lies in the mask bound to the token's
/// sub-prompt; a background sub-prompt pairs with the complement region.
RegionMask build_i2t(const PromptSpec& spec, const SketchSet& sketch);

SensitivityVector build_sensitivity(const SketchSet& sketch, double gamma_text = 4.0,
                                    double gamma_image = 1.0, bool clamp = false);

FullMask assemble(const PromptSpec& spec, const SketchSet& sketch,
                  const MaskOptions& options = {});

}  // namespace attune
