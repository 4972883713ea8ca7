#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "attune/masks.hpp"
#include "attune/matrix.hpp"
#include "attune/model.hpp"
#include "attune/prompt.hpp"
#include "attune/schedule.hpp"

namespace attune {

/// The four blocks of one attention map. They tile the parent exactly;
/// reassemble() reproduces it bit for bit.
struct RegionView {
    std::size_t d_c = 0;
    std::size_t hw = 0;
    Matrix t2t;  // d_c x d_c
    Matrix t2i;  // d_c x hw
    Matrix i2t;  // hw x d_c
    Matrix i2i;  // hw x hw
};

RegionView extract_regions(const Matrix& attn, std::size_t d_c, std::size_t hw);
Matrix reassemble(const RegionView& view);

/// I2T column of one text token reshaped to the latent grid.
Matrix token_heatmap(const RegionView& view, std::size_t token, std::size_t h, std::size_t w);

struct LayerRangeStats {
    std::string range_label;  // "lo-hi"
    TokenClass token_class = TokenClass::Filler;
    double mean = 0.0;
    double max = 0.0;
};

/// Aggregates I2T attention mass per token class over the captures whose
/// layer falls in each range. Classes with no tokens are omitted; a range
/// that matches no capture is an EmptyRange error.
std::vector<LayerRangeStats> layer_range_stats(const std::vector<CaptureRecord>& captures,
                                               const std::vector<LayerRange>& ranges,
                                               const PromptSpec& spec);

/// Samples a * exp(beta * (m - a)) on an even grid over [0,1] (both ends
/// included). m is 0 (suppression) or 1 (amplification).
std::vector<std::pair<double, double>> scaling_curve(double lambda, int total_steps,
                                                     int step_index, int m,
                                                     std::size_t samples);

// CSV export/import. Captures: `layer,step,region,row,col,value` with
// row/col relative to the region block. Stats: `range,class,mean,max`.
// Curve: `a,value`. Doubles print in shortest round-trip form, so reading a
// file back reproduces the exact values.
void write_captures_csv(std::ostream& out, const std::vector<CaptureRecord>& captures,
                        std::size_t d_c, std::size_t hw);
std::vector<CaptureRecord> read_captures_csv(std::istream& in);
void write_stats_csv(std::ostream& out, const std::vector<LayerRangeStats>& stats);
void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve);

}  // namespace attune
