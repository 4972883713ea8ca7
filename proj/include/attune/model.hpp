#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "attune/masks.hpp"
#include "attune/matrix.hpp"
#include "attune/prompt.hpp"
#include "attune/schedule.hpp"
#include "attune/sketch.hpp"
#include "attune/tuner.hpp"

namespace attune {

struct MiniDitConfig {
    std::size_t text_tokens = 7;  // d_c
    std::size_t latent_h = 4;
    std::size_t latent_w = 4;
    std::size_t d_model = 16;
    std::size_t n_double = 2;
    std::size_t n_single = 3;
    std::size_t n_steps = 8;
    std::uint64_t seed = 0;

    std::size_t image_tokens() const { return latent_h * latent_w; }
    std::size_t map_side() const { return text_tokens + image_tokens(); }
    int layer_count() const { return static_cast<int>(n_double + n_single); }
};

/// One attention block. Double-stream blocks project text and image tokens
/// through separate weights; single-stream blocks share one set (the image
/// matrices stay empty).
struct Block {
    bool fused = false;
    Matrix wq_text, wk_text, wv_text, wo_text;
    Matrix wq_image, wk_image, wv_image, wo_image;
};

struct StreamState {
    Matrix text;   // d_c x d_model
    Matrix image;  // hw x d_model
    int step = 0;
};

struct CaptureRecord {
    int layer = 0;  // 1-indexed
    int step = 0;   // completed steps
    Matrix attention;  // the map the forward pass consumed (post-tune when tuning)
    Matrix raw;        // pre-tune map; empty when tuning is off
};

/// Deterministic toy-scale DiT: `n_double` double-stream then `n_single`
/// single-stream blocks, unified single-head attention over d_c+hw tokens,
/// seeded pseudo-random weights. Immutable after construction.
class MiniDit {
public:
    explicit MiniDit(const MiniDitConfig& config);

    const MiniDitConfig& config() const { return config_; }
    int layer_count() const { return static_cast<int>(blocks_.size()); }
    const Block& block(int layer) const { return blocks_[static_cast<std::size_t>(layer - 1)]; }
    Block& block(int layer) { return blocks_[static_cast<std::size_t>(layer - 1)]; }

private:
    MiniDitConfig config_;
    std::vector<Block> blocks_;
};

/// Initial state: text rows are seeded pseudo-embeddings keyed by (model
/// seed, prompt content); the image latent is seeded noise shared by every
/// prompt under the same model seed.
StreamState init_state(const MiniDit& model, const PromptSpec& spec);

/// One unified-attention block without tuning: returns the post-softmax map
/// and the post-residual state.
std::pair<Matrix, StreamState> unified_attention(const MiniDit& model, int layer,
                                                 const StreamState& state);

struct RunOptions {
    bool tuning = true;
    bool pre_softmax = false;     // comparison baseline placement
    bool carry_text = false;      // feed the text branch output into the next step
    bool per_region_norm = false;
    bool capture = false;
};

struct RunResult {
    StreamState state;
    std::vector<CaptureRecord> captures;
};

/// Full multi-step loop: per step, per layer, attention (tuned when the
/// schedule activates) followed by the fixed-coefficient latent update
/// x += (blockOutput - x)/n_steps.
RunResult run(const MiniDit& model, const PromptSpec& spec, const SketchSet& sketch,
              const FullMask& mask, const SensitivityVector& g, const ScheduleProfile& profile,
              const RunOptions& options = {});

/// Swaps text rows of the given classes between two streams in place. The
/// token-exchange hook primitive; applying it twice restores both streams.
void swap_token_rows(Matrix& text_a, Matrix& text_b, const PromptSpec& spec,
                     const std::set<TokenClass>& classes);

/// Called before each layer's attention with both working states.
using PairedHook = std::function<void(int step, int layer, StreamState& a, StreamState& b)>;

struct PairedRunResult {
    RunResult a;
    RunResult b;
};

/// Runs two prompts through the same model in lockstep, invoking `hook`
/// before every layer. Tuning stays off — this is an analysis harness.
PairedRunResult paired_run(const MiniDit& model, const PromptSpec& spec_a,
                           const PromptSpec& spec_b, const PairedHook& hook,
                           bool capture = false, bool carry_text = false);

struct ExchangeSpec {
    std::set<TokenClass> classes;
    LayerRange layers;
    int step_lo = 0;
    int step_hi = -1;  // inclusive; -1 means no steps

    bool covers(int step, int layer) const {
        return step >= step_lo && step <= step_hi && layers.contains(layer);
    }
};

/// Step-layer-wise token exchange: swaps class rows at every hook inside the
/// window. Prompts must share d_c and per-token class layout
/// (LayoutMismatch otherwise).
PairedRunResult token_exchange(const MiniDit& model, const PromptSpec& spec_a,
                               const PromptSpec& spec_b, const ExchangeSpec& exchange,
                               bool capture = false);

std::uint64_t state_checksum(const StreamState& state);

}  // namespace attune
