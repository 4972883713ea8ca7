#include "attune/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "attune/error.hpp"
#include "attune/io.hpp"

namespace attune {

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

// Per-row RMS normalization; keeps pre-attention activations O(1) so the
// step loop cannot blow up under random weights.
Matrix rms_norm_rows(const Matrix& m) {
    constexpr double kEps = 1e-8;
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto in = m.row(r);
        double ss = 0.0;
        for (double v : in) ss += v * v;
        const double scale = 1.0 / std::sqrt(ss / static_cast<double>(in.size()) + kEps);
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] * scale;
    }
    return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.data(), top.data() + top.size(), out.data());
    std::copy(bottom.data(), bottom.data() + bottom.size(), out.data() + top.size());
    return out;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return x;
}

struct LayerForward {
    Matrix attention_raw;
    Matrix attention_used;
};

// One block: pre-norm, joint QKV over [text; image], softmax, optional tune
// hook, value mix, per-stream output projection, residual.
LayerForward forward_layer(
    const MiniDit& model, int layer, StreamState& state, int step,
    const std::function<Matrix(const Matrix&, int, int)>* tune_hook,
    const std::function<void(Matrix&, int, int)>* logit_hook) {
    const Block& blk = model.block(layer);
    const std::size_t d_c = state.text.rows();
    const std::size_t hw = state.image.rows();
    const std::size_t d = model.config().d_model;

    const Matrix text_n = rms_norm_rows(state.text);
    const Matrix image_n = rms_norm_rows(state.image);

    const Matrix& wq_i = blk.fused ? blk.wq_text : blk.wq_image;
    const Matrix& wk_i = blk.fused ? blk.wk_text : blk.wk_image;
    const Matrix& wv_i = blk.fused ? blk.wv_text : blk.wv_image;
    const Matrix& wo_i = blk.fused ? blk.wo_text : blk.wo_image;

    const Matrix q = vstack(matmul(text_n, blk.wq_text), matmul(image_n, wq_i));
    const Matrix k = vstack(matmul(text_n, blk.wk_text), matmul(image_n, wk_i));
    const Matrix v = vstack(matmul(text_n, blk.wv_text), matmul(image_n, wv_i));

    Matrix logits = matmul_nt(q, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] *= scale;
    if (logit_hook) (*logit_hook)(logits, layer, step);

    LayerForward fwd;
    fwd.attention_raw = row_softmax(logits);
    fwd.attention_used = tune_hook ? (*tune_hook)(fwd.attention_raw, layer, step)
                                   : fwd.attention_raw;

    const Matrix mixed = matmul(fwd.attention_used, v);
    Matrix mixed_text(d_c, d), mixed_image(hw, d);
    std::copy(mixed.data(), mixed.data() + d_c * d, mixed_text.data());
    std::copy(mixed.data() + d_c * d, mixed.data() + mixed.size(), mixed_image.data());

    // Residual update per stream.
    const Matrix out_text = matmul(mixed_text, blk.wo_text);
    const Matrix out_image = matmul(mixed_image, wo_i);
    for (std::size_t i = 0; i < state.text.size(); ++i) {
        state.text.data()[i] += out_text.data()[i];
    }
    for (std::size_t i = 0; i < state.image.size(); ++i) {
        state.image.data()[i] += out_image.data()[i];
    }
    return fwd;
}

}  // namespace

MiniDit::MiniDit(const MiniDitConfig& config) : config_(config) {
    if (config.d_model == 0 || config.text_tokens == 0 || config.image_tokens() == 0) {
        throw DimError("model dimensions must be positive");
    }
    if (config.layer_count() < 1) {
        throw DimError("model needs at least one block");
    }
    std::mt19937_64 rng(config.seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    const std::size_t d = config.d_model;
    for (std::size_t i = 0; i < config.n_double; ++i) {
        Block blk;
        blk.fused = false;
        blk.wq_text = random_matrix(rng, d, d, stddev);
        blk.wk_text = random_matrix(rng, d, d, stddev);
        blk.wv_text = random_matrix(rng, d, d, stddev);
        blk.wo_text = random_matrix(rng, d, d, stddev);
        blk.wq_image = random_matrix(rng, d, d, stddev);
        blk.wk_image = random_matrix(rng, d, d, stddev);
        blk.wv_image = random_matrix(rng, d, d, stddev);
        blk.wo_image = random_matrix(rng, d, d, stddev);
        blocks_.push_back(std::move(blk));
    }
    for (std::size_t i = 0; i < config.n_single; ++i) {
        Block blk;
        blk.fused = true;
        blk.wq_text = random_matrix(rng, d, d, stddev);
        blk.wk_text = random_matrix(rng, d, d, stddev);
        blk.wv_text = random_matrix(rng, d, d, stddev);
        blk.wo_text = random_matrix(rng, d, d, stddev);
        blocks_.push_back(std::move(blk));
    }
}

StreamState init_state(const MiniDit& model, const PromptSpec& spec) {
    const auto& cfg = model.config();
    if (spec.token_count != cfg.text_tokens) {
        throw DimMismatchError("prompt has " + std::to_string(spec.token_count) +
                               " tokens, model expects " + std::to_string(cfg.text_tokens));
    }
    StreamState state;
    std::mt19937_64 text_rng(mix(cfg.seed, prompt_key(spec)));
    state.text = random_matrix(text_rng, cfg.text_tokens, cfg.d_model, 1.0);
    std::mt19937_64 image_rng(mix(cfg.seed, 0x696d616765ull));  // shared noise across prompts
    state.image = random_matrix(image_rng, cfg.image_tokens(), cfg.d_model, 1.0);
    state.step = 0;
    return state;
}

std::pair<Matrix, StreamState> unified_attention(const MiniDit& model, int layer,
                                                 const StreamState& state) {
    StreamState next = state;
    const LayerForward fwd = forward_layer(model, layer, next, state.step, nullptr, nullptr);
    return {fwd.attention_raw, std::move(next)};
}

RunResult run(const MiniDit& model, const PromptSpec& spec, const SketchSet& sketch,
              const FullMask& mask, const SensitivityVector& g, const ScheduleProfile& profile,
              const RunOptions& options) {
    const auto& cfg = model.config();
    if (profile.n_layers != model.layer_count()) {
        throw DimMismatchError("profile covers " + std::to_string(profile.n_layers) +
                               " layers, model has " + std::to_string(model.layer_count()));
    }
    if (profile.n_steps != static_cast<int>(cfg.n_steps)) {
        throw DimMismatchError("profile covers " + std::to_string(profile.n_steps) +
                               " steps, model runs " + std::to_string(cfg.n_steps));
    }
    if (mask.d_c != cfg.text_tokens || mask.hw != cfg.image_tokens()) {
        throw DimMismatchError("mask dims do not match model dims");
    }
    if (sketch.cell_count() != cfg.image_tokens()) {
        throw DimMismatchError("sketch latent grid does not match model latent");
    }

    RunResult result;
    StreamState state = init_state(model, spec);
    const Matrix original_text = state.text;
    const int total_steps = static_cast<int>(cfg.n_steps);
    const double delta = 1.0 / static_cast<double>(total_steps);

    std::function<Matrix(const Matrix&, int, int)> tune_hook;
    std::function<void(Matrix&, int, int)> logit_hook;
    if (options.tuning && !options.pre_softmax) {
        tune_hook = [&](const Matrix& attn, int layer, int step) {
            const Activation act = activation_at(profile, layer, step);
            return tune_attention(attn, mask, g, act, total_steps, step,
                                  {.per_region_norm = options.per_region_norm});
        };
    }
    if (options.tuning && options.pre_softmax) {
        logit_hook = [&](Matrix& logits, int layer, int step) {
            const Activation act = activation_at(profile, layer, step);
            add_presoftmax_bias(logits, mask, g, act, total_steps, step);
        };
    }

    for (int step = 0; step < total_steps; ++step) {
        StreamState work;
        work.text = options.carry_text ? state.text : original_text;
        work.image = state.image;
        work.step = step;
        for (int layer = 1; layer <= model.layer_count(); ++layer) {
            const LayerForward fwd =
                forward_layer(model, layer, work, step,
                              tune_hook ? &tune_hook : nullptr,
                              logit_hook ? &logit_hook : nullptr);
            if (options.capture) {
                CaptureRecord rec;
                rec.layer = layer;
                rec.step = step;
                rec.attention = fwd.attention_used;
                if (options.tuning && !options.pre_softmax) rec.raw = fwd.attention_raw;
                result.captures.push_back(std::move(rec));
            }
        }
        for (std::size_t i = 0; i < state.image.size(); ++i) {
            state.image.data()[i] += delta * (work.image.data()[i] - state.image.data()[i]);
        }
        state.text = options.carry_text ? work.text : original_text;
        state.step = step + 1;
    }
    result.state = std::move(state);
    return result;
}

void swap_token_rows(Matrix& text_a, Matrix& text_b, const PromptSpec& spec,
                     const std::set<TokenClass>& classes) {
    if (!text_a.same_shape(text_b)) {
        throw LayoutMismatchError("text streams differ in shape");
    }
    if (text_a.rows() != spec.token_count) {
        throw LayoutMismatchError("text stream rows do not match prompt tokens");
    }
    for (std::size_t t = 0; t < spec.token_count; ++t) {
        if (!classes.count(spec.token_classes[t])) continue;
        auto ra = text_a.row(t);
        auto rb = text_b.row(t);
        for (std::size_t c = 0; c < ra.size(); ++c) std::swap(ra[c], rb[c]);
    }
}

PairedRunResult paired_run(const MiniDit& model, const PromptSpec& spec_a,
                           const PromptSpec& spec_b, const PairedHook& hook,
                           bool capture, bool carry_text) {
    const auto& cfg = model.config();
    PairedRunResult result;
    StreamState state_a = init_state(model, spec_a);
    StreamState state_b = init_state(model, spec_b);
    const Matrix original_a = state_a.text;
    const Matrix original_b = state_b.text;
    const int total_steps = static_cast<int>(cfg.n_steps);
    const double delta = 1.0 / static_cast<double>(total_steps);

    for (int step = 0; step < total_steps; ++step) {
        StreamState work_a{carry_text ? state_a.text : original_a, state_a.image, step};
        StreamState work_b{carry_text ? state_b.text : original_b, state_b.image, step};
        for (int layer = 1; layer <= model.layer_count(); ++layer) {
            if (hook) hook(step, layer, work_a, work_b);
            const LayerForward fwd_a = forward_layer(model, layer, work_a, step, nullptr, nullptr);
            const LayerForward fwd_b = forward_layer(model, layer, work_b, step, nullptr, nullptr);
            if (capture) {
                result.a.captures.push_back({layer, step, fwd_a.attention_used, Matrix{}});
                result.b.captures.push_back({layer, step, fwd_b.attention_used, Matrix{}});
            }
        }
        for (std::size_t i = 0; i < state_a.image.size(); ++i) {
            state_a.image.data()[i] += delta * (work_a.image.data()[i] - state_a.image.data()[i]);
            state_b.image.data()[i] += delta * (work_b.image.data()[i] - state_b.image.data()[i]);
        }
        state_a.text = carry_text ? work_a.text : original_a;
        state_b.text = carry_text ? work_b.text : original_b;
        state_a.step = state_b.step = step + 1;
    }
    result.a.state = std::move(state_a);
    result.b.state = std::move(state_b);
    return result;
}

PairedRunResult token_exchange(const MiniDit& model, const PromptSpec& spec_a,
                               const PromptSpec& spec_b, const ExchangeSpec& exchange,
                               bool capture) {
    if (spec_a.token_count != spec_b.token_count) {
        throw LayoutMismatchError("prompts disagree on d_c");
    }
    if (spec_a.token_classes != spec_b.token_classes) {
        throw LayoutMismatchError("prompts disagree on per-token class layout");
    }
    const PairedHook hook = [&](int step, int layer, StreamState& a, StreamState& b) {
        if (exchange.classes.empty() || !exchange.covers(step, layer)) return;
        swap_token_rows(a.text, b.text, spec_a, exchange.classes);
    };
    return paired_run(model, spec_a, spec_b, hook, capture);
}

std::uint64_t state_checksum(const StreamState& state) {
    const std::uint64_t a = checksum(state.text);
    const std::uint64_t b = checksum(state.image);
    return mix(a, b);
}

}  // namespace attune
