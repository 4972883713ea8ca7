// attune: desk-scale attention-tuning engine for unified text+image
// attention. Subcommands: masks, run, exchange, curve, stats, tune-demo.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attune/analysis.hpp"
#include "attune/error.hpp"
#include "attune/io.hpp"
#include "attune/masks.hpp"
#include "attune/model.hpp"
#include "attune/prompt.hpp"
#include "attune/schedule.hpp"
#include "attune/sketch.hpp"
#include "attune/tuner.hpp"

namespace fs = std::filesystem;
using namespace attune;

namespace {

struct LatentDims {
    std::size_t h = 64;
    std::size_t w = 64;
};

LatentDims parse_latent(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 == text.size()) {
        throw FormatError("--latent expects HxW, e.g. 8x8");
    }
    try {
        LatentDims dims;
        dims.h = std::stoul(text.substr(0, x));
        dims.w = std::stoul(text.substr(x + 1));
        if (dims.h == 0 || dims.w == 0) throw std::invalid_argument(text);
        return dims;
    } catch (const std::exception&) {
        throw FormatError("--latent expects positive HxW, got `" + text + "`");
    }
}

LayerRange parse_range(const std::string& text, const char* what) {
    // lo-hi with possibly negative bounds (steps use -1 for "none").
    const auto dash = text.find('-', text.empty() || text[0] != '-' ? 0 : 1);
    if (dash == std::string::npos) {
        throw FormatError(std::string(what) + " expects lo-hi, got `" + text + "`");
    }
    try {
        LayerRange r;
        r.lo = std::stoi(text.substr(0, dash));
        r.hi = std::stoi(text.substr(dash + 1));
        return r;
    } catch (const std::exception&) {
        throw FormatError(std::string(what) + " expects lo-hi, got `" + text + "`");
    }
}

fs::path resolve_out_dir(const std::string& flag_value) {
    fs::path dir;
    if (!flag_value.empty()) {
        dir = flag_value;
    } else if (const char* env = std::getenv("AST_ATTN_OUT")) {
        dir = env;
    } else {
        dir = ".";
    }
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

// Options shared by every subcommand that builds masks.
struct SceneOptions {
    std::string prompt_path;
    std::string sketch_path;
    std::string lexicon_path;
    bool strict_lexicon = false;
    std::string latent = "64x64";
    double threshold = 0.5;
    MaskOptions mask;
};

void add_scene_options(CLI::App* cmd, SceneOptions& opt) {
    cmd->add_option("--prompt", opt.prompt_path, "prompt spec file")->required();
    cmd->add_option("--sketch", opt.sketch_path, "sketch file (PGM P2/P5 or integer grid)")
        ->required();
    cmd->add_option("--lexicon", opt.lexicon_path, "word-class lexicon file");
    cmd->add_flag("--strict", opt.strict_lexicon, "error on words missing from the lexicon");
    cmd->add_option("--latent", opt.latent, "latent grid HxW (default 64x64)");
    cmd->add_option("--threshold", opt.threshold, "majority-pool threshold (default 0.5)");
    cmd->add_option("--lambda-cross", opt.mask.lambda_cross, "I2T tuning strength (default 5.0)");
    cmd->add_option("--lambda-self", opt.mask.lambda_self,
                    "T2T/I2I tuning strength (default 3.5)");
    cmd->add_flag("!--no-i2i-background", opt.mask.i2i_background,
                  "drop the complement region from the I2I mask");
    cmd->add_option("--gamma-text", opt.mask.gamma_text, "text-query gain factor (default 4.0)");
    cmd->add_option("--gamma-image", opt.mask.gamma_image,
                    "image-query gain factor (default 1.0)");
    cmd->add_flag("--clamp-g", opt.mask.clamp_g, "clamp sensitivity gains to [0,1]");
}

struct Scene {
    PromptSpec spec;
    SketchSet sketch;
    FullMask mask;
    SensitivityVector g;
};

Scene load_scene(const SceneOptions& opt) {
    Scene scene;
    scene.spec = parse_prompt_spec_file(opt.prompt_path);
    if (!opt.lexicon_path.empty()) {
        scene.spec = classify_tokens(scene.spec, parse_lexicon_file(opt.lexicon_path),
                                     opt.strict_lexicon);
    }
    const LatentDims dims = parse_latent(opt.latent);
    scene.sketch = to_latent(load_sketch(opt.sketch_path), dims.h, dims.w, opt.threshold);
    bind_to_prompt(scene.sketch, scene.spec);
    scene.mask = assemble(scene.spec, scene.sketch, opt.mask);
    scene.g = build_sensitivity(scene.sketch, opt.mask.gamma_text, opt.mask.gamma_image,
                                opt.mask.clamp_g);
    return scene;
}

IntGrid mask_to_grid(const Matrix& m) {
    IntGrid g;
    g.height = m.rows();
    g.width = m.cols();
    g.values.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) g.values[i] = m.data()[i] != 0.0 ? 1 : 0;
    return g;
}

double count_ones(const Matrix& m) {
    double n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) n += m.data()[i];
    return n;
}

// Model options shared by run and exchange.
struct ModelOptions {
    std::uint64_t seed = 0;
    std::size_t d_model = 16;
    std::size_t n_double = 2;
    std::size_t n_single = 3;
    std::size_t n_steps = 8;
};

void add_model_options(CLI::App* cmd, ModelOptions& opt) {
    cmd->add_option("--seed", opt.seed, "model seed (default 0)");
    cmd->add_option("--dmodel", opt.d_model, "embedding width (default 16)");
    cmd->add_option("--double", opt.n_double, "double-stream block count (default 2)");
    cmd->add_option("--single", opt.n_single, "single-stream block count (default 3)");
    cmd->add_option("--steps", opt.n_steps, "denoising steps (default 8)");
}

MiniDitConfig make_config(const ModelOptions& opt, const LatentDims& dims,
                          std::size_t text_tokens) {
    MiniDitConfig cfg;
    cfg.text_tokens = text_tokens;
    cfg.latent_h = dims.h;
    cfg.latent_w = dims.w;
    cfg.d_model = opt.d_model;
    cfg.n_double = opt.n_double;
    cfg.n_single = opt.n_single;
    cfg.n_steps = opt.n_steps;
    cfg.seed = opt.seed;
    return cfg;
}

ScheduleProfile resolve_profile(const std::string& name, const MiniDitConfig& cfg) {
    const int layers = cfg.layer_count();
    const int steps = static_cast<int>(cfg.n_steps);
    if (name.empty() || name == "toy") {
        return scale_profile(default_profile(), layers, steps);
    }
    if (name.rfind("toy-", 0) == 0) {
        // toy-N: the reference ratios scaled to N layers. N must match the
        // model or the run rejects the profile.
        try {
            return scale_profile(default_profile(), std::stoi(name.substr(4)), steps);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw FormatError("bad profile name `" + name + "`");
        }
    }
    if (name == "flux-dev-57") return default_profile();
    if (name == "full-layer") return full_layer_profile(layers, steps);
    if (name == "empty") return empty_profile(layers, steps);
    return parse_profile_file(name);
}

void write_run_summary(const fs::path& path, const MiniDitConfig& cfg,
                       const ScheduleProfile& profile, const RunOptions& opts,
                       const RunResult& result) {
    auto out = open_out(path);
    out << "d_c = " << cfg.text_tokens << "\n";
    out << "latent = " << cfg.latent_h << "x" << cfg.latent_w << "\n";
    out << "d_model = " << cfg.d_model << "\n";
    out << "blocks = " << cfg.n_double << "+" << cfg.n_single << "\n";
    out << "steps = " << cfg.n_steps << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "tuning = " << (opts.tuning ? 1 : 0) << "\n";
    out << "pre_softmax = " << (opts.pre_softmax ? 1 : 0) << "\n";
    out << "carry_text = " << (opts.carry_text ? 1 : 0) << "\n";
    out << "window = " << profile.window_steps << "\n";
    out << "captures = " << result.captures.size() << "\n";
    out << "text_checksum = " << checksum_hex(checksum(result.state.text)) << "\n";
    out << "image_checksum = " << checksum_hex(checksum(result.state.image)) << "\n";
}

int cmd_masks(const SceneOptions& scene_opt, const std::string& out_flag) {
    const Scene scene = load_scene(scene_opt);
    const fs::path dir = resolve_out_dir(out_flag);

    write_pgm_file(dir / "t2t.pgm", mask_to_grid(scene.mask.t2t.data), 1);
    write_pgm_file(dir / "i2i.pgm", mask_to_grid(scene.mask.i2i.data), 1);
    write_pgm_file(dir / "i2t.pgm", mask_to_grid(scene.mask.i2t.data), 1);

    auto sens = open_out(dir / "sensitivity.csv");
    sens << "index,g_text,g_image\n";
    for (std::size_t j = 0; j < scene.g.g_text.size(); ++j) {
        sens << j << ',' << format_double(scene.g.g_text[j]) << ','
             << format_double(scene.g.g_image[j]) << '\n';
    }

    auto meta = open_out(dir / "mask_meta.txt");
    meta << "d_c = " << scene.mask.d_c << "\n";
    meta << "hw = " << scene.mask.hw << "\n";
    meta << "lambda_cross = " << format_double(scene.mask.lambda_cross) << "\n";
    meta << "lambda_self = " << format_double(scene.mask.lambda_self) << "\n";
    meta << "i2i_background = " << (scene_opt.mask.i2i_background ? 1 : 0) << "\n";
    meta << "t2t_ones = " << count_ones(scene.mask.t2t.data) << "\n";
    meta << "i2i_ones = " << count_ones(scene.mask.i2i.data) << "\n";
    meta << "i2t_ones = " << count_ones(scene.mask.i2t.data) << "\n";
    meta << "classes =";
    for (TokenClass c : scene.mask.token_classes) meta << ' ' << to_string(c);
    meta << "\n";
    return 0;
}

int cmd_run(const SceneOptions& scene_opt, const ModelOptions& model_opt,
            const std::string& profile_name, const RunOptions& run_opts,
            const std::vector<std::size_t>& heatmap_tokens, const std::string& out_flag) {
    const Scene scene = load_scene(scene_opt);
    const LatentDims dims = parse_latent(scene_opt.latent);
    const MiniDitConfig cfg = make_config(model_opt, dims, scene.spec.token_count);
    const ScheduleProfile profile = resolve_profile(profile_name, cfg);
    const MiniDit model(cfg);

    RunOptions opts = run_opts;
    if (!heatmap_tokens.empty()) opts.capture = true;
    const RunResult result =
        run(model, scene.spec, scene.sketch, scene.mask, scene.g, profile, opts);

    const fs::path dir = resolve_out_dir(out_flag);
    write_run_summary(dir / "run_summary.txt", cfg, profile, opts, result);
    if (opts.capture) {
        auto out = open_out(dir / "captures.csv");
        write_captures_csv(out, result.captures, scene.mask.d_c, scene.mask.hw);
    }
    for (std::size_t token : heatmap_tokens) {
        // Mean I2T response over every captured map.
        Matrix mean(cfg.latent_h, cfg.latent_w, 0.0);
        for (const CaptureRecord& rec : result.captures) {
            const RegionView view = extract_regions(rec.attention, scene.mask.d_c, scene.mask.hw);
            const Matrix heat = token_heatmap(view, token, cfg.latent_h, cfg.latent_w);
            for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] += heat.data()[i];
        }
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean.data()[i] /= static_cast<double>(result.captures.size());
        }
        const std::string stem = "token" + std::to_string(token) + "_heatmap";
        write_pgm_file(dir / (stem + ".pgm"), to_heatmap(mean, cfg.latent_h, cfg.latent_w), 255);
        auto raw = open_out(dir / (stem + ".csv"));
        raw << "row,col,value\n";
        for (std::size_t r = 0; r < cfg.latent_h; ++r) {
            for (std::size_t c = 0; c < cfg.latent_w; ++c) {
                raw << r << ',' << c << ',' << format_double(mean(r, c)) << '\n';
            }
        }
    }
    return 0;
}

int cmd_exchange(const std::string& prompt_a, const std::string& prompt_b,
                 const std::string& lexicon_path, const std::string& classes_text,
                 const std::string& layers_text, const std::string& steps_text,
                 const ModelOptions& model_opt, const std::string& latent_text, bool capture,
                 const std::string& out_flag) {
    PromptSpec spec_a = parse_prompt_spec_file(prompt_a);
    PromptSpec spec_b = parse_prompt_spec_file(prompt_b);
    if (!lexicon_path.empty()) {
        const Lexicon lex = parse_lexicon_file(lexicon_path);
        spec_a = classify_tokens(spec_a, lex);
        spec_b = classify_tokens(spec_b, lex);
    }

    ExchangeSpec ex;
    std::stringstream classes(classes_text);
    std::string item;
    while (std::getline(classes, item, ',')) {
        if (item.empty()) continue;
        const auto cls = token_class_from_string(item);
        if (!cls) throw FormatError("unknown token class `" + item + "`");
        ex.classes.insert(*cls);
    }
    ex.layers = parse_range(layers_text, "--layers");
    const LayerRange steps = parse_range(steps_text, "--steps-range");
    ex.step_lo = steps.lo;
    ex.step_hi = steps.hi;

    const LatentDims dims = parse_latent(latent_text);
    const MiniDitConfig cfg = make_config(model_opt, dims, spec_a.token_count);
    const MiniDit model(cfg);
    const PairedRunResult result = token_exchange(model, spec_a, spec_b, ex, capture);

    const fs::path dir = resolve_out_dir(out_flag);
    auto summary = open_out(dir / "exchange_summary.txt");
    summary << "classes =";
    for (TokenClass c : ex.classes) summary << ' ' << to_string(c);
    summary << "\n";
    summary << "layers = " << ex.layers.lo << " " << ex.layers.hi << "\n";
    summary << "steps = " << ex.step_lo << " " << ex.step_hi << "\n";
    summary << "a_text_checksum = " << checksum_hex(checksum(result.a.state.text)) << "\n";
    summary << "a_image_checksum = " << checksum_hex(checksum(result.a.state.image)) << "\n";
    summary << "b_text_checksum = " << checksum_hex(checksum(result.b.state.text)) << "\n";
    summary << "b_image_checksum = " << checksum_hex(checksum(result.b.state.image)) << "\n";
    if (capture) {
        const std::size_t hw = cfg.image_tokens();
        auto csv_a = open_out(dir / "captures_a.csv");
        write_captures_csv(csv_a, result.a.captures, spec_a.token_count, hw);
        auto csv_b = open_out(dir / "captures_b.csv");
        write_captures_csv(csv_b, result.b.captures, spec_b.token_count, hw);
    }
    return 0;
}

int cmd_curve(double lambda, int total_steps, int step, int m, std::size_t samples,
              const std::string& out_flag) {
    const auto curve = scaling_curve(lambda, total_steps, step, m, samples);
    const fs::path dir = resolve_out_dir(out_flag);
    auto out = open_out(dir / "curve.csv");
    write_curve_csv(out, curve);
    return 0;
}

int cmd_stats(const std::string& captures_path, const std::string& prompt_path,
              const std::string& lexicon_path, const std::string& ranges_text,
              const std::string& out_flag) {
    std::ifstream captures_in(captures_path);
    if (!captures_in) throw FormatError("cannot open captures: " + captures_path);
    const auto captures = read_captures_csv(captures_in);

    PromptSpec spec = parse_prompt_spec_file(prompt_path);
    if (!lexicon_path.empty()) {
        spec = classify_tokens(spec, parse_lexicon_file(lexicon_path));
    }

    std::vector<LayerRange> ranges;
    std::stringstream ss(ranges_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) ranges.push_back(parse_range(item, "--ranges"));
    }
    if (ranges.empty()) throw FormatError("--ranges needs at least one lo-hi entry");

    const auto stats = layer_range_stats(captures, ranges, spec);
    const fs::path dir = resolve_out_dir(out_flag);
    auto out = open_out(dir / "stats.csv");
    write_stats_csv(out, stats);
    return 0;
}

int cmd_tune_demo(const SceneOptions& scene_opt, std::uint64_t seed, int total_steps, int step,
                  const std::string& out_flag) {
    const Scene scene = load_scene(scene_opt);
    const std::size_t side = scene.mask.side();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 2.0);
    Matrix logits(side, side);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = dist(rng);
    const Matrix before = row_softmax(logits);

    Activation act;
    act.t2t = true;
    act.i2i = true;
    act.i2t_classes = {TokenClass::Attribute, TokenClass::Instance, TokenClass::Background};
    const Matrix after = tune_attention(before, scene.mask, scene.g, act, total_steps, step);

    const fs::path dir = resolve_out_dir(out_flag);
    write_pgm_file(dir / "before.pgm", to_heatmap(before, side, side), 255);
    write_pgm_file(dir / "after.pgm", to_heatmap(after, side, side), 255);

    // Mean I2T mass on in-mask vs out-of-mask cells, before and after.
    double in_before = 0, in_after = 0, out_before = 0, out_after = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t p = 0; p < scene.mask.hw; ++p) {
        for (std::size_t j = 0; j < scene.mask.d_c; ++j) {
            if (scene.mask.i2t.data(p, j) != 0.0) {
                in_before += before(scene.mask.d_c + p, j);
                in_after += after(scene.mask.d_c + p, j);
                ++n_in;
            } else {
                out_before += before(scene.mask.d_c + p, j);
                out_after += after(scene.mask.d_c + p, j);
                ++n_out;
            }
        }
    }
    double worst = 0.0;
    for (std::size_t r = 0; r < side; ++r) {
        double sum = 0.0;
        for (double v : after.row(r)) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    auto summary = open_out(dir / "tune_summary.txt");
    summary << "beta_cross = "
            << format_double(beta({scene.mask.lambda_cross, total_steps, step})) << "\n";
    summary << "beta_self = "
            << format_double(beta({scene.mask.lambda_self, total_steps, step})) << "\n";
    if (n_in) {
        summary << "i2t_in_mask_mean_before = " << format_double(in_before / n_in) << "\n";
        summary << "i2t_in_mask_mean_after = " << format_double(in_after / n_in) << "\n";
    }
    if (n_out) {
        summary << "i2t_out_mask_mean_before = " << format_double(out_before / n_out) << "\n";
        summary << "i2t_out_mask_mean_after = " << format_double(out_after / n_out) << "\n";
    }
    summary << "max_row_sum_dev = " << format_double(worst) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention tuning engine for unified text+image attention"};
    app.require_subcommand(1);

    // masks
    SceneOptions masks_scene;
    std::string masks_out;
    auto* masks_cmd = app.add_subcommand("masks", "build region masks and sensitivity gains");
    add_scene_options(masks_cmd, masks_scene);
    masks_cmd->add_option("--out", masks_out, "output directory (default $AST_ATTN_OUT or .)");

    // run
    SceneOptions run_scene;
    ModelOptions run_model;
    RunOptions run_opts;
    std::string run_profile, run_out;
    std::vector<std::size_t> heatmap_tokens;
    bool run_no_tuning = false;
    auto* run_cmd = app.add_subcommand("run", "full multi-step toy run with tuning hooks");
    add_scene_options(run_cmd, run_scene);
    add_model_options(run_cmd, run_model);
    run_cmd->add_option("--profile", run_profile,
                        "schedule: toy (default), flux-dev-57, full-layer, empty, or a file");
    run_cmd->add_flag("--no-tuning", run_no_tuning, "disable tuning");
    run_cmd->add_flag("--pre-softmax", run_opts.pre_softmax,
                      "apply the comparison baseline before softmax");
    run_cmd->add_flag("--carry-text", run_opts.carry_text,
                      "feed the text branch output into the next step");
    run_cmd->add_flag("--per-region-norm", run_opts.per_region_norm,
                      "renormalize per region instead of per full row");
    run_cmd->add_flag("--capture", run_opts.capture, "write captures.csv");
    run_cmd->add_option("--heatmap-token", heatmap_tokens,
                        "emit the mean I2T heatmap of this token (repeatable)");
    run_cmd->add_option("--out", run_out, "output directory (default $AST_ATTN_OUT or .)");

    // exchange
    std::string ex_prompt_a, ex_prompt_b, ex_lexicon, ex_classes, ex_layers, ex_steps;
    std::string ex_latent = "8x8", ex_out;
    ModelOptions ex_model;
    bool ex_capture = false;
    auto* ex_cmd = app.add_subcommand("exchange", "step-layer-wise token exchange between prompts");
    ex_cmd->add_option("--prompt-a", ex_prompt_a, "first prompt spec")->required();
    ex_cmd->add_option("--prompt-b", ex_prompt_b, "second prompt spec")->required();
    ex_cmd->add_option("--lexicon", ex_lexicon, "word-class lexicon file");
    ex_cmd->add_option("--classes", ex_classes, "classes to swap, comma separated")->required();
    ex_cmd->add_option("--layers", ex_layers, "layer window lo-hi (1-indexed)")->required();
    ex_cmd->add_option("--steps-range", ex_steps, "step window lo-hi (0-indexed)")->required();
    ex_cmd->add_option("--latent", ex_latent, "latent grid HxW (default 8x8)");
    add_model_options(ex_cmd, ex_model);
    ex_cmd->add_flag("--capture", ex_capture, "write captures for both streams");
    ex_cmd->add_option("--out", ex_out, "output directory (default $AST_ATTN_OUT or .)");

    // curve
    double curve_lambda = 4.0;
    int curve_total = 32, curve_step = 0, curve_m = 1;
    std::size_t curve_samples = 1001;
    std::string curve_out;
    auto* curve_cmd = app.add_subcommand("curve", "export the a*exp(beta*(m-a)) scaling curve");
    curve_cmd->add_option("--lambda", curve_lambda, "tuning strength (default 4.0)");
    curve_cmd->add_option("--T", curve_total, "total steps (default 32)");
    curve_cmd->add_option("--step", curve_step, "completed steps (default 0)");
    curve_cmd->add_option("--m", curve_m, "mask value 0 or 1 (default 1)")
        ->check(CLI::Range(0, 1));
    curve_cmd->add_option("--samples", curve_samples, "grid points on [0,1] (default 1001)");
    curve_cmd->add_option("--out", curve_out, "output directory (default $AST_ATTN_OUT or .)");

    // stats
    std::string stats_captures, stats_prompt, stats_lexicon, stats_ranges, stats_out;
    auto* stats_cmd = app.add_subcommand("stats", "layer-range statistics from a captures CSV");
    stats_cmd->add_option("--captures", stats_captures, "captures.csv from a run")->required();
    stats_cmd->add_option("--prompt", stats_prompt, "prompt spec file")->required();
    stats_cmd->add_option("--lexicon", stats_lexicon, "word-class lexicon file");
    stats_cmd->add_option("--ranges", stats_ranges, "layer ranges, e.g. 6-10,20-24,50-54")
        ->required();
    stats_cmd->add_option("--out", stats_out, "output directory (default $AST_ATTN_OUT or .)");

    // tune-demo
    SceneOptions demo_scene;
    std::uint64_t demo_seed = 0;
    int demo_total = 32, demo_step = 0;
    std::string demo_out;
    auto* demo_cmd =
        app.add_subcommand("tune-demo", "tune one seeded random map and report the shift");
    add_scene_options(demo_cmd, demo_scene);
    demo_cmd->add_option("--seed", demo_seed, "seed for the random map (default 0)");
    demo_cmd->add_option("--T", demo_total, "total steps (default 32)");
    demo_cmd->add_option("--step", demo_step, "completed steps (default 0)");
    demo_cmd->add_option("--out", demo_out, "output directory (default $AST_ATTN_OUT or .)");

    try {
        app.parse(argc, argv);
        if (masks_cmd->parsed()) return cmd_masks(masks_scene, masks_out);
        if (run_cmd->parsed()) {
            run_opts.tuning = !run_no_tuning;
            return cmd_run(run_scene, run_model, run_profile, run_opts, heatmap_tokens, run_out);
        }
        if (ex_cmd->parsed()) {
            return cmd_exchange(ex_prompt_a, ex_prompt_b, ex_lexicon, ex_classes, ex_layers,
                                ex_steps, ex_model, ex_latent, ex_capture, ex_out);
        }
        if (curve_cmd->parsed()) {
            return cmd_curve(curve_lambda, curve_total, curve_step, curve_m, curve_samples,
                             curve_out);
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(stats_captures, stats_prompt, stats_lexicon, stats_ranges, stats_out);
        }
        if (demo_cmd->parsed()) {
            return cmd_tune_demo(demo_scene, demo_seed, demo_total, demo_step, demo_out);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 1;
    }
}
