#include <random>
#include <sstream>

#include "attune/error.hpp"
#include "attune/masks.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace attune;

namespace {

PromptSpec parse(const std::string& text) {
    std::istringstream in(text);
    return parse_prompt_spec(in);
}

SketchSet block_sketch_2x2_on_4x4() {
    IntGrid grid;
    grid.height = grid.width = 4;
    grid.values.assign(16, 0);
    grid.at(0, 0) = grid.at(0, 1) = grid.at(1, 0) = grid.at(1, 1) = 1;
    return to_latent(grid, 4, 4);
}

const char* kScenePrompt =
    "d_c = 7\n"
    "sub = \"Red cube\" 0 3\n"
    "sub = \"in a forest\" 3 7 background\n";

}  // namespace

TEST_CASE("build_t2t: block-diagonal structure for two segments") {
    const RegionMask mask = build_t2t(parse(kScenePrompt));
    REQUIRE(mask.data.rows() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            const bool same = (i < 3 && j < 3) || (i >= 3 && j >= 3);
            CHECK(mask.data(i, j) == (same ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("build_t2t: single segment saturates") {
    const RegionMask mask = build_t2t(parse("d_c = 4\nsub = \"all\" 0 4\n"));
    for (std::size_t i = 0; i < mask.data.size(); ++i) CHECK(mask.data.data()[i] == 1.0);
}

TEST_CASE("build_t2t: uncovered tokens give zero rows and columns") {
    const PromptSpec spec = parse("d_c = 5\nsub = \"a\" 0 2\nsub = \"b\" 3 5\n");
    const RegionMask mask = build_t2t(spec);
    CHECK(mask.data == oracle::t2t(spec));
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(mask.data(2, j) == 0.0);
        CHECK(mask.data(j, 2) == 0.0);
    }
}

TEST_CASE("build_i2i: one block plus complement") {
    const SketchSet set = block_sketch_2x2_on_4x4();
    const RegionMask mask = build_i2i(set, true);
    CHECK(mask.data == oracle::i2i(set, true));
    double ones = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) ones += mask.data.data()[i];
    CHECK(ones == 4.0 * 4.0 + 12.0 * 12.0);
}

TEST_CASE("build_i2i: background only saturates") {
    SketchSet set;
    set.latent_h = set.latent_w = 3;
    const RegionMask mask = build_i2i(set, true);
    for (std::size_t i = 0; i < mask.data.size(); ++i) CHECK(mask.data.data()[i] == 1.0);
}

TEST_CASE("build_i2i: two single-cell sketches without complement") {
    IntGrid grid;
    grid.height = grid.width = 3;
    grid.values.assign(9, 0);
    grid.at(0, 0) = 1;
    grid.at(2, 2) = 2;
    const SketchSet set = to_latent(grid, 3, 3);
    const RegionMask mask = build_i2i(set, false);
    double ones = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) ones += mask.data.data()[i];
    CHECK(ones == 2.0);
    CHECK(mask.data(0, 0) == 1.0);
    CHECK(mask.data(8, 8) == 1.0);
}

TEST_CASE("build_i2t: sketch columns for the instance, complement for background") {
    const PromptSpec spec = parse(kScenePrompt);
    const SketchSet set = block_sketch_2x2_on_4x4();
    const RegionMask mask = build_i2t(spec, set);
    CHECK(mask.data == oracle::i2t(spec, set));
    const auto sketch_cells = flatten(set, 0);
    for (std::size_t p = 0; p < 16; ++p) {
        const bool in_sketch =
            std::find(sketch_cells.begin(), sketch_cells.end(), p) != sketch_cells.end();
        for (std::size_t j = 0; j < 7; ++j) {
            const bool expect = j < 3 ? in_sketch : !in_sketch;
            CHECK(mask.data(p, j) == (expect ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("build_i2t: single-cell latent") {
    IntGrid grid;
    grid.height = grid.width = 1;
    grid.values = {1};
    const SketchSet set = to_latent(grid, 1, 1);
    const PromptSpec spec = parse("d_c = 3\nsub = \"a\" 0 2\n");
    const RegionMask mask = build_i2t(spec, set);
    REQUIRE(mask.data.rows() == 1);
    CHECK(mask.data(0, 0) == 1.0);
    CHECK(mask.data(0, 1) == 1.0);
    CHECK(mask.data(0, 2) == 0.0);
}

TEST_CASE("build_i2t: missing mask for a non-background sub-prompt") {
    const PromptSpec spec = parse("d_c = 4\nsub = \"a\" 0 2\nsub = \"b\" 2 4\n");
    const SketchSet set = block_sketch_2x2_on_4x4();  // one mask, two instances
    CHECK_THROWS_AS(build_i2t(spec, set), BindingError);
}

TEST_CASE("builders match the brute-force predicates on random instances") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n_inst = 1 + trial % 3;
        const bool with_bg = trial % 2 == 0;
        const SketchSet sketch = oracle::random_sketch(rng, n_inst);
        const PromptSpec spec = oracle::random_prompt(rng, n_inst, with_bg);
        CHECK(build_t2t(spec).data == oracle::t2t(spec));
        CHECK(build_i2i(sketch, true).data == oracle::i2i(sketch, true));
        CHECK(build_i2i(sketch, false).data == oracle::i2i(sketch, false));
        CHECK(build_i2t(spec, sketch).data == oracle::i2t(spec, sketch));
    }
}

TEST_CASE("region masks are symmetric where they should be") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const SketchSet sketch = oracle::random_sketch(rng, 2);
        const PromptSpec spec = oracle::random_prompt(rng, 2, true);
        const Matrix t = build_t2t(spec).data;
        const Matrix i = build_i2i(sketch, trial % 2 == 0).data;
        CHECK(t == transpose(t));
        CHECK(i == transpose(i));
    }
}

TEST_CASE("build_sensitivity: quarter-area sketch hits the closed form") {
    const SketchSet set = block_sketch_2x2_on_4x4();
    const SensitivityVector g = build_sensitivity(set);
    const auto cells = flatten(set, 0);
    for (std::size_t j = 0; j < 16; ++j) {
        const bool inside = std::find(cells.begin(), cells.end(), j) != cells.end();
        if (inside) {
            CHECK(g.g_text[j] == 0.0);    // 1 - 4 * (4/16)
            CHECK(g.g_image[j] == 0.75);  // 1 - 1 * (4/16)
        } else {
            CHECK(g.g_text[j] == 1.0);
            CHECK(g.g_image[j] == 1.0);
        }
    }
}

TEST_CASE("build_sensitivity: no masks means unit gain") {
    SketchSet set;
    set.latent_h = set.latent_w = 4;
    const SensitivityVector g = build_sensitivity(set);
    for (double v : g.g_text) CHECK(v == 1.0);
    for (double v : g.g_image) CHECK(v == 1.0);
}

TEST_CASE("build_sensitivity: full-frame sketch zeroes the image gain") {
    IntGrid grid;
    grid.height = grid.width = 4;
    grid.values.assign(16, 1);
    const SketchSet set = to_latent(grid, 4, 4);
    const SensitivityVector g = build_sensitivity(set);
    for (double v : g.g_image) CHECK(v == 0.0);
    for (double v : g.g_text) CHECK(v == -3.0);  // unclamped by default
    const SensitivityVector clamped = build_sensitivity(set, 4.0, 1.0, true);
    for (double v : clamped.g_text) CHECK(v == 0.0);
}

TEST_CASE("build_sensitivity: agrees with the explicit outer-product route") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 30; ++trial) {
        const SketchSet sketch = oracle::random_sketch(rng, 1 + trial % 3);
        const SensitivityVector fast = build_sensitivity(sketch);
        const SensitivityVector slow = oracle::sensitivity(sketch, 4.0, 1.0);
        for (std::size_t j = 0; j < sketch.cell_count(); ++j) {
            CHECK(std::abs(fast.g_text[j] - slow.g_text[j]) <= 1e-12);
            CHECK(std::abs(fast.g_image[j] - slow.g_image[j]) <= 1e-12);
        }
    }
}

TEST_CASE("build_sensitivity: gain depends only on the containing region's area") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const SketchSet sketch = oracle::random_sketch(rng, 2);
        const SensitivityVector g = build_sensitivity(sketch);
        const double hw = static_cast<double>(sketch.cell_count());
        for (std::size_t k = 0; k < sketch.mask_count(); ++k) {
            const auto cells = flatten(sketch, k);
            const double expect = 1.0 - 4.0 * static_cast<double>(cells.size()) / hw;
            for (std::size_t j : cells) {
                CHECK(g.g_text[j] == doctest::Approx(expect).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("assemble: default lambdas and class copy") {
    const PromptSpec spec = parse(kScenePrompt);
    const SketchSet set = block_sketch_2x2_on_4x4();
    const FullMask full = assemble(spec, set);
    CHECK(full.lambda_for(Region::I2T) == 5.0);
    CHECK(full.lambda_for(Region::T2T) == 3.5);
    CHECK(full.lambda_for(Region::I2I) == 3.5);
    CHECK(full.d_c == 7);
    CHECK(full.hw == 16);
    CHECK(full.token_classes == spec.token_classes);

    MaskOptions ablation;
    ablation.lambda_cross = 4.0;
    ablation.lambda_self = 4.0;
    const FullMask flat = assemble(spec, set, ablation);
    CHECK(flat.lambda_for(Region::I2T) == 4.0);
    CHECK(flat.lambda_for(Region::I2I) == 4.0);
}
