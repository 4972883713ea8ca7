#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "attune/io.hpp"
#include "attune/prompt.hpp"

namespace attune {

/// Per-instance binary masks at latent resolution. Mask k corresponds to
/// instance id k+1 of the source grid; the background region is the
/// complement of the union (it never has its own mask).
struct SketchSet {
    std::size_t latent_h = 0;
    std::size_t latent_w = 0;
    std::vector<std::vector<std::uint8_t>> masks;  // each latent_h*latent_w, 0/1
    std::vector<std::size_t> binding;              // mask index -> sub-prompt index; empty until bound

    std::size_t cell_count() const { return latent_h * latent_w; }
    std::size_t mask_count() const { return masks.size(); }
    bool bound() const { return !binding.empty(); }
};

/// Loads an instance-id grid: PGM P2/P5 whose gray levels are ids, or a
/// whitespace-separated integer grid (sniffed by magic bytes). Id 0 is
/// unassigned; present ids must be contiguous from 1.
IntGrid load_sketch(const std::filesystem::path& path);
IntGrid load_sketch(std::istream& in);

/// Majority-vote pooling to an h x w latent grid. Grid dimensions must be
/// integer multiples of h and w. A cell takes id k when at least `threshold`
/// of its source pixels carry k; among qualifying ids the largest share wins
/// and ties go to the lower id. Cells where no id qualifies stay unassigned.
/// Throws DimError on non-divisible dimensions and EmptyMaskError when an
/// instance id vanishes entirely at latent resolution.
SketchSet to_latent(const IntGrid& grid, std::size_t h, std::size_t w, double threshold = 0.5);

/// Row-major indices (ascending) of the set pixels of mask k. Throws
/// BadIndexError for k >= mask_count.
std::vector<std::size_t> flatten(const SketchSet& set, std::size_t k);

/// Indices covered by no mask — the background region.
std::vector<std::size_t> complement_indices(const SketchSet& set);

/// Binds masks in order to non-background sub-prompts in order. The counts
/// must match exactly; a non-background sub-prompt without a mask (or a
/// leftover mask) is a BindingError.
void bind_to_prompt(SketchSet& set, const PromptSpec& spec);

/// The binding to use: the explicit one when set, otherwise the default
/// in-order assignment (validated the same way).
std::vector<std::size_t> effective_binding(const SketchSet& set, const PromptSpec& spec);

}  // namespace attune
