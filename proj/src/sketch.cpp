#include "attune/sketch.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <string>

#include "attune/error.hpp"

namespace attune {

namespace {

void check_contiguous_ids(const IntGrid& grid) {
    int max_id = 0;
    for (int v : grid.values) max_id = std::max(max_id, v);
    std::vector<bool> seen(static_cast<std::size_t>(max_id) + 1, false);
    for (int v : grid.values) seen[static_cast<std::size_t>(v)] = true;
    for (int id = 1; id <= max_id; ++id) {
        if (!seen[static_cast<std::size_t>(id)]) {
            throw NonContiguousIdsError("instance id " + std::to_string(id) +
                                        " missing below max id " + std::to_string(max_id));
        }
    }
}

}  // namespace

IntGrid load_sketch(std::istream& in) {
    // Sniff the PGM magic; anything else is treated as a text grid.
    const int c0 = in.peek();
    IntGrid grid;
    if (c0 == 'P') {
        grid = read_pgm(in);
    } else {
        grid = read_int_grid(in);
    }
    check_contiguous_ids(grid);
    return grid;
}

IntGrid load_sketch(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open sketch: " + path.string());
    return load_sketch(in);
}

SketchSet to_latent(const IntGrid& grid, std::size_t h, std::size_t w, double threshold) {
    if (h == 0 || w == 0) throw DimError("latent dimensions must be positive");
    if (grid.height % h != 0 || grid.width % w != 0) {
        throw DimError("grid " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                       " is not an integer multiple of latent " + std::to_string(h) + "x" +
                       std::to_string(w));
    }
    const std::size_t bh = grid.height / h;
    const std::size_t bw = grid.width / w;
    const double block = static_cast<double>(bh * bw);

    int max_id = 0;
    for (int v : grid.values) max_id = std::max(max_id, v);

    SketchSet set;
    set.latent_h = h;
    set.latent_w = w;
    set.masks.assign(static_cast<std::size_t>(max_id),
                     std::vector<std::uint8_t>(h * w, 0));

    std::vector<std::size_t> counts(static_cast<std::size_t>(max_id) + 1, 0);
    for (std::size_t cy = 0; cy < h; ++cy) {
        for (std::size_t cx = 0; cx < w; ++cx) {
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t y = cy * bh; y < (cy + 1) * bh; ++y) {
                for (std::size_t x = cx * bw; x < (cx + 1) * bw; ++x) {
                    ++counts[static_cast<std::size_t>(grid.at(y, x))];
                }
            }
            // Largest qualifying share wins; ties go to the lower id.
            int winner = 0;
            std::size_t best = 0;
            for (int id = 1; id <= max_id; ++id) {
                const std::size_t n = counts[static_cast<std::size_t>(id)];
                if (static_cast<double>(n) + 1e-9 < threshold * block) continue;
                if (n > best) {
                    best = n;
                    winner = id;
                }
            }
            if (winner > 0) {
                set.masks[static_cast<std::size_t>(winner - 1)][cy * w + cx] = 1;
            }
        }
    }

    for (std::size_t k = 0; k < set.masks.size(); ++k) {
        const bool any = std::any_of(set.masks[k].begin(), set.masks[k].end(),
                                     [](std::uint8_t v) { return v != 0; });
        if (!any) {
            throw EmptyMaskError("instance id " + std::to_string(k + 1) +
                                 " has no cells at latent resolution " +
                                 std::to_string(h) + "x" + std::to_string(w));
        }
    }
    return set;
}

std::vector<std::size_t> flatten(const SketchSet& set, std::size_t k) {
    if (k >= set.mask_count()) {
        throw BadIndexError("mask index " + std::to_string(k) + " out of range (" +
                            std::to_string(set.mask_count()) + " masks)");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < set.masks[k].size(); ++i) {
        if (set.masks[k][i]) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> complement_indices(const SketchSet& set) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < set.cell_count(); ++i) {
        bool covered = false;
        for (const auto& mask : set.masks) {
            if (mask[i]) { covered = true; break; }
        }
        if (!covered) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> effective_binding(const SketchSet& set, const PromptSpec& spec) {
    if (set.bound()) {
        if (set.binding.size() != set.mask_count()) {
            throw BindingError("binding size does not match mask count");
        }
        return set.binding;
    }
    const auto instances = spec.instance_sub_prompts();
    if (instances.size() != set.mask_count()) {
        throw BindingError(std::to_string(instances.size()) +
                           " non-background sub-prompts vs " +
                           std::to_string(set.mask_count()) + " masks");
    }
    return instances;
}

void bind_to_prompt(SketchSet& set, const PromptSpec& spec) {
    set.binding.clear();
    set.binding = effective_binding(set, spec);
}

}  // namespace attune
