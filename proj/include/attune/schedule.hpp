#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>

#include "attune/prompt.hpp"

namespace attune {

/// Inclusive 1-indexed layer range, matching how transformer layers are
/// numbered in prose. An empty range is lo > hi.
struct LayerRange {
    int lo = 1;
    int hi = 0;

    bool contains(int layer) const { return layer >= lo && layer <= hi; }
    friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

/// Which regions and token classes are tuned at each (layer, step). Layer
/// indices are 1-based inclusive; steps count completed denoising steps,
/// 0-based. This is the one place both conventions meet.
struct ScheduleProfile {
    int n_layers = 57;
    int n_steps = 32;
    int window_steps = 16;  // active step prefix
    LayerRange i2t_instance{6, 34};
    LayerRange i2t_background{20, 24};
    LayerRange i2t_attribute{25, 57};
    LayerRange t2t{20, 57};
    LayerRange i2i{11, 49};

    friend bool operator==(const ScheduleProfile&, const ScheduleProfile&) = default;
};

struct Activation {
    bool t2t = false;
    bool i2i = false;
    std::set<TokenClass> i2t_classes;

    bool empty() const { return !t2t && !i2i && i2t_classes.empty(); }
    friend bool operator==(const Activation&, const Activation&) = default;
};

/// The 57-layer / 32-step reference schedule.
ScheduleProfile default_profile();

/// Every range spans all layers and the window covers every step; the
/// over-tuning ablation baseline.
ScheduleProfile full_layer_profile(int n_layers, int n_steps);

/// Window of zero steps: tuning never activates.
ScheduleProfile empty_profile(int n_layers, int n_steps);

/// Rescales layer bounds proportionally (round, min 1) and the step window
/// by the step-count ratio (floor, min 1) so small models reuse the
/// reference ratios.
ScheduleProfile scale_profile(const ScheduleProfile& profile, int n_layers, int n_steps);

Activation activation_at(const ScheduleProfile& profile, int layer, int step);

// Profile file: structured text, keys `layers`, `steps`, `window`, and the
// five ranges as `<name> = <lo> <hi>`.
ScheduleProfile parse_profile(std::istream& in);
ScheduleProfile parse_profile_file(const std::filesystem::path& path);
void write_profile(std::ostream& out, const ScheduleProfile& profile);

}  // namespace attune
