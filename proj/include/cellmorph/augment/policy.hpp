#pragma once

#include <string>

#include "cellmorph/core/error.hpp"
#include "cellmorph/core/rng.hpp"

namespace cellmorph::augment {

// Randomized-transform ranges. Every field is the half-width of a symmetric
// range around identity except rotation_deg (absolute angle drawn from
// [0, rotation_deg]) and noise_std (the noise sigma is drawn from
// [0, noise_std]). sharpness_factor is the max deviation of the sharpness
// blend factor from 1, so 1.0 allows factors in [0, 2].
struct AugmentationPolicy {
    std::string mode = "extreme";
    double rescale_frac = 0.20;
    double aspect_frac = 0.10;
    double rotation_deg = 360.0;
    double sharpness_factor = 1.0;
    double brightness_frac = 0.50;
    double hue_frac = 0.10;
    double contrast_frac = 0.70;
    double saturation_frac = 0.30;
    double noise_std = 0.04;

    static AugmentationPolicy extreme() { return AugmentationPolicy{}; }

    static AugmentationPolicy moderate() {
        AugmentationPolicy p;
        p.mode = "moderate";
        p.rescale_frac /= 2;
        p.aspect_frac /= 2;
        p.rotation_deg /= 2;
        p.sharpness_factor /= 2;
        p.brightness_frac /= 2;
        p.hue_frac /= 2;
        p.contrast_frac /= 2;
        p.saturation_frac /= 2;
        p.noise_std /= 2;
        return p;
    }

    static AugmentationPolicy off() {
        AugmentationPolicy p;
        p.mode = "off";
        p.rescale_frac = p.aspect_frac = p.rotation_deg = p.sharpness_factor = 0;
        p.brightness_frac = p.hue_frac = p.contrast_frac = p.saturation_frac = 0;
        p.noise_std = 0;
        return p;
    }

    static AugmentationPolicy preset(const std::string& name) {
        if (name == "extreme") return extreme();
        if (name == "moderate") return moderate();
        if (name == "off") return off();
        throw ValidationError("unknown augmentation mode '" + name +
                              "' (expected extreme, moderate or off)");
    }

    void validate() const {
        check("rescale_frac", rescale_frac, 0.20);
        check("aspect_frac", aspect_frac, 0.10);
        check("rotation_deg", rotation_deg, 360.0);
        check("sharpness_factor", sharpness_factor, 1.0);
        check("brightness_frac", brightness_frac, 0.50);
        check("hue_frac", hue_frac, 0.10);
        check("contrast_frac", contrast_frac, 0.70);
        check("saturation_frac", saturation_frac, 0.30);
        check("noise_std", noise_std, 1.0);
    }

private:
    static void check(const char* field, double v, double cap) {
        if (v < 0 || v > cap)
            throw ValidationError(std::string("augmentation policy: ") + field + " = " +
                                  std::to_string(v) + " outside [0, " + std::to_string(cap) +
                                  "]");
    }
};

// One concrete draw from a policy. apply() is a pure function of these, so
// tests can force exact parameters (e.g. a 90-degree rotation).
struct AugmentParams {
    double scale = 1.0;        // overall rescale factor
    double aspect = 1.0;       // width multiplied, height divided
    double rotation_deg = 0.0;
    double sharpness = 1.0;    // blend factor: 0 smoothed, 1 identity, 2 sharpened
    double brightness = 1.0;   // multiplicative
    double hue_shift = 0.0;    // fraction of the full hue circle
    double contrast = 1.0;     // blend with global mean
    double saturation = 1.0;   // blend with per-pixel gray
    double noise_std = 0.0;
    std::uint64_t noise_seed = 0;
};

inline AugmentParams sample_params(const AugmentationPolicy& policy, Rng& rng) {
    policy.validate();
    AugmentParams p;
    p.scale = uniform(rng, 1.0 - policy.rescale_frac, 1.0 + policy.rescale_frac);
    p.aspect = uniform(rng, 1.0 - policy.aspect_frac, 1.0 + policy.aspect_frac);
    p.rotation_deg = uniform(rng, 0.0, policy.rotation_deg);
    p.sharpness = uniform(rng, 1.0 - policy.sharpness_factor, 1.0 + policy.sharpness_factor);
    p.brightness = uniform(rng, 1.0 - policy.brightness_frac, 1.0 + policy.brightness_frac);
    p.hue_shift = uniform(rng, -policy.hue_frac, policy.hue_frac);
    p.contrast = uniform(rng, 1.0 - policy.contrast_frac, 1.0 + policy.contrast_frac);
    p.saturation = uniform(rng, 1.0 - policy.saturation_frac, 1.0 + policy.saturation_frac);
    p.noise_std = uniform(rng, 0.0, policy.noise_std);
    p.noise_seed = rng();
    return p;
}

}  // namespace cellmorph::augment
