#pragma once

// Shared step parameters for the spinor-level and tetrahedron-level
// engines: mass, spacing, mass-coin placement, and the walk family.

#include <stdexcept>

namespace tqw {

enum class WalkMode { Dirac4, WeylFirst, WeylMirror, Robust4 };

enum class MassVariant { Massless, MassivePerSubstep, MassiveSingle };

inline int component_count(WalkMode mode) {
    return (mode == WalkMode::WeylFirst || mode == WalkMode::WeylMirror) ? 2 : 4;
}

struct WalkParams {
    double mass = 0.0;
    double eps = 0.1;
    MassVariant variant = MassVariant::Massless;
    WalkMode mode = WalkMode::Dirac4;

    void validate() const {
        if (mass < 0.0) throw std::invalid_argument("walk mass must be >= 0");
        if (eps <= 0.0) throw std::invalid_argument("walk eps must be > 0");
        if (variant == MassVariant::MassiveSingle &&
            !(mode == WalkMode::Dirac4 || mode == WalkMode::Robust4))
            throw std::invalid_argument(
                "single mass-coin variant requires a four-component mode");
    }
};

}  // namespace tqw
