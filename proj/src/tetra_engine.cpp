#include "tqw/tetra_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "tqw/parallel.hpp"

namespace tqw {

namespace {

double l2_norm(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

// Tetrahedron glued to tetra k through facet f.
std::int64_t glued_tetra(const Lattice& lat, std::int64_t k, int facet) {
    return std::int64_t(lat.glue[std::size_t(k * 4 + facet)]) / 4;
}

void require_intact(const Lattice& lat, const char* what) {
    if (lat.has_defects())
        throw std::runtime_error(std::string(what) + ": lattice has broken links");
}

void require_dims(bool ok) {
    if (!ok) throw std::invalid_argument("field dimensions do not match the lattice");
}

// In-place 2x2 action on an ordered amplitude pair.
void apply_pair(const Mat2& u, cplx& a, cplx& b) {
    const cplx na = u(0, 0) * a + u(0, 1) * b;
    const cplx nb = u(1, 0) * a + u(1, 1) * b;
    a = na;
    b = nb;
}

// Symmetric mass block exp(-i theta X) on a pair: cos on the diagonal,
// -i sin off it.
void apply_mass_pair(double c, double s, cplx& a, cplx& b) {
    const cplx i{0.0, 1.0};
    const cplx na = c * a - i * s * b;
    const cplx nb = c * b - i * s * a;
    a = na;
    b = nb;
}

// Mass blocks of the four-amplitude step: per cell, gamma0 pairs through
// the site gathering. The blue/cyan site couples (RH f2, LH f0) and
// (RH f0, LH f2); the red/magenta site one level up couples the same
// pattern shifted to facets 1/3.
void tetra_mass_blocks(const Lattice& lat, TetraField& f, double mass, double eps) {
    const double c = std::cos(mass * eps), s = std::sin(mass * eps);
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const std::int64_t tl = std::int64_t(ci) * 2 + LH;
            const std::int64_t tr = std::int64_t(ci) * 2 + RH;
            for (int off = 0; off < 2; ++off) {
                apply_mass_pair(c, s, f.at(tr * 4 + 2 + off), f.at(tl * 4 + 0 + off));
                apply_mass_pair(c, s, f.at(tr * 4 + 0 + off), f.at(tl * 4 + 2 + off));
            }
        }
    });
}

// Directional coin blocks: C^dagger on the ordered facet pairs RH:(2,0),
// (3,1) and LH:(0,2),(1,3) of every tetrahedron (the site-gathered form of
// sigma_0 (x) C^dagger).
void tetra_coin_blocks(const Lattice& lat, TetraField& f) {
    const Mat2 cd = coin_C().dagger();
    parallel_for(std::size_t(lat.tetra_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            const std::int64_t s = std::int64_t(t) * 4;
            if (t % 2 == RH) {
                apply_pair(cd, f.at(s + 2), f.at(s + 0));
                apply_pair(cd, f.at(s + 3), f.at(s + 1));
            } else {
                apply_pair(cd, f.at(s + 0), f.at(s + 2));
                apply_pair(cd, f.at(s + 1), f.at(s + 3));
            }
        }
    });
}

}  // namespace

double TetraField::norm() const { return l2_norm(data); }
double RobustTetraField::norm() const { return l2_norm(data); }

TetraField shift_black(const Lattice& lat, const TetraField& f) {
    require_intact(lat, "shift_black");
    require_dims(f.dims == lat.dims);
    TetraField out = TetraField::zeros(lat);
    parallel_for(std::size_t(lat.tetra_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            const std::int64_t k = std::int64_t(t), s = k * 4;
            if (t % 2 == LH) {
                const std::int64_t n2 = glued_tetra(lat, k, 2) * 4;
                out.at(s + 0) = f.at(n2 + 3);
                out.at(s + 1) = f.at(s + 0);
                out.at(s + 2) = f.at(n2 + 1);
                out.at(s + 3) = f.at(s + 2);
            } else {
                const std::int64_t n3 = glued_tetra(lat, k, 3) * 4;
                out.at(s + 0) = f.at(s + 1);
                out.at(s + 1) = f.at(n3 + 2);
                out.at(s + 2) = f.at(s + 3);
                out.at(s + 3) = f.at(n3 + 0);
            }
        }
    });
    return out;
}

TetraField shift_grey(const Lattice& lat, const TetraField& f) {
    require_dims(f.dims == lat.dims);
    TetraField out = TetraField::zeros(lat);
    parallel_for(std::size_t(lat.tetra_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            const std::int64_t s = std::int64_t(t) * 4;
            if (t % 2 == LH) {
                out.at(s + 0) = f.at(s + 2);
                out.at(s + 1) = f.at(s + 1);
                out.at(s + 2) = f.at(s + 0);
                out.at(s + 3) = f.at(s + 3);
            } else {
                out.at(s + 0) = f.at(s + 0);
                out.at(s + 1) = f.at(s + 3);
                out.at(s + 2) = f.at(s + 2);
                out.at(s + 3) = f.at(s + 1);
            }
        }
    });
    return out;
}

TetraField shift(const Lattice& lat, const TetraField& f) {
    return shift_grey(lat, shift_black(lat, f));
}

TetraField shift_axis(const Lattice& lat, const TetraField& f, Axis axis) {
    require_intact(lat, "shift_axis");
    require_dims(f.dims == lat.dims);
    TetraField out = TetraField::zeros(lat);
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const Vec3i c = lat.cell_coords(std::int64_t(ci));
            const std::int64_t ra = lat.cell_index(lat.red_after(c, axis));
            const std::int64_t rb = lat.cell_index(lat.red_before(c, axis));
            const std::int64_t ba = lat.cell_index(lat.blue_after(c, axis));
            const std::int64_t bb = lat.cell_index(lat.blue_before(c, axis));
            const std::int64_t tl = std::int64_t(ci) * 2 + LH;
            out.at(tl * 4 + 0) = f.at((rb * 2 + LH) * 4 + 1);
            out.at(tl * 4 + 1) = f.at((bb * 2 + LH) * 4 + 0);
            out.at(tl * 4 + 2) = f.at((rb * 2 + LH) * 4 + 3);
            out.at(tl * 4 + 3) = f.at((bb * 2 + LH) * 4 + 2);
            const std::int64_t tr = std::int64_t(ci) * 2 + RH;
            out.at(tr * 4 + 0) = f.at((ra * 2 + RH) * 4 + 1);
            out.at(tr * 4 + 1) = f.at((ba * 2 + RH) * 4 + 0);
            out.at(tr * 4 + 2) = f.at((ra * 2 + RH) * 4 + 3);
            out.at(tr * 4 + 3) = f.at((ba * 2 + RH) * 4 + 2);
        }
    });
    return out;
}

TetraField dirac_shift(const Lattice& lat, const TetraField& f, Axis axis) {
    require_intact(lat, "dirac_shift");
    require_dims(f.dims == lat.dims);
    TetraField out = TetraField::zeros(lat);
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const Vec3i c = lat.cell_coords(std::int64_t(ci));
            const std::int64_t ra = lat.cell_index(lat.red_after(c, axis));
            const std::int64_t rb = lat.cell_index(lat.red_before(c, axis));
            const std::int64_t ba = lat.cell_index(lat.blue_after(c, axis));
            const std::int64_t bb = lat.cell_index(lat.blue_before(c, axis));
            for (int h = 0; h < 2; ++h) {
                const std::int64_t t = std::int64_t(ci) * 2 + h;
                out.at(t * 4 + 0) = f.at((rb * 2 + h) * 4 + 1);
                out.at(t * 4 + 1) = f.at((bb * 2 + h) * 4 + 0);
                out.at(t * 4 + 2) = f.at((ra * 2 + h) * 4 + 3);
                out.at(t * 4 + 3) = f.at((ba * 2 + h) * 4 + 2);
            }
        }
    });
    return out;
}

namespace {

SlotPermutation extract_generic(std::int64_t n,
                                const std::function<void(std::int64_t src)>& load,
                                const std::function<const std::vector<cplx>&()>& run) {
    SlotPermutation perm(std::size_t(n), 0);
    std::vector<std::uint8_t> hit(std::size_t(n), 0);
    for (std::int64_t src = 0; src < n; ++src) {
        load(src);
        const std::vector<cplx>& img = run();
        std::int64_t target = -1;
        for (std::int64_t i = 0; i < n; ++i) {
            const cplx z = img[std::size_t(i)];
            if (std::abs(z) < 1e-12) continue;
            if (target >= 0 || std::abs(z - cplx{1.0, 0.0}) > 1e-12)
                throw std::runtime_error("not a permutation");
            target = i;
        }
        if (target < 0 || hit[std::size_t(target)])
            throw std::runtime_error("not a permutation");
        hit[std::size_t(target)] = 1;
        perm[std::size_t(src)] = std::uint32_t(target);
    }
    return perm;
}

}  // namespace

SlotPermutation extract_permutation(
    const Lattice& lat, const std::function<TetraField(const TetraField&)>& op) {
    TetraField basis = TetraField::zeros(lat);
    TetraField img;
    return extract_generic(
        lat.slot_count(),
        [&](std::int64_t src) {
            std::fill(basis.data.begin(), basis.data.end(), cplx{});
            basis.at(src) = 1.0;
            img = op(basis);
        },
        [&]() -> const std::vector<cplx>& { return img.data; });
}

SlotPermutation extract_robust_permutation(
    const Lattice& lat,
    const std::function<RobustTetraField(const RobustTetraField&)>& op) {
    RobustTetraField basis = RobustTetraField::zeros(lat);
    RobustTetraField img;
    return extract_generic(
        lat.tetra_count() * 8,
        [&](std::int64_t src) {
            std::fill(basis.data.begin(), basis.data.end(), cplx{});
            basis.data[std::size_t(src)] = 1.0;
            img = op(basis);
        },
        [&]() -> const std::vector<cplx>& { return img.data; });
}

TetraField apply_facet_coin(const Lattice& lat, const TetraField& f, const Mat2& u) {
    require_dims(f.dims == lat.dims);
    TetraField out = f;
    const std::int64_t n = lat.slot_count();
    for (std::int64_t s = 0; s < n; ++s) {
        if (lat.broken[std::size_t(s)])
            throw std::runtime_error("apply_facet_coin: unpaired facet");
        const std::int64_t p = std::int64_t(lat.glue[std::size_t(s)]);
        if (p <= s) continue;  // each pair once
        const int fs = int(s % 4), hs = int((s / 4) % 2);
        std::int64_t first = s, second = p;
        // Cross-handed 0/1 pairs are ordered (RH, LH); same-handed 2/3
        // pairs (facet-2 side, facet-3 side).
        if (fs <= 1 ? (hs != RH) : (fs != 2)) std::swap(first, second);
        apply_pair(u, out.at(first), out.at(second));
    }
    return out;
}

TetraField step_dirac_tetra(const Lattice& lat, const TetraField& f,
                            const WalkParams& params, Axis start) {
    params.validate();
    require_intact(lat, "step_dirac_tetra");
    require_dims(f.dims == lat.dims);
    TetraField cur = f;
    if (params.variant == MassVariant::MassiveSingle)
        tetra_mass_blocks(lat, cur, params.mass, params.eps);
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        cur = dirac_shift(lat, cur, ax);
        if (params.variant == MassVariant::MassivePerSubstep)
            tetra_mass_blocks(lat, cur, params.mass, params.eps);
        tetra_coin_blocks(lat, cur);
        ax = cycle_axis(ax);
    }
    return cur;
}

namespace {

// Pull-form per-axis swap stages; see the header for the swap families.
RobustTetraField robust_stage0(const Lattice& lat, const RobustTetraField& f) {
    RobustTetraField out = RobustTetraField::zeros(lat);
    static const int row[8] = {5, 2, 1, 6, 4, 0, 3, 7};
    parallel_for(std::size_t(lat.tetra_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t)
            for (int j = 0; j < 8; ++j)
                out.at(std::int64_t(t), j) = f.at(std::int64_t(t), row[j]);
    });
    return out;
}

RobustTetraField robust_stage1(const Lattice& lat, const RobustTetraField& f,
                               Axis axis) {
    RobustTetraField out = RobustTetraField::zeros(lat);
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const Vec3i c = lat.cell_coords(std::int64_t(ci));
            const std::int64_t a = lat.cell_index(lat.red_after(c, axis));
            const std::int64_t d = lat.cell_index(lat.blue_before(c, axis));
            for (int h = 0; h < 2; ++h) {
                const std::int64_t t = std::int64_t(ci) * 2 + h;
                const std::int64_t ta = a * 2 + h, td = d * 2 + h;
                out.at(t, 0) = f.at(ta, 1);
                out.at(t, 1) = f.at(td, 0);
                out.at(t, 2) = f.at(ta, 3);
                out.at(t, 3) = f.at(td, 2);
                out.at(t, 4) = f.at(t, 4);
                // Ancilla exchange rides the facet-2/3 gluings and is the
                // only swap a broken link degrades (to the identity).
                out.at(t, 5) = lat.broken[std::size_t(t * 4 + 2)]
                                   ? f.at(t, 5)
                                   : f.at(glued_tetra(lat, t, 2), 6);
                out.at(t, 6) = lat.broken[std::size_t(t * 4 + 3)]
                                   ? f.at(t, 6)
                                   : f.at(glued_tetra(lat, t, 3), 5);
                out.at(t, 7) = f.at(t, 7);
            }
        }
    });
    return out;
}

RobustTetraField robust_stage2(const Lattice& lat, const RobustTetraField& f,
                               Axis axis) {
    RobustTetraField out = RobustTetraField::zeros(lat);
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const Vec3i c = lat.cell_coords(std::int64_t(ci));
            const std::int64_t a = lat.cell_index(lat.red_after(c, axis));
            const std::int64_t d = lat.cell_index(lat.blue_before(c, axis));
            for (int h = 0; h < 2; ++h) {
                const std::int64_t t = std::int64_t(ci) * 2 + h;
                const std::int64_t ta = a * 2 + h, td = d * 2 + h;
                out.at(t, 0) = f.at(t, 0);
                out.at(t, 1) = f.at(td, 5);
                out.at(t, 2) = f.at(ta, 6);
                out.at(t, 3) = f.at(t, 3);
                out.at(t, 4) = f.at(t, 4);
                out.at(t, 5) = f.at(ta, 1);
                out.at(t, 6) = f.at(td, 2);
                out.at(t, 7) = f.at(t, 7);
            }
        }
    });
    return out;
}

// Strictly local mass blocks exp(-i eps m sigma_1) on the walker pairs.
void robust_mass_blocks(const Lattice& lat, RobustTetraField& f, double mass,
                        double eps) {
    const double c = std::cos(mass * eps), s = std::sin(mass * eps);
    parallel_for(std::size_t(lat.tetra_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            apply_mass_pair(c, s, f.at(std::int64_t(t), 0), f.at(std::int64_t(t), 1));
            apply_mass_pair(c, s, f.at(std::int64_t(t), 2), f.at(std::int64_t(t), 3));
        }
    });
}

// Facet coins: C^dagger on the cross-handed walker pairs of every intact
// facet-0/1 gluing; broken gluings leave both sides untouched.
void robust_coin_blocks(const Lattice& lat, RobustTetraField& f) {
    const Mat2 cd = coin_C().dagger();
    parallel_for(std::size_t(lat.cell_count()), [&](std::size_t b, std::size_t e) {
        for (std::size_t ci = b; ci < e; ++ci) {
            const std::int64_t tl = std::int64_t(ci) * 2 + LH;
            const std::int64_t tr = std::int64_t(ci) * 2 + RH;
            for (int b2 = 0; b2 < 2; ++b2) {
                if (lat.broken[std::size_t(tl * 4 + b2)]) continue;
                apply_pair(cd, f.at(tr, 2 * b2 + 0), f.at(tl, 2 * b2 + 1));
                apply_pair(cd, f.at(tr, 2 * b2 + 1), f.at(tl, 2 * b2 + 0));
            }
        }
    });
}

}  // namespace

RobustTetraField robust_shift_0(const Lattice& lat, const RobustTetraField& f) {
    require_dims(f.dims == lat.dims);
    return robust_stage0(lat, f);
}

RobustTetraField robust_shift_1(const Lattice& lat, const RobustTetraField& f) {
    require_dims(f.dims == lat.dims);
    return robust_stage1(lat, f, Axis::Z);
}

RobustTetraField robust_shift_2(const Lattice& lat, const RobustTetraField& f) {
    require_dims(f.dims == lat.dims);
    return robust_stage2(lat, f, Axis::Z);
}

RobustTetraField robust_shift_stage(const Lattice& lat, const RobustTetraField& f,
                                    int stage, Axis axis) {
    require_dims(f.dims == lat.dims);
    switch (stage) {
        case 0: return robust_stage0(lat, f);
        case 1: return robust_stage1(lat, f, axis);
        case 2: return robust_stage2(lat, f, axis);
        default: throw std::invalid_argument("robust_shift_stage: stage must be 0..2");
    }
}

RobustTetraField step_dirac_robust(const Lattice& lat, const RobustTetraField& f,
                                   const WalkParams& params, Axis start) {
    params.validate();
    require_dims(f.dims == lat.dims);
    RobustTetraField cur = f;
    const bool per_substep = params.variant == MassVariant::MassivePerSubstep;
    if (params.variant == MassVariant::MassiveSingle)
        robust_mass_blocks(lat, cur, params.mass, params.eps);
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        cur = robust_stage0(lat, cur);
        cur = robust_stage1(lat, cur, ax);
        cur = robust_stage2(lat, cur, ax);
        if (per_substep) robust_mass_blocks(lat, cur, params.mass, params.eps);
        robust_coin_blocks(lat, cur);
        ax = cycle_axis(ax);
    }
    return cur;
}

}  // namespace tqw
