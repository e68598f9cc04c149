#pragma once

// The walk on tetrahedron-resident amplitudes. Two families live here:
//
//  * the four-amplitude field (one amplitude per facet) with the literal
//    z-substep shifts, their per-axis forms, the facet-localized coin, the
//    weakly local mass blocks, and the full Dirac step;
//  * the robust eight-amplitude field (an up/down pair per facet) whose
//    shifting dynamics is built purely from swaps, tolerates broken facet
//    gluings by degrading stranded swaps to the identity, and carries two
//    counter-propagating walkers.
//
// Two shift conventions coexist on the four-amplitude field, differing in
// the cyan/magenta rows: `shift`/`shift_axis` move all four amplitudes of
// a tetrahedron the same way (the walker-following picture used by the
// path-tracking tests), while `dirac_shift` counter-moves the second
// walker so that the site-gathered field performs the four-component
// partial shift (the convention the Dirac step is built on). See README.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "tqw/algebra.hpp"
#include "tqw/lattice.hpp"
#include "tqw/walk_params.hpp"

namespace tqw {

// One complex amplitude per facet slot, indexed by the lattice slot id
// (tetra * 4 + facet).
struct TetraField {
    std::array<int, 3> dims{};
    double eps = 0.1;
    std::vector<cplx> data;

    static TetraField zeros(const Lattice& lat) {
        TetraField f;
        f.dims = lat.dims;
        f.eps = lat.eps;
        f.data.assign(std::size_t(lat.slot_count()), cplx{});
        return f;
    }
    cplx& at(std::int64_t slot) { return data[std::size_t(slot)]; }
    const cplx& at(std::int64_t slot) const { return data[std::size_t(slot)]; }
    double norm() const;
};

// Doubled field: component j of tetrahedron k is the (facet j/2,
// spin j%2) amplitude, even j being the up component. Index = k * 8 + j.
// Components 0..3 (blue/red pairs) carry the walkers; 4..7 (cyan/magenta
// pairs) are the stationary ancillas of the swap dynamics.
struct RobustTetraField {
    std::array<int, 3> dims{};
    double eps = 0.1;
    std::vector<cplx> data;

    static RobustTetraField zeros(const Lattice& lat) {
        RobustTetraField f;
        f.dims = lat.dims;
        f.eps = lat.eps;
        f.data.assign(std::size_t(lat.tetra_count()) * 8, cplx{});
        return f;
    }
    cplx& at(std::int64_t tetra, int j) { return data[std::size_t(tetra * 8 + j)]; }
    const cplx& at(std::int64_t tetra, int j) const {
        return data[std::size_t(tetra * 8 + j)];
    }
    double norm() const;
};

// Causal cube-to-cube half-shift of the z substep. Writing n(k,f) for the
// tetrahedron glued to k through facet f, the output of an LH tetrahedron
// is (phi(n(k,2),3), phi(k,0), phi(n(k,2),1), phi(k,2)) and of an RH one
// (phi(k,1), phi(n(k,3),2), phi(k,3), phi(n(k,3),0)). Pure permutation.
// Throws std::runtime_error when the lattice has broken links.
TetraField shift_black(const Lattice& lat, const TetraField& f);

// Strictly local half-shift: LH swaps facets 0<->2, RH swaps 1<->3.
TetraField shift_grey(const Lattice& lat, const TetraField& f);

// Composed walker shift of the z substep, shift_grey after shift_black:
// LH output (phi(n(k,2),1), phi(k,0), phi(n(k,2),3), phi(k,2)), RH output
// (phi(k,1), phi(n(k,3),0), phi(k,3), phi(n(k,3),2)).
TetraField shift(const Lattice& lat, const TetraField& f);

// Per-axis form of the composed walker shift; Axis::Z equals `shift`.
// Both walkers of a tetrahedron hop one site level along `axis`, LH
// positive and RH negative.
TetraField shift_axis(const Lattice& lat, const TetraField& f, Axis axis);

// Per-axis spinor-aligned shift: blue/red rows as in `shift_axis`, cyan/
// magenta rows counter-moving, so gathering conjugates it to the
// four-component partial shift with sign pattern (+,-,-,+).
TetraField dirac_shift(const Lattice& lat, const TetraField& f, Axis axis);

using SlotPermutation = std::vector<std::uint32_t>;

// Applies `op` to every basis amplitude and records source -> target.
// Throws std::runtime_error("not a permutation") if any image is not a
// basis amplitude.
SlotPermutation extract_permutation(
    const Lattice& lat, const std::function<TetraField(const TetraField&)>& op);

// Same extraction over the eight-component robust basis (index k*8+j).
SlotPermutation extract_robust_permutation(
    const Lattice& lat,
    const std::function<RobustTetraField(const RobustTetraField&)>& op);

// Applies u to the two amplitudes of every glued facet pair. Cross-handed
// pairs (facets 0/1) are ordered (RH amplitude, LH amplitude); same-handed
// pairs (facets 2/3) are ordered (facet-2 side, facet-3 side). Throws
// std::runtime_error when a facet is unpaired (broken link).
TetraField apply_facet_coin(const Lattice& lat, const TetraField& f, const Mat2& u);

// One full time step: three axis substeps starting at `start` and cycling
// z -> x -> y. Each substep applies the spinor-aligned shift, the mass
// blocks (pairing, per cell, the facet-2 amplitude of one hand with the
// facet-0 amplitude of the other, and likewise 3 with 1), and the
// directional coin blocks (C^dagger on the ordered facet pairs RH:(2,0),
// (3,1) and LH:(0,2),(1,3) of every tetrahedron). The single mass variant
// applies the mass blocks once, before the three substeps. Like the plain
// shifts, throws std::runtime_error on a lattice with broken links; the
// robust step is the defect-tolerant walk.
TetraField step_dirac_tetra(const Lattice& lat, const TetraField& f,
                            const WalkParams& params, Axis start = Axis::Z);

// The three swap stages of the robust z substep, exactly as their
// per-tetrahedron forms: stage 0 reorders components to (5,2,1,6,4,0,3,7);
// stage 1 swaps 0<->1 and 2<->3 locally and exchanges component 5 with
// component 6 of n(k,2) (and 6 with 5 of n(k,3)); stage 2 reorders to
// (0,5,6,3,4,1,2,7). In stage 1, a cross swap across a broken facet-2/3
// gluing degrades to the identity on both stranded amplitudes.
RobustTetraField robust_shift_0(const Lattice& lat, const RobustTetraField& f);
RobustTetraField robust_shift_1(const Lattice& lat, const RobustTetraField& f);
RobustTetraField robust_shift_2(const Lattice& lat, const RobustTetraField& f);

// Per-axis swap stages (stage in {0,1,2}); Axis::Z reproduces the printed
// z forms above. Stage 0 is axis-independent and local. Stage 1 swaps,
// same-handed and per cell c: (c,1)<->(D(c),0), (c,2)<->(A(c),3), and the
// ancilla exchange (c,5)<->(c-z,6) across the facet-2/3 gluing (the only
// swap affected by broken links, for every axis). Stage 2 swaps
// (c,5)<->(A(c),1) and (c,6)<->(D(c),2). A = red_after and D = blue_before
// are the axis transport maps; for z both are the identity, making stages
// 1 and 2 single-tetrahedron operations up to the ancilla exchange.
RobustTetraField robust_shift_stage(const Lattice& lat, const RobustTetraField& f,
                                    int stage, Axis axis);

// One full robust time step: three axis substeps from `start`, each
// applying stages 0,1,2, then the strictly local mass blocks
// (exp(-i eps m sigma_1) on (phi_0,phi_1) and (phi_2,phi_3) of every
// tetrahedron), then the facet coins: for each intact facet-0/1 gluing,
// C^dagger on the ordered cross-handed pairs (RH up, LH down) and
// (RH down, LH up); broken pairs are left untouched. Ancillas receive
// neither coin nor mass. Unitary for any involution-closed defect set.
RobustTetraField step_dirac_robust(const Lattice& lat, const RobustTetraField& f,
                                   const WalkParams& params, Axis start = Axis::Z);

}  // namespace tqw
