#pragma once

// The effective cubic-lattice walk on spinor fields: two-component Weyl
// walkers, the four-component massless/massive Dirac walk, and the
// gather/scatter isometries that certify the tetrahedron engines against
// it. Fields live on a periodic integer grid (one spinor per site, the
// z-doubled facet-site grid of the lattice), components innermost.

#include <array>
#include <cstdint>
#include <vector>

#include "tqw/algebra.hpp"
#include "tqw/lattice.hpp"
#include "tqw/tetra_engine.hpp"
#include "tqw/walk_params.hpp"

namespace tqw {

struct SpinorField {
    Grid3 grid;
    int ncomp = 4;
    double eps = 0.1;
    std::vector<cplx> data;  // site-major, z fastest, components innermost

    static SpinorField zeros(const Grid3& g, int ncomp, double eps);
    std::int64_t sites() const { return grid.size(); }
    cplx& at(std::int64_t site, int c) { return data[std::size_t(site * ncomp + c)]; }
    const cplx& at(std::int64_t site, int c) const {
        return data[std::size_t(site * ncomp + c)];
    }
    double norm() const;
};

// Two-component partial shift: the up component pulls from k + u_axis,
// the down component from k - u_axis (periodic). `reversed` flips both
// pulls (the mirror walker's shift).
SpinorField partial_shift(const SpinorField& f, Axis axis, bool reversed = false);

// Four-component partial shift with sign pattern (+,-,-,+): component c
// pulls from k + s_c u_axis, i.e. the shift generator on plane waves is
// diag(e^{i eps p}, e^{-i eps p}, e^{-i eps p}, e^{i eps p}).
SpinorField partial_shift4(const SpinorField& f, Axis axis);

// Cyclic translation by a (in grid units); covariance oracle for tests.
SpinorField translate(const SpinorField& f, const Vec3i& a);

// Massless four-component step: three substeps from `start` cycling
// z -> x -> y, each a partial shift followed by the directional coin
// sigma_0 (x) C^dagger.
SpinorField step_massless(const SpinorField& f, const WalkParams& params,
                          Axis start = Axis::Z);

// Massive step. Per-substep variant: shift, mass coin M, directional coin,
// per axis. Single variant: one M, then the massless step.
SpinorField step_massive(const SpinorField& f, const WalkParams& params,
                         Axis start = Axis::Z);

// Two-component Weyl walkers. First walker: coin C^dagger, axes z, x, y,
// plain shifts. Mirror walker: coin C, axes z, y, x, reversed shifts.
SpinorField step_weyl(const SpinorField& f, const WalkParams& params,
                      Axis start = Axis::Z);

// Mode dispatch. Dirac4 and Robust4 share the four-component kernel (the
// robust walk in its stored component order performs exactly this step);
// Weyl modes take the two-component path.
SpinorField step(const SpinorField& f, const WalkParams& params,
                 Axis start = Axis::Z);

// Isometry between the four-amplitude tetra field and the 4-spinor field
// on the facet-site grid. Per cell c, the spinor at the even site e(c) is
// (RH cyan, RH blue, LH blue, LH cyan) and at the odd site e(c)+u_z
// (RH magenta, RH red, LH red, LH magenta). scatter is the exact inverse.
// Throws std::invalid_argument on dimension mismatch.
SpinorField gather(const Lattice& lat, const TetraField& f);
TetraField scatter(const Lattice& lat, const SpinorField& f);

// Walker-pair layout of the robust field: the spinor at the even site is
// (RH phi0, LH phi1, RH phi1, LH phi0) -- first walker up/down, then the
// mirror pair in reversed spin order -- and at the odd site the same with
// the red components phi2/phi3. Ancillas are not gathered; scatter_robust
// fills them with zeros (gather_robust o scatter_robust = identity; the
// opposite composition projects out the ancillas).
SpinorField gather_robust(const Lattice& lat, const RobustTetraField& f);
RobustTetraField scatter_robust(const Lattice& lat, const SpinorField& f);

}  // namespace tqw
