#include "tqw/spinor_model.hpp"

#include <cmath>
#include <stdexcept>

#include "tqw/parallel.hpp"

namespace tqw {

namespace {

Vec3i axis_unit(Axis ax) {
    switch (ax) {
        case Axis::X: return {1, 0, 0};
        case Axis::Y: return {0, 1, 0};
        default: return {0, 0, 1};
    }
}

Axis prev_axis(Axis a) { return cycle_axis(cycle_axis(a)); }

// Pulls component c of every site from site + dir[c] * u_axis.
SpinorField pull_shift(const SpinorField& f, Axis axis, const int* dir) {
    SpinorField out = f;
    const Vec3i u = axis_unit(axis);
    const Grid3& g = f.grid;
    const int nc = f.ncomp;
    parallel_for(std::size_t(f.sites()), [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            const Vec3i k = g.coords(std::int64_t(s));
            for (int c = 0; c < nc; ++c) {
                const int d = dir[c];
                const std::int64_t src =
                    g.index(k.x + d * u.x, k.y + d * u.y, k.z + d * u.z);
                out.at(std::int64_t(s), c) = f.at(src, c);
            }
        }
    });
    return out;
}

template <std::size_t N>
SpinorField apply_site_matrix(const SpinorField& f, const Mat<N>& m) {
    SpinorField out = f;
    parallel_for(std::size_t(f.sites()), [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            std::array<cplx, N> v;
            for (std::size_t c = 0; c < N; ++c) v[c] = f.at(std::int64_t(s), int(c));
            v = m.apply(v);
            for (std::size_t c = 0; c < N; ++c) out.at(std::int64_t(s), int(c)) = v[c];
        }
    });
    return out;
}

void require_ncomp(const SpinorField& f, int nc, const char* what) {
    if (f.ncomp != nc)
        throw std::invalid_argument(std::string(what) + " requires a " +
                                    std::to_string(nc) + "-component field");
}

void require_match(bool ok) {
    if (!ok) throw std::invalid_argument("field dimensions do not match the lattice");
}

}  // namespace

SpinorField SpinorField::zeros(const Grid3& g, int ncomp, double eps) {
    SpinorField f;
    f.grid = g;
    f.ncomp = ncomp;
    f.eps = eps;
    f.data.assign(std::size_t(g.size()) * std::size_t(ncomp), cplx{});
    return f;
}

double SpinorField::norm() const {
    double s = 0.0;
    for (const cplx& z : data) s += std::norm(z);
    return std::sqrt(s);
}

SpinorField partial_shift(const SpinorField& f, Axis axis, bool reversed) {
    require_ncomp(f, 2, "partial_shift");
    const int fwd[2] = {+1, -1};
    const int rev[2] = {-1, +1};
    return pull_shift(f, axis, reversed ? rev : fwd);
}

SpinorField partial_shift4(const SpinorField& f, Axis axis) {
    require_ncomp(f, 4, "partial_shift4");
    static const int dir[4] = {+1, -1, -1, +1};
    return pull_shift(f, axis, dir);
}

SpinorField translate(const SpinorField& f, const Vec3i& a) {
    SpinorField out = f;
    const Grid3& g = f.grid;
    for (std::int64_t s = 0; s < f.sites(); ++s) {
        const Vec3i k = g.coords(s);
        const std::int64_t src = g.index(k.x - a.x, k.y - a.y, k.z - a.z);
        for (int c = 0; c < f.ncomp; ++c) out.at(s, c) = f.at(src, c);
    }
    return out;
}

SpinorField step_massless(const SpinorField& f, const WalkParams& params, Axis start) {
    params.validate();
    require_ncomp(f, 4, "step_massless");
    const Mat4 coin = coin_C_hat().dagger();
    SpinorField cur = f;
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        cur = partial_shift4(cur, ax);
        cur = apply_site_matrix(cur, coin);
        ax = cycle_axis(ax);
    }
    return cur;
}

SpinorField step_massive(const SpinorField& f, const WalkParams& params, Axis start) {
    params.validate();
    require_ncomp(f, 4, "step_massive");
    if (params.variant == MassVariant::Massless) return step_massless(f, params, start);
    const Mat4 m = mass_coin(params.mass, params.eps);
    if (params.variant == MassVariant::MassiveSingle)
        return step_massless(apply_site_matrix(f, m), params, start);
    const Mat4 coin = coin_C_hat().dagger();
    SpinorField cur = f;
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        cur = partial_shift4(cur, ax);
        cur = apply_site_matrix(cur, m);
        cur = apply_site_matrix(cur, coin);
        ax = cycle_axis(ax);
    }
    return cur;
}

SpinorField step_weyl(const SpinorField& f, const WalkParams& params, Axis start) {
    params.validate();
    require_ncomp(f, 2, "step_weyl");
    if (params.mode != WalkMode::WeylFirst && params.mode != WalkMode::WeylMirror)
        throw std::invalid_argument("step_weyl requires a Weyl mode");
    const bool mirror = params.mode == WalkMode::WeylMirror;
    const Mat2 coin = mirror ? coin_C() : coin_C().dagger();
    SpinorField cur = f;
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        cur = partial_shift(cur, ax, mirror);
        cur = apply_site_matrix(cur, coin);
        ax = mirror ? prev_axis(ax) : cycle_axis(ax);
    }
    return cur;
}

SpinorField step(const SpinorField& f, const WalkParams& params, Axis start) {
    params.validate();
    switch (params.mode) {
        case WalkMode::WeylFirst:
        case WalkMode::WeylMirror:
            return step_weyl(f, params, start);
        case WalkMode::Dirac4:
        case WalkMode::Robust4:
        default:
            // The robust walk in its stored component order is exactly the
            // four-component step; the modes differ only in the tetra maps.
            return params.variant == MassVariant::Massless
                       ? step_massless(f, params, start)
                       : step_massive(f, params, start);
    }
}

SpinorField gather(const Lattice& lat, const TetraField& f) {
    require_match(f.dims == lat.dims);
    SpinorField out = SpinorField::zeros(lat.sites(), 4, lat.eps);
    const Grid3& sites = lat.sites();
    for (std::int64_t ci = 0; ci < lat.cell_count(); ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        const std::int64_t tl = ci * 2 + LH, tr = ci * 2 + RH;
        const Vec3i e = lat.slot_site({c, LH, 0});
        const std::int64_t se = sites.index(e.x, e.y, e.z);
        const std::int64_t so = sites.index(e.x, e.y, e.z + 1);
        out.at(se, 0) = f.at(tr * 4 + 2);
        out.at(se, 1) = f.at(tr * 4 + 0);
        out.at(se, 2) = f.at(tl * 4 + 0);
        out.at(se, 3) = f.at(tl * 4 + 2);
        out.at(so, 0) = f.at(tr * 4 + 3);
        out.at(so, 1) = f.at(tr * 4 + 1);
        out.at(so, 2) = f.at(tl * 4 + 1);
        out.at(so, 3) = f.at(tl * 4 + 3);
    }
    return out;
}

TetraField scatter(const Lattice& lat, const SpinorField& f) {
    const Grid3& sites = lat.sites();
    require_match(f.ncomp == 4 && f.grid.nx == sites.nx && f.grid.ny == sites.ny &&
                  f.grid.nz == sites.nz);
    TetraField out = TetraField::zeros(lat);
    for (std::int64_t ci = 0; ci < lat.cell_count(); ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        const std::int64_t tl = ci * 2 + LH, tr = ci * 2 + RH;
        const Vec3i e = lat.slot_site({c, LH, 0});
        const std::int64_t se = sites.index(e.x, e.y, e.z);
        const std::int64_t so = sites.index(e.x, e.y, e.z + 1);
        out.at(tr * 4 + 2) = f.at(se, 0);
        out.at(tr * 4 + 0) = f.at(se, 1);
        out.at(tl * 4 + 0) = f.at(se, 2);
        out.at(tl * 4 + 2) = f.at(se, 3);
        out.at(tr * 4 + 3) = f.at(so, 0);
        out.at(tr * 4 + 1) = f.at(so, 1);
        out.at(tl * 4 + 1) = f.at(so, 2);
        out.at(tl * 4 + 3) = f.at(so, 3);
    }
    return out;
}

SpinorField gather_robust(const Lattice& lat, const RobustTetraField& f) {
    require_match(f.dims == lat.dims);
    SpinorField out = SpinorField::zeros(lat.sites(), 4, lat.eps);
    const Grid3& sites = lat.sites();
    for (std::int64_t ci = 0; ci < lat.cell_count(); ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        const std::int64_t tl = ci * 2 + LH, tr = ci * 2 + RH;
        const Vec3i e = lat.slot_site({c, LH, 0});
        const std::int64_t se = sites.index(e.x, e.y, e.z);
        const std::int64_t so = sites.index(e.x, e.y, e.z + 1);
        out.at(se, 0) = f.at(tr, 0);
        out.at(se, 1) = f.at(tl, 1);
        out.at(se, 2) = f.at(tr, 1);
        out.at(se, 3) = f.at(tl, 0);
        out.at(so, 0) = f.at(tr, 2);
        out.at(so, 1) = f.at(tl, 3);
        out.at(so, 2) = f.at(tr, 3);
        out.at(so, 3) = f.at(tl, 2);
    }
    return out;
}

RobustTetraField scatter_robust(const Lattice& lat, const SpinorField& f) {
    const Grid3& sites = lat.sites();
    require_match(f.ncomp == 4 && f.grid.nx == sites.nx && f.grid.ny == sites.ny &&
                  f.grid.nz == sites.nz);
    RobustTetraField out = RobustTetraField::zeros(lat);
    for (std::int64_t ci = 0; ci < lat.cell_count(); ++ci) {
        const Vec3i c = lat.cell_coords(ci);
        const std::int64_t tl = ci * 2 + LH, tr = ci * 2 + RH;
        const Vec3i e = lat.slot_site({c, LH, 0});
        const std::int64_t se = sites.index(e.x, e.y, e.z);
        const std::int64_t so = sites.index(e.x, e.y, e.z + 1);
        out.at(tr, 0) = f.at(se, 0);
        out.at(tl, 1) = f.at(se, 1);
        out.at(tr, 1) = f.at(se, 2);
        out.at(tl, 0) = f.at(se, 3);
        out.at(tr, 2) = f.at(so, 0);
        out.at(tl, 3) = f.at(so, 1);
        out.at(tr, 3) = f.at(so, 2);
        out.at(tl, 2) = f.at(so, 3);
    }
    return out;
}

}  // namespace tqw
