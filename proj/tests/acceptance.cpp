// Acceptance gate: twelve numbered end-to-end checks with pinned
// tolerances. Run without arguments for the full sweep (one PASS/FAIL line
// each) or with `--criterion N` for a single check; the exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tqw/algebra.hpp"
#include "tqw/cli_io.hpp"
#include "tqw/lattice.hpp"
#include "tqw/parallel.hpp"
#include "tqw/reference.hpp"
#include "tqw/spinor_model.hpp"
#include "tqw/tetra_engine.hpp"
#include "tqw/walk_params.hpp"

namespace {

using namespace tqw;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string brief(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double unit_pm(std::uint64_t& s) {
    return 2.0 * (double(splitmix64(s) >> 11) * 0x1.0p-53) - 1.0;
}

template <class Field>
void randomize(Field& f, std::uint64_t seed) {
    std::uint64_t s = seed;
    for (cplx& z : f.data) z = cplx(unit_pm(s), unit_pm(s));
    const double n = f.norm();
    for (cplx& z : f.data) z /= n;
}

double field_gap(const SpinorField& a, const SpinorField& b) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        gap = std::max(gap, std::abs(a.data[i] - b.data[i]));
    return gap;
}

Vec3i site_delta(const Grid3& g, const Vec3i& from, const Vec3i& to) {
    const auto wrapd = [](int d, int n) {
        d %= n;
        if (d > n / 2) d -= n;
        if (d < -n / 2) d += n;
        return d;
    };
    return {wrapd(to.x - from.x, g.nx), wrapd(to.y - from.y, g.ny),
            wrapd(to.z - from.z, g.nz)};
}

// 1. Coin algebra identities to 1e-13, in under a second.
bool criterion_algebra(std::string& detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    const auto track = [&](double d) { worst = std::max(worst, d); };

    const Mat2 c = coin_C();
    track(max_abs_diff(c * c * c, Mat2::identity()));
    const Mat4 ch = coin_C_hat();
    track(max_abs_diff(ch * ch * ch, Mat4::identity()));
    for (const auto& [m, e] : {std::pair{0.5, 0.1}, std::pair{1.3, 0.07}}) {
        const Mat4 mc = mass_coin(m, e);
        track(max_abs_diff(ch * mc * ch.dagger(), mc));
        track(max_abs_diff(mc * ch * mc.dagger(), ch));
    }
    for (int mu = 1; mu <= 3; ++mu) {
        const int prev = mu == 1 ? 3 : mu - 1;
        track(max_abs_diff(ch * alpha(prev) * ch.dagger(), alpha(mu)));
    }
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) {
            const Mat4 anti = alpha(i) * alpha(j) + alpha(j) * alpha(i);
            track(max_abs_diff(anti, Mat4::identity() * cplx(i == j ? 2.0 : 0.0, 0.0)));
        }
        track(max_abs_diff(alpha(i) * gamma0() + gamma0() * alpha(i), Mat4{}));
    }
    const double secs = seconds_since(t0);
    detail = "max identity defect " + brief(worst) + " in " + brief(secs) + " s";
    return worst < 1e-13 && secs < 1.0;
}

// 2. Massive four-component walk is unitary over 1000 steps on 32^3.
bool criterion_unitarity(std::string& detail) {
    WalkParams p;
    p.eps = 0.1;
    p.mass = 0.5;
    p.variant = MassVariant::MassivePerSubstep;
    SpinorField f = SpinorField::zeros(Grid3{32, 32, 32}, 4, p.eps);
    randomize(f, 2026);
    const double n0 = f.norm();
    double drift = 0.0;
    for (int t = 0; t < 1000; ++t) {
        f = step(f, p);
        drift = std::max(drift, std::abs(f.norm() - n0) / n0);
    }
    detail = "max relative norm drift " + brief(drift) + " over 1000 steps";
    return drift < 1e-10;
}

// 3. Zero-momentum transfer matrix is the pure mass phase.
bool criterion_mass_phase(std::string& detail) {
    double worst = 0.0;
    for (const auto& [m, e] : {std::pair{0.3, 0.1}, std::pair{0.7, 0.05}}) {
        const Mat4 mc = mass_coin(m, e);
        WalkParams p;
        p.mass = m;
        p.eps = e;
        for (const bool single : {false, true}) {
            p.variant = single ? MassVariant::MassiveSingle
                               : MassVariant::MassivePerSubstep;
            const Mat4 want = single ? mc : mc * mc * mc;
            const Mat4 got = walk_symbol4({0, 0, 0}, p);
            worst = std::max(worst, max_abs_diff(got, want));
            const double phase = (single ? 1.0 : 3.0) * m * e;
            const std::vector<double> th = eigenphases(got);
            const double expect[4] = {-phase, -phase, phase, phase};
            for (int i = 0; i < 4; ++i)
                worst = std::max(worst, std::abs(th[std::size_t(i)] - expect[i]));
        }
    }
    detail = "max defect " + brief(worst) + " across both variants";
    return worst < 1e-13;
}

// 4. Dispersion error is finite and halves (first order) under eps -> eps/2.
bool criterion_dispersion(std::string& detail) {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string ratios;
    for (const double m : {0.0, 0.1}) {
        WalkParams p;
        p.mass = m;
        p.variant = m == 0.0 ? MassVariant::Massless : MassVariant::MassivePerSubstep;
        p.eps = 0.1;
        const DispersionReport coarse = dispersion_scan(p, 0.5, 5);
        p.eps = 0.05;
        const DispersionReport fine = dispersion_scan(p, 0.5, 5);
        ok = ok && std::isfinite(coarse.max_error) && std::isfinite(fine.max_error) &&
             coarse.max_error > 0.0;
        const double ratio = fine.max_error / coarse.max_error;
        ok = ok && ratio >= 0.3 && ratio <= 0.7;
        ratios += (ratios.empty() ? "" : ", ") + std::string("m=") + brief(m) +
                  " ratio " + brief(ratio);
    }
    const double secs = seconds_since(t0);
    detail = ratios + " in " + brief(secs) + " s";
    return ok && secs < 10.0;
}

// 5. Gaussian packet converges to the continuum propagator at first order.
bool criterion_convergence(std::string& detail) {
    PacketSpec spec;
    spec.kind = PacketSpec::Kind::Gaussian;
    spec.width = 0.8;  // 8 * eps0
    spec.center = {0.8, 0.8, 0.8};
    spec.momentum = {0.2, 0.1, 0.0};
    WalkParams p;
    p.mass = 0.2;
    p.variant = MassVariant::MassivePerSubstep;
    const ConvergenceReport rep = convergence_study(spec, 1.6, 0.1, 16, 3, p);
    std::string errs;
    for (const ConvergenceLevel& l : rep.levels)
        errs += (errs.empty() ? "errors " : ", ") + brief(l.error);
    detail = errs + "; fitted order " + brief(rep.estimated_order);
    return rep.estimated_order >= 0.8 && rep.estimated_order <= 1.2;
}

// 6. Tetra and grid engines agree through the gather isometry.
bool criterion_cross_model(std::string& detail) {
    const Lattice lat = build_lattice({{4, 4, 4}, 0.1, {}});
    WalkParams p;
    p.eps = 0.1;
    p.mass = 0.35;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        p.variant = trial < 10 ? MassVariant::MassivePerSubstep
                               : MassVariant::MassiveSingle;
        TetraField f = TetraField::zeros(lat);
        randomize(f, 100 + std::uint64_t(trial));
        const double gap = field_gap(gather(lat, step_dirac_tetra(lat, f, p)),
                                     step(gather(lat, f), p));
        worst = std::max(worst, gap);
    }
    detail = "max amplitude gap " + brief(worst) + " over 20 random states";
    return worst < 1e-12;
}

// 7. The shift preserves the facet-{0,1} / facet-{2,3} walkers, which
//    co-travel with identical displacements, never more than one site
//    level (half a lattice unit) apart.
bool criterion_walker_paths(std::string& detail) {
    const Lattice lat = build_lattice({{4, 4, 4}, 0.1, {}});
    std::array<SlotPermutation, 3> sub;
    Axis ax = Axis::Z;
    for (auto& s : sub) {
        const Axis a = ax;
        s = extract_permutation(
            lat, [&](const TetraField& x) { return shift_axis(lat, x, a); });
        ax = cycle_axis(ax);
    }

    for (const SlotPermutation& perm : sub)
        for (std::size_t s = 0; s < perm.size(); ++s)
            if ((s % 4 < 2) != (perm[s] % 4 < 2)) {
                detail = "facet subspace broken at slot " + std::to_string(s);
                return false;
            }

    long checked = 0;
    for (std::int64_t t = 0; t < lat.tetra_count(); ++t)
        for (const int f0 : {0, 1}) {
            std::int64_t sa = t * 4 + f0, sb = t * 4 + f0 + 2;
            Vec3i pa = lat.slot_site(lat.slot_ref(sa));
            Vec3i pb = lat.slot_site(lat.slot_ref(sb));
            for (int stepi = 0; stepi < 3; ++stepi)
                for (const SlotPermutation& perm : sub) {
                    sa = std::int64_t(perm[std::size_t(sa)]);
                    sb = std::int64_t(perm[std::size_t(sb)]);
                    const Vec3i na = lat.slot_site(lat.slot_ref(sa));
                    const Vec3i nb = lat.slot_site(lat.slot_ref(sb));
                    const Vec3i da = site_delta(lat.sites(), pa, na);
                    const Vec3i db = site_delta(lat.sites(), pb, nb);
                    const Vec3i off = site_delta(lat.sites(), na, nb);
                    // Same move, and at most one site level apart (site z
                    // spacing is half a lattice unit).
                    if (!(da == db) || off.x != 0 || off.y != 0 ||
                        std::abs(off.z) > 1) {
                        detail = "path divergence from tetra " + std::to_string(t);
                        return false;
                    }
                    pa = na;
                    pb = nb;
                    ++checked;
                }
        }
    detail = std::to_string(checked) + " co-travel checks over 3 composed steps";
    return true;
}

// 8. The composed robust shift fixes every ancilla exactly.
bool criterion_ancilla(std::string& detail) {
    const Lattice lat = build_lattice({{2, 2, 2}, 0.1, {}});
    for (const Axis ax : {Axis::Z, Axis::X, Axis::Y}) {
        const SlotPermutation perm =
            extract_robust_permutation(lat, [&](const RobustTetraField& f) {
                RobustTetraField g = robust_shift_stage(lat, f, 0, ax);
                g = robust_shift_stage(lat, g, 1, ax);
                return robust_shift_stage(lat, g, 2, ax);
            });
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (i % 8 >= 4 && perm[i] != i) {
                detail = "ancilla moved at index " + std::to_string(i);
                return false;
            }
            if (i % 8 < 4 && perm[i] % 8 >= 4) {
                detail = "walker pulled an ancilla at index " + std::to_string(i);
                return false;
            }
        }
    }
    detail = "ancillas exactly fixed for all three axes (exact permutation)";
    return true;
}

// 9. Robust walk: unitary with 5% broken links; identical to the grid
//    dynamics without defects.
bool criterion_robust_defects(std::string& detail) {
    WalkParams p;
    p.eps = 0.1;
    p.mass = 0.3;
    p.variant = MassVariant::MassivePerSubstep;
    p.mode = WalkMode::Robust4;

    LatticeSpec spec;
    spec.dims = {8, 8, 8};
    spec.eps = p.eps;
    spec.broken_links = sample_broken_links(spec.dims, 0.05, 7);
    const Lattice broken = build_lattice(spec);
    RobustTetraField f = RobustTetraField::zeros(broken);
    randomize(f, 9);
    const double n0 = f.norm();
    double drift = 0.0;
    for (int t = 0; t < 500; ++t) {
        f = step_dirac_robust(broken, f, p);
        drift = std::max(drift, std::abs(f.norm() - n0) / n0);
    }

    const Lattice clean = build_lattice({{8, 8, 8}, p.eps, {}});
    RobustTetraField rf = RobustTetraField::zeros(clean);
    randomize(rf, 10);
    SpinorField sv = gather_robust(clean, rf);
    double gap = 0.0;
    for (int t = 0; t < 10; ++t) {
        rf = step_dirac_robust(clean, rf, p);
        sv = step(sv, p);
        gap = std::max(gap, field_gap(gather_robust(clean, rf), sv));
    }
    detail = "drift " + brief(drift) + " over 500 defected steps; defect-free gap " +
             brief(gap) + " per step";
    return drift < 1e-10 && gap < 1e-12;
}

// 10. Weyl walkers: first-order dispersion against -+|p|, opposite
//     helicities pinned by the closed form along z.
bool criterion_weyl(std::string& detail) {
    bool ok = true;
    std::string ratios;
    for (const WalkMode mode : {WalkMode::WeylFirst, WalkMode::WeylMirror}) {
        WalkParams p;
        p.mode = mode;
        p.eps = 0.1;
        const DispersionReport coarse = dispersion_scan(p, 0.5, 5);
        p.eps = 0.05;
        const DispersionReport fine = dispersion_scan(p, 0.5, 5);
        ok = ok && std::isfinite(coarse.max_error) && coarse.max_error > 0.0;
        const double ratio = fine.max_error / coarse.max_error;
        ok = ok && ratio >= 0.3 && ratio <= 0.7;
        ratios += (ratios.empty() ? "" : ", ") +
                  std::string(mode == WalkMode::WeylFirst ? "first" : "mirror") +
                  " ratio " + brief(ratio);
    }

    // Helicity signs: along +z the first walker advances its up component
    // by +eps q, the mirror walker by -eps q.
    const double q = 0.3, eps = 0.1;
    WalkParams p;
    p.eps = eps;
    p.mode = WalkMode::WeylFirst;
    const Mat2 uf = walk_symbol2({0, 0, q}, p);
    p.mode = WalkMode::WeylMirror;
    const Mat2 um = walk_symbol2({0, 0, q}, p);
    double hel = std::abs(uf(0, 0) - std::polar(1.0, eps * q));
    hel = std::max(hel, std::abs(uf(1, 1) - std::polar(1.0, -eps * q)));
    hel = std::max(hel, std::abs(um(0, 0) - std::polar(1.0, -eps * q)));
    hel = std::max(hel, std::abs(um(1, 1) - std::polar(1.0, eps * q)));
    hel = std::max({hel, std::abs(uf(0, 1)), std::abs(uf(1, 0)), std::abs(um(0, 1)),
                    std::abs(um(1, 0))});
    ok = ok && hel < 1e-14;
    detail = ratios + "; helicity defect " + brief(hel);
    return ok;
}

// 11. Runs are byte-identical across parallelism degrees.
bool criterion_reproducibility(std::string& detail) {
    const fs::path base =
        fs::temp_directory_path() / ("tqw_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(base);
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };

    RunConfig cfg;
    cfg.dims = {4, 4, 4};
    cfg.eps = 0.1;
    cfg.defect_fraction = 0.05;
    cfg.defect_seed = 7;
    cfg.walk.eps = cfg.eps;
    cfg.walk.mass = 0.3;
    cfg.walk.variant = MassVariant::MassivePerSubstep;
    cfg.walk.mode = WalkMode::Robust4;
    cfg.steps = 8;
    cfg.snapshot_every = 4;
    cfg.packet.kind = PacketSpec::Kind::Gaussian;
    cfg.packet.center = {0.2, 0.2, 0.4};
    cfg.packet.width = 0.12;
    cfg.packet.momentum = {0.3, 0.0, 0.0};

    bool ok = true;
    for (const WalkMode mode : {WalkMode::Robust4, WalkMode::Dirac4}) {
        cfg.walk.mode = mode;
        if (mode == WalkMode::Dirac4) {
            cfg.defect_fraction = 0.0;
            cfg.engine = EngineChoice::Tetra;
        }
        const std::string tag = mode == WalkMode::Robust4 ? "rob" : "dir";
        cfg.directory = (base / (tag + "_p1")).string();
        set_parallelism(1);
        run(cfg);
        cfg.directory = (base / (tag + "_p4")).string();
        set_parallelism(4);
        run(cfg);
        set_parallelism(0);
        for (const char* name : {"state_000000.tqw", "state_000004.tqw",
                                 "state_000008.tqw", "norms.csv"})
            ok = ok && slurp(base / (tag + "_p1") / name) ==
                           slurp(base / (tag + "_p4") / name) &&
                 !slurp(base / (tag + "_p1") / name).empty();
    }
    std::error_code ec;
    fs::remove_all(base, ec);
    detail = ok ? "snapshots and norms byte-identical at parallelism 1 vs 4"
                : "byte mismatch between parallelism degrees";
    return ok;
}

// 12. Throughput report (never fails); the target lives in the README.
bool criterion_bench(std::string& detail) {
    const BenchResult r = bench_walk(64, 100);
    detail = g17(r.site_updates_per_second) + " site-updates/s on 64^3 x " +
             std::to_string(r.steps) + " steps, parallelism " +
             std::to_string(r.parallelism) + ", " + brief(r.seconds) + " s";
    return true;
}

struct Criterion {
    int id;
    const char* title;
    bool (*body)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "coin algebra identities", criterion_algebra},
    {2, "unitarity over 1000 massive steps", criterion_unitarity},
    {3, "zero-momentum mass phase", criterion_mass_phase},
    {4, "first-order dispersion refinement", criterion_dispersion},
    {5, "continuum convergence order", criterion_convergence},
    {6, "tetra/grid cross-model equivalence", criterion_cross_model},
    {7, "walker independence and same-path", criterion_walker_paths},
    {8, "robust ancilla invariance", criterion_ancilla},
    {9, "robust defect tolerance", criterion_robust_defects},
    {10, "weyl dispersion and helicity", criterion_weyl},
    {11, "parallelism reproducibility", criterion_reproducibility},
    {12, "benchmark throughput report", criterion_bench},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }
    if (only < 0 || only > 12) {
        std::cerr << "criterion must be in 1..12\n";
        return 2;
    }

    int failures = 0;
    for (const Criterion& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
                  << c.title << " -- " << detail << '\n';
        std::cout.flush();
    }
    return failures == 0 ? 0 : 1;
}
