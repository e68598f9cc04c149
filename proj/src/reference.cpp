#include "tqw/reference.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tqw {

namespace {

double effective_mass(const WalkParams& params) {
    if (params.variant == MassVariant::Massless) return 0.0;
    const int mult = params.variant == MassVariant::MassiveSingle ? 1 : 3;
    return mult * params.mass;
}

double energy(const Vec3d& p, double m_eff) {
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + m_eff * m_eff);
}

double axis_component(const Vec3d& p, Axis ax) { return p[std::size_t(int(ax))]; }

Axis prev_axis(Axis a) { return cycle_axis(cycle_axis(a)); }

Mat4 shift_symbol4(double theta) {
    Mat4 s;
    const cplx up = std::polar(1.0, theta), dn = std::polar(1.0, -theta);
    s(0, 0) = up;
    s(1, 1) = dn;
    s(2, 2) = dn;
    s(3, 3) = up;
    return s;
}

Mat2 shift_symbol2(double theta, bool reversed) {
    Mat2 s;
    const cplx up = std::polar(1.0, reversed ? -theta : theta);
    s(0, 0) = up;
    s(1, 1) = std::conj(up);
    return s;
}

template <std::size_t N>
std::vector<double> phases_of(const Mat<N>& u) {
    Eigen::Matrix<cplx, int(N), int(N)> m;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m(int(i), int(j)) = u(i, j);
    Eigen::ComplexEigenSolver<Eigen::Matrix<cplx, int(N), int(N)>> ces;
    ces.compute(m, /*computeEigenvectors=*/false);
    std::vector<double> th(N);
    for (std::size_t i = 0; i < N; ++i) th[i] = std::arg(ces.eigenvalues()(int(i)));
    std::sort(th.begin(), th.end());
    return th;
}

int symmetric_mode(int n, int size) { return n > size / 2 ? n - size : n; }

}  // namespace

Mat4 hamiltonian_symbol(const Vec3d& p, int mass_multiplier, double mass) {
    Mat4 h = gamma0() * cplx(mass_multiplier * mass, 0.0);
    for (int j = 1; j <= 3; ++j) h = h - alpha(j) * cplx(p[std::size_t(j - 1)], 0.0);
    return h;
}

Mat4 dirac_propagator(const Vec3d& p, int mass_multiplier, double mass, double T) {
    const double e = energy(p, mass_multiplier * mass);
    if (e == 0.0) return Mat4::identity();
    const Mat4 h = hamiltonian_symbol(p, mass_multiplier, mass);
    return Mat4::identity() * cplx(std::cos(T * e), 0.0) +
           h * cplx(0.0, -std::sin(T * e) / e);
}

SpinorField spectral_evolve(const SpinorField& f, double T, double mass,
                            int mass_multiplier) {
    if (f.ncomp != 4)
        throw std::invalid_argument("spectral_evolve requires a 4-component field");
    SpinorField out = f;
    int dims[3] = {f.grid.nx, f.grid.ny, f.grid.nz};
    fftw_complex* buf = reinterpret_cast<fftw_complex*>(out.data.data());
    fftw_plan fwd = fftw_plan_many_dft(3, dims, 4, buf, nullptr, 4, 1, buf, nullptr,
                                       4, 1, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_many_dft(3, dims, 4, buf, nullptr, 4, 1, buf, nullptr,
                                       4, 1, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);

    const double base = 2.0 * M_PI / f.eps;
    for (int mx = 0; mx < dims[0]; ++mx)
        for (int my = 0; my < dims[1]; ++my)
            for (int mz = 0; mz < dims[2]; ++mz) {
                const Vec3d p = {base * symmetric_mode(mx, dims[0]) / dims[0],
                                 base * symmetric_mode(my, dims[1]) / dims[1],
                                 base * symmetric_mode(mz, dims[2]) / dims[2]};
                const Mat4 prop = dirac_propagator(p, mass_multiplier, mass, T);
                const std::int64_t site = out.grid.index(mx, my, mz);
                std::array<cplx, 4> v;
                for (int c = 0; c < 4; ++c) v[std::size_t(c)] = out.at(site, c);
                v = prop.apply(v);
                for (int c = 0; c < 4; ++c) out.at(site, c) = v[std::size_t(c)];
            }

    fftw_execute(bwd);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    const double scale = 1.0 / (double(dims[0]) * dims[1] * dims[2]);
    for (cplx& z : out.data) z *= scale;
    return out;
}

Mat4 walk_symbol4(const Vec3d& p, const WalkParams& params, Axis start) {
    params.validate();
    if (component_count(params.mode) != 4)
        throw std::invalid_argument("walk_symbol4 requires a four-component mode");
    const Mat4 coin = coin_C_hat().dagger();
    const Mat4 m = mass_coin(params.mass, params.eps);
    const bool per_substep = params.variant == MassVariant::MassivePerSubstep;
    Mat4 u = params.variant == MassVariant::MassiveSingle ? m : Mat4::identity();
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        u = shift_symbol4(params.eps * axis_component(p, ax)) * u;
        if (per_substep) u = m * u;
        u = coin * u;
        ax = cycle_axis(ax);
    }
    return u;
}

Mat2 walk_symbol2(const Vec3d& p, const WalkParams& params, Axis start) {
    params.validate();
    if (component_count(params.mode) != 2)
        throw std::invalid_argument("walk_symbol2 requires a Weyl mode");
    const bool mirror = params.mode == WalkMode::WeylMirror;
    const Mat2 coin = mirror ? coin_C() : coin_C().dagger();
    Mat2 u = Mat2::identity();
    Axis ax = start;
    for (int sub = 0; sub < 3; ++sub) {
        u = coin * (shift_symbol2(params.eps * axis_component(p, ax), mirror) * u);
        ax = mirror ? prev_axis(ax) : cycle_axis(ax);
    }
    return u;
}

std::vector<double> eigenphases(const Mat2& u) { return phases_of(u); }
std::vector<double> eigenphases(const Mat4& u) { return phases_of(u); }

DispersionReport dispersion_scan(const WalkParams& params, double p_box, int n) {
    params.validate();
    if (n < 1) throw std::invalid_argument("dispersion_scan needs n >= 1");
    if (p_box < 0.0 || p_box > M_PI / (2.0 * params.eps))
        throw std::invalid_argument("p_box must lie within [0, pi / (2 eps)]");

    const bool weyl = component_count(params.mode) == 2;
    const double m_eff = weyl ? 0.0 : effective_mass(params);

    DispersionReport rep;
    rep.eps = params.eps;
    rep.mass = params.mass;
    auto coord = [&](int i) {
        return n == 1 ? 0.0 : -p_box + 2.0 * p_box * i / (n - 1);
    };
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy)
            for (int iz = 0; iz < n; ++iz) {
                DispersionSample s;
                s.p = {coord(ix), coord(iy), coord(iz)};
                const std::vector<double> th =
                    weyl ? eigenphases(walk_symbol2(s.p, params))
                         : eigenphases(walk_symbol4(s.p, params));
                const double e = energy(s.p, m_eff);
                s.exact_energies =
                    weyl ? std::vector<double>{-e, e} : std::vector<double>{-e, -e, e, e};
                s.walk_energies.resize(th.size());
                double err = 0.0, pair = 0.0;
                for (std::size_t i = 0; i < th.size(); ++i) {
                    s.walk_energies[i] = th[i] / params.eps;
                    err = std::max(err,
                                   std::abs(s.walk_energies[i] - s.exact_energies[i]));
                    pair = std::max(pair, std::abs(th[i] + th[th.size() - 1 - i]));
                }
                s.error = err;
                rep.max_error = std::max(rep.max_error, err);
                rep.pairing_defect = std::max(rep.pairing_defect, pair);
                rep.samples.push_back(std::move(s));
            }
    return rep;
}

SpinorField make_packet(const PacketSpec& spec, const Grid3& grid, double eps,
                        int ncomp) {
    std::vector<cplx> chi = spec.polarization;
    if (chi.empty()) {
        chi.assign(std::size_t(ncomp), cplx{});
        chi[0] = 1.0;
    }
    if (int(chi.size()) != ncomp)
        throw std::invalid_argument("polarization size does not match the mode");
    double cn = 0.0;
    for (const cplx& z : chi) cn += std::norm(z);
    if (cn == 0.0) throw std::invalid_argument("polarization must be nonzero");
    for (cplx& z : chi) z /= std::sqrt(cn);

    SpinorField f = SpinorField::zeros(grid, ncomp, eps);
    const int n[3] = {grid.nx, grid.ny, grid.nz};

    switch (spec.kind) {
        case PacketSpec::Kind::Delta: {
            const std::int64_t site =
                grid.index(int(std::lround(spec.center[0] / eps)),
                           int(std::lround(spec.center[1] / eps)),
                           int(std::lround(spec.center[2] / eps)));
            for (int c = 0; c < ncomp; ++c) f.at(site, c) = chi[std::size_t(c)];
            return f;
        }
        case PacketSpec::Kind::Plane: {
            long mode[3];
            for (int j = 0; j < 3; ++j)
                mode[j] = std::lround(spec.momentum[std::size_t(j)] * n[j] * eps /
                                      (2.0 * M_PI));
            const double amp = 1.0 / std::sqrt(double(grid.size()));
            for (std::int64_t s = 0; s < f.sites(); ++s) {
                const Vec3i k = grid.coords(s);
                const double ph =
                    2.0 * M_PI *
                    (double(mode[0]) * k.x / n[0] + double(mode[1]) * k.y / n[1] +
                     double(mode[2]) * k.z / n[2]);
                const cplx w = std::polar(amp, ph);
                for (int c = 0; c < ncomp; ++c) f.at(s, c) = w * chi[std::size_t(c)];
            }
            return f;
        }
        case PacketSpec::Kind::Gaussian:
        default: {
            if (spec.width < eps)
                throw std::invalid_argument("gaussian width must be >= eps");
            for (std::int64_t s = 0; s < f.sites(); ++s) {
                const Vec3i k = grid.coords(s);
                const double x[3] = {eps * k.x, eps * k.y, eps * k.z};
                double d2 = 0.0, carrier = 0.0;
                for (int j = 0; j < 3; ++j) {
                    const double box = eps * n[j];
                    double d = std::fmod(x[j] - spec.center[std::size_t(j)], box);
                    if (d > 0.5 * box) d -= box;
                    if (d < -0.5 * box) d += box;
                    d2 += d * d;
                    carrier += spec.momentum[std::size_t(j)] * x[j];
                }
                const cplx w = std::polar(
                    std::exp(-d2 / (4.0 * spec.width * spec.width)), carrier);
                for (int c = 0; c < ncomp; ++c) f.at(s, c) = w * chi[std::size_t(c)];
            }
            const double norm = f.norm();
            for (cplx& z : f.data) z /= norm;
            return f;
        }
    }
}

ConvergenceReport convergence_study(const PacketSpec& packet, double T, double eps0,
                                    int grid0, int nlevels, const WalkParams& params) {
    params.validate();
    if (nlevels < 2) throw std::invalid_argument("convergence_study needs >= 2 levels");
    if (component_count(params.mode) != 4)
        throw std::invalid_argument("convergence_study targets the Dirac modes");
    const int mult = params.variant == MassVariant::MassiveSingle ? 1 : 3;

    ConvergenceReport rep;
    for (int lvl = 0; lvl < nlevels; ++lvl) {
        const double eps = eps0 / double(1 << lvl);
        const int size = grid0 << lvl;
        const double raw_steps = T / eps;
        const long steps = std::lround(raw_steps);
        if (steps < 0 || std::abs(raw_steps - double(steps)) >
                             1e-9 * std::max(1.0, std::abs(raw_steps)))
            throw std::invalid_argument(
                "T must be an integer multiple of every level's eps");

        WalkParams wp = params;
        wp.eps = eps;
        const Grid3 g{size, size, size};
        const SpinorField f0 = make_packet(packet, g, eps, 4);
        SpinorField walked = f0;
        for (long t = 0; t < steps; ++t) walked = step(walked, wp);
        const SpinorField exact = spectral_evolve(f0, T, params.mass, mult);

        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < walked.data.size(); ++i) {
            num += std::norm(walked.data[i] - exact.data[i]);
            den += std::norm(exact.data[i]);
        }
        rep.levels.push_back({eps, size, std::sqrt(num / den)});
    }

    // Log-log least squares; degenerate (rounding-level) data fits nothing.
    double emax = 0.0;
    for (const ConvergenceLevel& l : rep.levels) emax = std::max(emax, l.error);
    if (emax < 1e-13) return rep;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = double(rep.levels.size());
    for (const ConvergenceLevel& l : rep.levels) {
        const double x = std::log(l.eps), y = std::log(std::max(l.error, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.estimated_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

}  // namespace tqw
