#pragma once

// Ground-truth continuum dynamics and the numerical arbiters: the
// momentum-space Dirac Hamiltonian with its closed-form propagator, exact
// spectral evolution of grid fields, per-momentum walk transfer matrices,
// dispersion comparison, and convergence-order estimation.

#include <array>
#include <vector>

#include "tqw/algebra.hpp"
#include "tqw/spinor_model.hpp"
#include "tqw/walk_params.hpp"

namespace tqw {

using Vec3d = std::array<double, 3>;

// H(p) = (multiplier * m) gamma0 - sum_j alpha^j p_j. Hermitian, traceless,
// H^2 = E(p)^2 I with E(p) = sqrt(|p|^2 + (multiplier*m)^2); eigenvalues
// +-E(p), each twice. multiplier 3 targets the per-substep walk (three mass
// coins per step), 1 the single-mass variant. The alpha sign is fixed by
// requiring one walk step to equal exp(-i eps H) + O(eps^2).
Mat4 hamiltonian_symbol(const Vec3d& p, int mass_multiplier, double mass);

// exp(-i T H(p)) in closed form: cos(TE) I - i sin(TE)/E * H (T*H at E=0).
Mat4 dirac_propagator(const Vec3d& p, int mass_multiplier, double mass, double T);

// Exact evolution of a four-component grid field: forward DFT (e^{-ip.x}),
// exp(-iT H(p)) per mode with momenta 2 pi n / (N eps) mapped to the
// symmetric range (n > N/2 -> n - N), inverse DFT. Unitary.
// Throws std::invalid_argument unless ncomp == 4.
SpinorField spectral_evolve(const SpinorField& f, double T, double mass,
                            int mass_multiplier);

// Per-momentum transfer matrix of one full walk step: the product of the
// diagonal shift phases and coin factors in the exact substep order of the
// selected variant. walk_symbol4 serves the four-component modes,
// walk_symbol2 the Weyl modes (which ignore the mass).
Mat4 walk_symbol4(const Vec3d& p, const WalkParams& params, Axis start = Axis::Z);
Mat2 walk_symbol2(const Vec3d& p, const WalkParams& params, Axis start = Axis::Z);

// Eigenphases of a unitary, each in (-pi, pi], sorted ascending.
std::vector<double> eigenphases(const Mat2& u);
std::vector<double> eigenphases(const Mat4& u);

struct DispersionSample {
    Vec3d p{};
    std::vector<double> walk_energies;   // eigenphases / eps, sorted
    std::vector<double> exact_energies;  // +-E(p), sorted to match
    double error = 0.0;                  // max abs mismatch
};

struct DispersionReport {
    std::vector<DispersionSample> samples;
    double max_error = 0.0;
    // Largest |theta_i + theta_{n-1-i}| over all samples; the walk spectrum
    // comes in +- pairs, so this stays at rounding level.
    double pairing_defect = 0.0;
    double eps = 0.0;
    double mass = 0.0;
};

// Samples an n^3 momentum grid on [-p_box, p_box]^3 (n = 1 samples the
// origin) and compares walk eigenphases / eps against the exact +-E(p);
// Weyl modes are compared against +-|p|. Requires p_box <= pi / (2 eps)
// so every |eps E| < pi/2 and the phase matching is branch-unambiguous.
DispersionReport dispersion_scan(const WalkParams& params, double p_box, int n);

struct PacketSpec {
    enum class Kind { Gaussian, Plane, Delta };
    Kind kind = Kind::Gaussian;
    Vec3d center{};   // physical coordinates
    double width = 1.0;  // physical gaussian width; must be >= eps
    Vec3d momentum{};
    std::vector<cplx> polarization;  // ncomp entries; empty = basis state 0
};

// Normalized initial state on the grid (spacing eps):
//   gaussian: psi(k) ~ exp(-|x_k - c|^2 / 4w^2) exp(i p.x_k) chi, minimal
//             image distances;
//   plane:    single Fourier mode, momentum snapped to the nearest mode;
//   delta:    chi at the site nearest the center.
// Throws std::invalid_argument on gaussian width < eps or zero polarization.
SpinorField make_packet(const PacketSpec& spec, const Grid3& grid, double eps,
                        int ncomp);

struct ConvergenceLevel {
    double eps = 0.0;
    int grid = 0;      // sites per axis
    double error = 0.0;  // relative L2 against the exact propagator
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    // Least-squares slope of log(error) vs log(eps); 0 when every level is
    // already at rounding level (nothing to fit).
    double estimated_order = 0.0;
};

// Walks the packet for T/eps steps at each refinement level (eps0, grid0),
// (eps0/2, 2*grid0), ... and compares against spectral_evolve at physical
// time T; the physical box grid*eps stays fixed. The mass multiplier is 3
// for the per-substep variant and 1 for the single-mass variant. Throws
// std::invalid_argument when T is not an integer multiple of some level's
// eps or nlevels < 2.
ConvergenceReport convergence_study(const PacketSpec& packet, double T, double eps0,
                                    int grid0, int nlevels, const WalkParams& params);

}  // namespace tqw
