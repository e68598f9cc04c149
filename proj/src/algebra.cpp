#include "tqw/algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace tqw {

Mat4 kron(const Mat2& a, const Mat2& b) {
    Mat4 r;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l)
                    r(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return r;
}

Mat2 pauli(int mu) {
    Mat2 m;
    switch (mu) {
        case 0: m(0, 0) = 1.0; m(1, 1) = 1.0; break;
        case 1: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
        case 2: m(0, 1) = cplx(0.0, -1.0); m(1, 0) = cplx(0.0, 1.0); break;
        case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
        default: throw std::invalid_argument("pauli: index must be 0..3");
    }
    return m;
}

Mat2 rotation(int axis, double theta) {
    if (axis < 1 || axis > 3) throw std::invalid_argument("rotation: axis must be 1..3");
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    // cos(t/2) I - i sin(t/2) sigma_axis
    Mat2 r = pauli(0) * cplx(c, 0.0) + pauli(axis) * cplx(0.0, -s);
    return r;
}

Mat2 coin_C() {
    const cplx phase = std::polar(1.0, M_PI / 3.0);
    Mat2 c = rotation(3, M_PI / 2.0) * rotation(1, M_PI / 2.0);
    return c * phase;
}

Mat4 coin_C_hat() { return kron(pauli(0), coin_C()); }

Mat4 gamma0() { return kron(pauli(1), pauli(0)); }

Mat4 alpha(int j) {
    if (j < 1 || j > 3) throw std::invalid_argument("alpha: index must be 1..3");
    return kron(pauli(3), pauli(j));
}

Mat4 mass_coin(double mass, double eps) {
    const double t = mass * eps;
    return Mat4::identity() * cplx(std::cos(t), 0.0) + gamma0() * cplx(0.0, -std::sin(t));
}

}  // namespace tqw
