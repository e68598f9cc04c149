#pragma once

// Dense 2x2 / 4x4 complex matrix kernel and the coin algebra of the walk:
// Pauli matrices, SU(2) rotations, the order-3 directional coin C and its
// two-walker lift, the mass coin, and the Dirac alpha/gamma matrices.

#include <array>
#include <complex>
#include <cstddef>

namespace tqw {

using cplx = std::complex<double>;

// Row-major dense complex matrix of compile-time dimension N.
template <std::size_t N>
struct Mat {
    std::array<cplx, N * N> a{};

    cplx& operator()(std::size_t r, std::size_t c) { return a[r * N + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return a[r * N + c]; }

    static Mat identity() {
        Mat m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat operator*(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                const cplx v = (*this)(i, k);
                if (v == cplx{}) continue;
                for (std::size_t j = 0; j < N; ++j) r(i, j) += v * o(k, j);
            }
        return r;
    }

    Mat operator+(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < N * N; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }

    Mat operator-(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < N * N; ++i) r.a[i] = a[i] - o.a[i];
        return r;
    }

    Mat operator*(cplx s) const {
        Mat r;
        for (std::size_t i = 0; i < N * N; ++i) r.a[i] = a[i] * s;
        return r;
    }

    Mat dagger() const {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r(i, j) = std::conj((*this)(j, i));
        return r;
    }

    std::array<cplx, N> apply(const std::array<cplx, N>& v) const {
        std::array<cplx, N> r{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) r[i] += (*this)(i, j) * v[j];
        return r;
    }
};

using Mat2 = Mat<2>;
using Mat4 = Mat<4>;

// Largest |entry| of A - B; the workhorse of all matrix identity tests.
template <std::size_t N>
double max_abs_diff(const Mat<N>& x, const Mat<N>& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < N * N; ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

template <std::size_t N>
double unitarity_defect(const Mat<N>& u) {
    return max_abs_diff(u * u.dagger(), Mat<N>::identity());
}

Mat4 kron(const Mat2& a, const Mat2& b);

// pauli(0..3) = sigma_0 (identity), sigma_x, sigma_y, sigma_z.
Mat2 pauli(int mu);

// rotation(n, theta) = exp(-i theta sigma_n / 2), n in {1,2,3}.
Mat2 rotation(int axis, double theta);

// The order-3 directional coin: C = e^{i pi/3} R_z(pi/2) R_x(pi/2).
// Conjugation by C advances the Pauli cycle: C s3 C^+ = s1, C s1 C^+ = s2,
// C s2 C^+ = s3.
Mat2 coin_C();

// Two-walker lift: sigma_0 (x) C. Conjugation advances the alpha cycle.
Mat4 coin_C_hat();

// Mass coin M = exp(-i eps m gamma0) = cos(m eps) I - i sin(m eps) gamma0.
Mat4 mass_coin(double mass, double eps);

// alpha_j = sigma_3 (x) sigma_j (j in 1..3), gamma0 = sigma_1 (x) sigma_0.
Mat4 alpha(int j);
Mat4 gamma0();

}  // namespace tqw
