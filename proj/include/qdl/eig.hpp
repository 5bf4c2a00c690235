#pragma once

#include <cmath>
#include <vector>

#include "qdl/matrix.hpp"

namespace qdl {

namespace detail {

// Cyclic Jacobi on a real symmetric matrix stored dense. Good enough for the
// positivity monitor at dim <= 64; never differentiated.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[idx(p, q)] * a[idx(p, q)];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[idx(p, q)];
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a[idx(p, p)], aqq = a[idx(q, q)];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[idx(k, p)], akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[idx(p, k)], aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a[idx(i, i)];
    return eig;
}

} // namespace detail

// Eigenvalues of a Hermitian complex matrix H = A + iB through the standard
// real-symmetric embedding [[A, -B], [B, A]], whose spectrum is that of H
// with every eigenvalue doubled.
inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix<double>& m) {
    const int n = m.dim();
    if (n == 2) {
        // closed form for the qubit case
        const double a = m.at(0, 0).re, d = m.at(1, 1).re;
        const double offsq = abs2(m.at(0, 1));
        const double mid = 0.5 * (a + d);
        const double rad = std::sqrt(0.25 * (a - d) * (a - d) + offsq);
        return {mid - rad, mid + rad};
    }
    const int N = 2 * n;
    std::vector<double> big(static_cast<std::size_t>(N) * N, 0.0);
    auto idx = [N](int i, int j) { return static_cast<std::size_t>(i) * N + j; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Cd z = m.at(i, j);
            big[idx(i, j)] = z.re;
            big[idx(i + n, j + n)] = z.re;
            big[idx(i + n, j)] = z.im;
            big[idx(i, j + n)] = -z.im;
        }
    }
    std::vector<double> all = detail::jacobi_eigenvalues(std::move(big), N);
    std::sort(all.begin(), all.end());
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = 0.5 * (all[2 * i] + all[2 * i + 1]);
    return eig;
}

inline double min_hermitian_eigenvalue(const ComplexMatrix<double>& m) {
    const auto eig = hermitian_eigenvalues(m);
    return *std::min_element(eig.begin(), eig.end());
}

// Positivity monitor: true when the smallest eigenvalue is above -tolerance.
template <class T>
bool positivity_ok(const DensityMatrix<T>& rho, double tolerance = 1e-8) {
    return min_hermitian_eigenvalue(to_value(rho.matrix())) >= -tolerance;
}

} // namespace qdl
