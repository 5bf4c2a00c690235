#pragma once

#include <cmath>
#include <type_traits>

#include "qdl/diff.hpp"

namespace qdl {

// Complex number as an explicit (re, im) pair so the same template works for
// plain doubles and for DiffScalar. std::complex<T> is only specified for the
// builtin floating types, and keeping the pair explicit keeps the chain rule
// uniform.
template <class T>
struct Cplx {
    T re{};
    T im{};

    Cplx() = default;
    Cplx(T r) : re(std::move(r)) {} // NOLINT: implicit real -> complex
    Cplx(T r, T i) : re(std::move(r)), im(std::move(i)) {}

    Cplx& operator+=(const Cplx& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    Cplx& operator-=(const Cplx& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    Cplx& operator*=(const T& s) {
        re *= s;
        im *= s;
        return *this;
    }
    template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
    Cplx& operator*=(double s) {
        re *= s;
        im *= s;
        return *this;
    }
};

using Cd = Cplx<double>;

template <class T>
Cplx<T> operator+(Cplx<T> a, const Cplx<T>& b) { a += b; return a; }
template <class T>
Cplx<T> operator-(Cplx<T> a, const Cplx<T>& b) { a -= b; return a; }
template <class T>
Cplx<T> operator-(const Cplx<T>& a) { return {-a.re, -a.im}; }

template <class T>
Cplx<T> operator*(const Cplx<T>& a, const Cplx<T>& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class T>
Cplx<T> operator*(Cplx<T> a, const T& s) { a *= s; return a; }
template <class T>
Cplx<T> operator*(const T& s, Cplx<T> a) { a *= s; return a; }
template <class T, std::enable_if_t<!std::is_same_v<T, double>, int> = 0>
Cplx<T> operator*(Cplx<T> a, double s) { a *= s; return a; }
template <class T, std::enable_if_t<!std::is_same_v<T, double>, int> = 0>
Cplx<T> operator*(double s, Cplx<T> a) { a *= s; return a; }

template <class T>
Cplx<T> conj(const Cplx<T>& a) { return {a.re, -a.im}; }

template <class T>
T real(const Cplx<T>& a) { return a.re; }
template <class T>
T imag(const Cplx<T>& a) { return a.im; }

// |a|^2 without the square root.
template <class T>
T abs2(const Cplx<T>& a) { return a.re * a.re + a.im * a.im; }

template <class T>
void zero_in_place(Cplx<T>& z) {
    zero_in_place(z.re);
    zero_in_place(z.im);
}

inline Cd to_value(const Cd& z) { return z; }
inline Cd to_value(const Cplx<DiffScalar>& z) { return {z.re.v, z.im.v}; }

// acc += a * b expanded component-wise through fma_add so no temporary
// partials vectors are created. Overloads cover the mixed constant cases that
// appear when fixed operators multiply parameterized states.
template <class T, class A, class B>
void cfma(Cplx<T>& acc, const Cplx<A>& a, const Cplx<B>& b) {
    fma_add(acc.re, a.re, b.re);
    fma_sub(acc.re, a.im, b.im);
    fma_add(acc.im, a.re, b.im);
    fma_add(acc.im, a.im, b.re);
}

// acc += a * conj(b)
template <class T, class A, class B>
void cfma_conj(Cplx<T>& acc, const Cplx<A>& a, const Cplx<B>& b) {
    fma_add(acc.re, a.re, b.re);
    fma_add(acc.re, a.im, b.im);
    fma_sub(acc.im, a.re, b.im);
    fma_add(acc.im, a.im, b.re);
}

// acc += s * z for scalar s (real)
template <class T, class S, class Z>
void axpy(Cplx<T>& acc, const S& s, const Cplx<Z>& z) {
    fma_add(acc.re, s, z.re);
    fma_add(acc.im, s, z.im);
}

template <class T>
bool isfinite_value(const Cplx<T>& z) {
    return isfinite_value(z.re) && isfinite_value(z.im);
}

} // namespace qdl
