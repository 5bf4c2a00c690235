#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qdl/errors.hpp"

namespace qdl {

// Partial-derivative storage with a small inline buffer: the weak-measurement
// and Lindblad fits carry at most a handful of parameters, and keeping those
// on the stack removes every allocation from the solver inner loops. Kernel
// fits (P up to a few hundred) spill to the heap.
class PartialBuf {
public:
    static constexpr std::size_t kInline = 4;

    PartialBuf() = default;

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    double* data() { return n_ <= kInline ? s_.data() : h_.data(); }
    const double* data() const { return n_ <= kInline ? s_.data() : h_.data(); }
    double& operator[](std::size_t i) { return data()[i]; }
    const double& operator[](std::size_t i) const { return data()[i]; }
    double* begin() { return data(); }
    double* end() { return data() + n_; }
    const double* begin() const { return data(); }
    const double* end() const { return data() + n_; }

    void resize(std::size_t n, double val = 0.0) {
        if (n == n_) return;
        if (n <= kInline) {
            if (n_ > kInline)
                std::copy(h_.begin(), h_.begin() + n, s_.begin());
            else
                for (std::size_t i = n_; i < n; ++i) s_[i] = val;
        } else {
            if (n_ <= kInline) h_.assign(s_.begin(), s_.begin() + n_);
            h_.resize(n, val);
        }
        n_ = n;
    }

    void assign(std::size_t n, double val) {
        resize(n, val);
        std::fill(begin(), end(), val);
    }

    friend bool operator==(const PartialBuf& a, const PartialBuf& b) {
        return a.n_ == b.n_ && std::equal(a.begin(), a.end(), b.begin());
    }
    friend bool operator==(const PartialBuf& a, const std::vector<double>& b) {
        return a.n_ == b.size() && std::equal(a.begin(), a.end(), b.begin());
    }

private:
    std::size_t n_ = 0;
    std::array<double, kInline> s_{};
    std::vector<double> h_;
};

// Forward-mode sensitivity scalar: a value plus its partial derivatives with
// respect to the active parameter vector. An empty partials vector means the
// number does not depend on any parameter (a constant); this keeps constants
// allocation-free and lets the same generic code run at plain-double speed
// when nothing is being differentiated.
class DiffScalar {
public:
    double v = 0.0;
    PartialBuf d; // empty == all partials zero

    DiffScalar() = default;
    DiffScalar(double value) : v(value) {} // NOLINT: implicit by design
    DiffScalar(double value, const std::vector<double>& partials) : v(value) {
        d.resize(partials.size());
        std::copy(partials.begin(), partials.end(), d.begin());
    }

    bool constant() const { return d.empty(); }
    std::size_t n_partials() const { return d.size(); }

    DiffScalar& operator+=(const DiffScalar& o) {
        v += o.v;
        add_partials(o, 1.0);
        return *this;
    }
    DiffScalar& operator-=(const DiffScalar& o) {
        v -= o.v;
        add_partials(o, -1.0);
        return *this;
    }
    DiffScalar& operator*=(const DiffScalar& o) {
        // (xy)' = x'y + xy'; the value must be saved before overwriting.
        const double xv = v;
        v *= o.v;
        for (double& p : d) p *= o.v;
        add_partials(o, xv);
        return *this;
    }
    DiffScalar& operator/=(const DiffScalar& o) {
        if (o.v == 0.0) throw NumericError("DiffScalar division by zero");
        const double inv = 1.0 / o.v;
        const double q = v * inv;
        v = q;
        for (double& p : d) p *= inv;
        add_partials(o, -q * inv);
        return *this;
    }

    DiffScalar& operator+=(double b) { v += b; return *this; }
    DiffScalar& operator-=(double b) { v -= b; return *this; }
    DiffScalar& operator*=(double b) {
        v *= b;
        for (double& p : d) p *= b;
        return *this;
    }
    DiffScalar& operator/=(double b) {
        if (b == 0.0) throw NumericError("DiffScalar division by zero");
        return (*this) *= (1.0 / b);
    }

    // this += s * o.d, growing the partials vector on first contact.
    void add_partials(const DiffScalar& o, double s) {
        if (o.d.empty()) return;
        if (d.empty()) {
            d.resize(o.d.size(), 0.0);
        } else if (d.size() != o.d.size()) {
            throw DimensionError("DiffScalar partials length mismatch: " +
                                 std::to_string(d.size()) + " vs " +
                                 std::to_string(o.d.size()));
        }
        const double* src = o.d.data();
        double* dst = d.data();
        const std::size_t n = d.size();
        for (std::size_t i = 0; i < n; ++i) dst[i] += s * src[i];
    }
};

inline double value(double x) { return x; }
inline double value(const DiffScalar& x) { return x.v; }

// Reset to zero while keeping the partials buffer capacity; accumulator
// workspaces rely on this to stay allocation-free across solver steps.
inline void zero_in_place(double& x) { x = 0.0; }
inline void zero_in_place(DiffScalar& x) {
    x.v = 0.0;
    std::fill(x.d.begin(), x.d.end(), 0.0);
}

inline DiffScalar operator+(DiffScalar a, const DiffScalar& b) { a += b; return a; }
inline DiffScalar operator-(DiffScalar a, const DiffScalar& b) { a -= b; return a; }
inline DiffScalar operator*(DiffScalar a, const DiffScalar& b) { a *= b; return a; }
inline DiffScalar operator/(DiffScalar a, const DiffScalar& b) { a /= b; return a; }

inline DiffScalar operator+(DiffScalar a, double b) { a += b; return a; }
inline DiffScalar operator-(DiffScalar a, double b) { a -= b; return a; }
inline DiffScalar operator*(DiffScalar a, double b) { a *= b; return a; }
inline DiffScalar operator/(DiffScalar a, double b) { a /= b; return a; }
inline DiffScalar operator+(double a, DiffScalar b) { b += a; return b; }
inline DiffScalar operator*(double a, DiffScalar b) { b *= a; return b; }
inline DiffScalar operator-(double a, const DiffScalar& b) {
    DiffScalar r(a - b.v);
    r.add_partials(b, -1.0);
    return r;
}
inline DiffScalar operator/(double a, const DiffScalar& b) {
    return DiffScalar(a) / b;
}

inline DiffScalar operator-(DiffScalar a) {
    a.v = -a.v;
    for (double& p : a.d) p = -p;
    return a;
}
inline DiffScalar operator+(const DiffScalar& a) { return a; }

inline bool operator==(const DiffScalar& a, const DiffScalar& b) { return a.v == b.v; }
inline bool operator<(const DiffScalar& a, const DiffScalar& b) { return a.v < b.v; }
inline bool operator>(const DiffScalar& a, const DiffScalar& b) { return a.v > b.v; }

// y += a * x with the chain rule, no temporaries. The workhorse of the solver
// inner loops.
inline void fma_add(double& y, double a, double x) { y += a * x; }
inline void fma_add(DiffScalar& y, const DiffScalar& a, const DiffScalar& x) {
    y.v += a.v * x.v;
    y.add_partials(a, x.v);
    y.add_partials(x, a.v);
}
inline void fma_add(DiffScalar& y, double a, const DiffScalar& x) {
    y.v += a * x.v;
    y.add_partials(x, a);
}
inline void fma_add(DiffScalar& y, const DiffScalar& a, double x) {
    y.v += a.v * x;
    y.add_partials(a, x);
}

inline void fma_sub(double& y, double a, double x) { y -= a * x; }
inline void fma_sub(DiffScalar& y, const DiffScalar& a, const DiffScalar& x) {
    y.v -= a.v * x.v;
    y.add_partials(a, -x.v);
    y.add_partials(x, -a.v);
}
inline void fma_sub(DiffScalar& y, double a, const DiffScalar& x) {
    y.v -= a * x.v;
    y.add_partials(x, -a);
}
inline void fma_sub(DiffScalar& y, const DiffScalar& a, double x) {
    y.v -= a.v * x;
    y.add_partials(a, -x);
}

using std::exp;
using std::fabs;
using std::sqrt;

inline DiffScalar exp(const DiffScalar& x) {
    const double e = std::exp(x.v);
    DiffScalar r(e);
    r.add_partials(x, e);
    return r;
}

inline DiffScalar sqrt(const DiffScalar& x) {
    const double s = std::sqrt(x.v);
    if (s == 0.0 && !x.d.empty())
        throw NumericError("DiffScalar sqrt derivative singular at 0");
    DiffScalar r(s);
    r.add_partials(x, 0.5 / s);
    return r;
}

inline DiffScalar fabs(const DiffScalar& x) {
    return x.v < 0.0 ? -x : x;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// logistic'(x) = logistic(x) (1 - logistic(x))
inline DiffScalar logistic(const DiffScalar& x) {
    const double s = logistic(x.v);
    DiffScalar r(s);
    r.add_partials(x, s * (1.0 - s));
    return r;
}

inline bool isfinite_value(double x) { return std::isfinite(x); }
inline bool isfinite_value(const DiffScalar& x) { return std::isfinite(x.v); }

// Named parameter vector theta; the generators of the dynamics are built from
// these entries.
struct ParameterVector {
    std::vector<double> values;
    std::vector<std::string> names;

    std::size_t size() const { return values.size(); }

    void validate() const {
        if (values.empty()) throw DimensionError("ParameterVector must have P >= 1");
        if (!names.empty() && names.size() != values.size())
            throw DimensionError("ParameterVector names/values length mismatch");
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j)
                if (names[i] == names[j])
                    throw ConfigError("duplicate parameter name: " + names[i]);
    }
};

// Seed forward sensitivities: element k carries value theta_k and the unit
// partial vector e_k.
inline std::vector<DiffScalar> lift(const std::vector<double>& theta) {
    std::vector<DiffScalar> out(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        out[k].v = theta[k];
        out[k].d.assign(theta.size(), 0.0);
        out[k].d[k] = 1.0;
    }
    return out;
}

inline std::vector<DiffScalar> lift(const ParameterVector& theta) {
    return lift(theta.values);
}

// Central-difference gradient, the independent oracle every sensitivity
// pipeline is validated against.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double h) {
    if (!(h > 0.0)) throw NumericError("finite difference step must be > 0");
    std::vector<double> grad(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double saved = theta[k];
        theta[k] = saved + h;
        const double fp = f(theta);
        theta[k] = saved - h;
        const double fm = f(theta);
        theta[k] = saved;
        grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

// Same oracle with a per-component step h_k = h_rel * max(1, |theta_k|).
inline std::vector<double> finite_difference_gradient_rel(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double h_rel = 1e-5) {
    std::vector<double> grad(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double h = h_rel * std::max(1.0, std::fabs(theta[k]));
        const double saved = theta[k];
        theta[k] = saved + h;
        const double fp = f(theta);
        theta[k] = saved - h;
        const double fm = f(theta);
        theta[k] = saved;
        grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace qdl
