#pragma once

#include <gmpxx.h>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace twy {

struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class GaussRat {
public:
    GaussRat() = default;
    GaussRat(long n) : re_(n) {}
    GaussRat(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
        re_.canonicalize();
        im_.canonicalize();
    }
    static GaussRat frac(long num, long den, long inum = 0, long iden = 1);
    static GaussRat parse(const std::string& s);

    const mpq_class& re() const { return re_; }
    const mpq_class& im() const { return im_; }
    bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
    bool is_real() const { return sgn(im_) == 0; }

    GaussRat& operator+=(const GaussRat& o);
    GaussRat& operator-=(const GaussRat& o);
    GaussRat& operator*=(const GaussRat& o);
    GaussRat& operator/=(const GaussRat& o);
    GaussRat operator-() const { return GaussRat(-re_, -im_); }
    GaussRat inv() const;

    friend GaussRat operator+(GaussRat a, const GaussRat& b) { return a += b; }
    friend GaussRat operator-(GaussRat a, const GaussRat& b) { return a -= b; }
    friend GaussRat operator*(GaussRat a, const GaussRat& b) { return a *= b; }
    friend GaussRat operator/(GaussRat a, const GaussRat& b) { return a /= b; }
    friend bool operator==(const GaussRat& a, const GaussRat& b) { return a.re_ == b.re_ && a.im_ == b.im_; }
    friend bool operator!=(const GaussRat& a, const GaussRat& b) { return !(a == b); }

    std::string str() const;
    std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }

private:
    mpq_class re_{0};
    mpq_class im_{0};
};

using Cplx = std::complex<double>;

inline bool is_zero(const GaussRat& x) { return x.is_zero(); }
inline bool is_zero(const Cplx& x) { return x.real() == 0.0 && x.imag() == 0.0; }

inline GaussRat inv(const GaussRat& x) { return x.inv(); }
inline Cplx inv(const Cplx& x) {
    if (is_zero(x)) throw PoleError("division by zero");
    return 1.0 / x;
}

inline double magnitude(const GaussRat& x) { return std::abs(x.to_complex()); }
inline double magnitude(const Cplx& x) { return std::abs(x); }

inline Cplx to_complex(const GaussRat& x) { return x.to_complex(); }
inline Cplx to_complex(const Cplx& x) { return x; }

std::string to_string(const GaussRat& x);
std::string to_string(const Cplx& x);

template <class S>
S from_exact(const GaussRat& x);
template <>
inline GaussRat from_exact<GaussRat>(const GaussRat& x) { return x; }
template <>
inline Cplx from_exact<Cplx>(const GaussRat& x) { return x.to_complex(); }

template <class S>
S tilde(const S& u, const S& rho) { return -u - rho; }

template <class S>
S fp(const S& u, const S& v) {
    S d = u - v;
    return (d + S(1)) * inv(d);
}

template <class S>
S fm(const S& u, const S& v) {
    S d = u - v;
    return (d - S(1)) * inv(d);
}

template <class S>
S f_factor(int sign, const std::vector<S>& us, const std::vector<S>& vs) {
    S r(1);
    for (const auto& a : us)
        for (const auto& b : vs) r *= sign > 0 ? fp(a, b) : fm(a, b);
    return r;
}

template <class S>
S f_plus(const S& u, const std::vector<S>& vs) { return f_factor<S>(1, {u}, vs); }
template <class S>
S f_minus(const S& u, const std::vector<S>& vs) { return f_factor<S>(-1, {u}, vs); }

template <class S>
S p_factor(const S& v, const S& rho, int sign) {
    S d = v - tilde(v, rho);
    return sign > 0 ? S(1) + inv(d) : S(1) - inv(d);
}

}  // namespace twy
