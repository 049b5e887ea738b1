#include "twy/scalars.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

namespace twy {

GaussRat GaussRat::frac(long num, long den, long inum, long iden) {
    if (den == 0 || iden == 0) throw PoleError("zero denominator");
    return GaussRat(mpq_class(num, den), mpq_class(inum, iden));
}

GaussRat& GaussRat::operator+=(const GaussRat& o) {
    re_ += o.re_;
    if (sgn(o.im_) != 0) im_ += o.im_;
    return *this;
}

GaussRat& GaussRat::operator-=(const GaussRat& o) {
    re_ -= o.re_;
    if (sgn(o.im_) != 0) im_ -= o.im_;
    return *this;
}

GaussRat& GaussRat::operator*=(const GaussRat& o) {
    if (is_real() && o.is_real()) {
        re_ *= o.re_;
        return *this;
    }
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class i = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
}

GaussRat GaussRat::inv() const {
    if (is_zero()) throw PoleError("division by zero");
    if (is_real()) return GaussRat(1 / re_);
    mpq_class n = re_ * re_ + im_ * im_;
    return GaussRat(re_ / n, -im_ / n);
}

GaussRat& GaussRat::operator/=(const GaussRat& o) { return *this *= o.inv(); }

std::string GaussRat::str() const {
    if (is_real()) return re_.get_str();
    std::string s = sgn(re_) == 0 ? "" : re_.get_str();
    if (sgn(im_) > 0 && !s.empty()) s += "+";
    return s + im_.get_str() + "*i";
}

GaussRat GaussRat::parse(const std::string& s) {
    static const std::regex full(R"(^\s*([+-]?\d+(?:/\d+)?)\s*(?:([+-]\s*\d+(?:/\d+)?)\*i)?\s*$)");
    static const std::regex imag(R"(^\s*()([+-]?\s*\d+(?:/\d+)?)\*i\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, full) && !std::regex_match(s, m, imag))
        throw std::invalid_argument("bad exact scalar '" + s + "'");
    auto q = [](std::string t) {
        t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
        if (!t.empty() && t[0] == '+') t.erase(0, 1);
        mpq_class r(t);
        r.canonicalize();
        return r;
    };
    mpq_class re = m[1].length() ? q(m[1].str()) : mpq_class(0);
    mpq_class im = m[2].matched ? q(m[2].str()) : mpq_class(0);
    return GaussRat(re, im);
}

std::string to_string(const GaussRat& x) { return x.str(); }

std::string to_string(const Cplx& x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g%+.17g*i", x.real(), x.imag());
    return buf;
}

}  // namespace twy
