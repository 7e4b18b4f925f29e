#pragma once

// Arbitrary-precision reference evaluations (256-bit MPFR) of the scoring
// formulas, written as direct, non-stabilized expressions so they share no
// code path with the implementation under test.

#include <mpfr.h>

#include <span>
#include <vector>

namespace oracle {

class Big {
  public:
    Big() { mpfr_init2(v_, 256); mpfr_set_zero(v_, 1); }
    explicit Big(double d) {
        mpfr_init2(v_, 256);
        mpfr_set_d(v_, d, MPFR_RNDN);
    }
    Big(const Big& o) {
        mpfr_init2(v_, 256);
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Big& operator=(const Big& o) {
        mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    ~Big() { mpfr_clear(v_); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

    friend Big operator+(const Big& a, const Big& b) {
        Big r;
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Big operator-(const Big& a, const Big& b) {
        Big r;
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Big operator*(const Big& a, const Big& b) {
        Big r;
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Big operator/(const Big& a, const Big& b) {
        Big r;
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    static Big exp(const Big& a) {
        Big r;
        mpfr_exp(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    static Big log(const Big& a) {
        Big r;
        mpfr_log(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    static Big neg(const Big& a) {
        Big r;
        mpfr_neg(r.v_, a.v_, MPFR_RNDN);
        return r;
    }

  private:
    mpfr_t v_;
};

inline double log_mean_exp(std::span<const double> xs) {
    Big sum;
    for (double x : xs) sum = sum + Big::exp(Big(x));
    return Big::log(sum / Big(static_cast<double>(xs.size()))).to_double();
}

inline double tss(double s_true, std::span<const double> alts) {
    Big sum;
    for (double s : alts) sum = sum + Big::exp(Big(s));
    Big mean = sum / Big(static_cast<double>(alts.size()));
    return (Big(s_true) - Big::log(mean)).to_double();
}

// Softmax-ratio form, deliberately different from the -log1p route used
// by the implementation.
inline double tss_nce(double s_plus, std::span<const double> hard, double tau) {
    Big pos = Big::exp(Big(s_plus) / Big(tau));
    Big denom = pos;
    for (double h : hard) denom = denom + Big::exp(Big(h) / Big(tau));
    return Big::log(pos / denom).to_double();
}

inline double tss_pp(double s_plus, std::span<const double> hard, double tau,
                     double alpha) {
    return (Big(tss_nce(s_plus, hard, tau)) + Big(alpha) * Big(s_plus)).to_double();
}

inline double ppl(double s_plus) { return Big::exp(Big::neg(Big(s_plus))).to_double(); }

inline double ifd(double s_cond, double s_uncond) {
    return (Big::neg(Big(s_cond)) / Big::neg(Big(s_uncond))).to_double();
}

}  // namespace oracle
