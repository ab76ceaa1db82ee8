#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rbc/errors.hpp"

namespace rbc::stats {

// Natural-log probability; -inf encodes zero.
struct LogProb {
    double value = 0.0;

    double prob() const noexcept { return std::exp(value); }
    double log10() const noexcept { return value / std::numbers::ln10; }
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)], Loader's Stirling error term.
inline double stirling_error(double n) {
    constexpr double s0 = 1.0 / 12, s1 = 1.0 / 360, s2 = 1.0 / 1260, s3 = 1.0 / 1680, s4 = 1.0 / 1188;
    if (n <= 15.0) {
        if (n == 0.0) return 0.0;
        return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n -
               0.5 * std::log(2.0 * std::numbers::pi);
    }
    const double nn = n * n;
    if (n > 500) return (s0 - s1 / nn) / n;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x / np) + np - x, evaluated without cancellation near x = np.
inline double binomial_deviance(double x, double np) {
    if (std::fabs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(1 - e^x) for x <= 0.
inline double log1m_exp(double x) {
    if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

// Continued fraction of the regularized incomplete beta (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-14;
    const int max_iter = std::max(500, static_cast<int>(8.0 * std::sqrt(a + b)));
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

// Series for the regularized lower incomplete gamma, log domain.
inline double log_gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(sum);
}

// Continued fraction for the regularized upper incomplete gamma, log domain.
inline double log_gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(h);
}

}  // namespace detail

// log f_B(x; trials, prob), saddle-point form (Loader), accurate to a few ulps.
inline double binom_log_pmf(long long x, long long trials, double prob) {
    using detail::kNegInf;
    if (x < 0 || x > trials) return kNegInf;
    const double n = static_cast<double>(trials), k = static_cast<double>(x);
    const double q = 1.0 - prob;
    if (prob == 0.0) return x == 0 ? 0.0 : kNegInf;
    if (q == 0.0) return x == trials ? 0.0 : kNegInf;
    if (x == 0) return prob < 0.1 ? -detail::binomial_deviance(n, n * q) - n * prob : n * std::log(q);
    if (x == trials)
        return q < 0.1 ? -detail::binomial_deviance(n, n * prob) - n * q : n * std::log(prob);
    const double lc = detail::stirling_error(n) - detail::stirling_error(k) -
                      detail::stirling_error(n - k) - detail::binomial_deviance(k, n * prob) -
                      detail::binomial_deviance(n - k, n * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(k) + std::log1p(-k / n);
    return lc - 0.5 * lf;
}

// ln P(X >= x) for X ~ Binomial(trials, prob).
//
// Up to 64 trials the tail is summed term by term in log space. Beyond that it is
// the regularized incomplete beta I_prob(x, trials - x + 1), evaluated by
// continued fraction on whichever side of the mean converges, with the
// prefactor written as a binomial pmf so no lgamma differences are taken.
inline LogProb binom_log_sf(long long x, long long trials, double prob) {
    if (trials < 0 || x < 0 || x > trials)
        throw InvalidArgument("binomial tail needs 0 <= x <= trials, got x=" + std::to_string(x) +
                              " trials=" + std::to_string(trials));
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArgument("binomial probability outside [0,1]");
    if (x == 0) return {0.0};
    if (prob == 0.0) return {detail::kNegInf};
    if (prob == 1.0) return {0.0};

    if (trials <= 64) {
        double acc = detail::kNegInf;
        for (long long i = trials; i >= x; --i) acc = detail::log_add(acc, binom_log_pmf(i, trials, prob));
        return {std::min(acc, 0.0)};
    }

    const double n = static_cast<double>(trials), k = static_cast<double>(x);
    if (prob < (k + 1.0) / (n + 3.0)) {
        const double cf = detail::beta_continued_fraction(k, n - k + 1.0, prob);
        return {std::min(0.0, binom_log_pmf(x, trials, prob) + std::log1p(-prob) + std::log(cf))};
    }
    const double cf = detail::beta_continued_fraction(n - k + 1.0, k, 1.0 - prob);
    const double log_cdf = binom_log_pmf(x - 1, trials, prob) + std::log(prob) + std::log(cf);
    return {detail::log1m_exp(std::min(log_cdf, 0.0))};
}

// ln P(X >= t) for X ~ chi-square with `df` degrees of freedom.
inline LogProb chi2_log_sf(double t, long long df) {
    if (df < 1) throw InvalidArgument("chi-square needs df >= 1");
    if (!(t >= 0.0)) throw InvalidArgument("chi-square statistic must be non-negative");
    if (t == 0.0) return {0.0};
    if (std::isinf(t)) return {detail::kNegInf};
    const double a = 0.5 * static_cast<double>(df), x = 0.5 * t;
    if (x < a + 1.0) return {detail::log1m_exp(std::min(detail::log_gamma_p_series(a, x), 0.0))};
    return {std::min(0.0, detail::log_gamma_q_fraction(a, x))};
}

// Binary entropy in bits, H(0) = H(1) = 0.
inline double entropy(double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("entropy argument outside [0,1]");
    if (q == 0.0 || q == 1.0) return 0.0;
    return -(q * std::log2(q) + (1.0 - q) * std::log2(1.0 - q));
}

enum class Branch { low, high };

// q with H(q) = h; the low branch lies in [0, 1/2], the high branch mirrors it.
inline double entropy_inverse(double h, Branch branch) {
    if (!(h >= 0.0 && h <= 1.0)) throw InvalidArgument("entropy target outside [0,1]");
    double lo = 0.0, hi = 0.5;
    if (h >= 1.0) {
        lo = 0.5;
    } else if (h > 0.0) {
        for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
            const double mid = 0.5 * (lo + hi);
            (entropy(mid) < h ? lo : hi) = mid;
        }
    } else {
        hi = 0.0;
    }
    const double q = 0.5 * (lo + hi);
    return branch == Branch::low ? q : 1.0 - q;
}

}  // namespace rbc::stats
