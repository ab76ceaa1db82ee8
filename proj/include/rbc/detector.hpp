#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/bits.hpp"
#include "rbc/ecc.hpp"
#include "rbc/errors.hpp"
#include "rbc/stats.hpp"
#include "rbc/watermark.hpp"

namespace rbc {

enum class TestKind { bc, glrt, pglrt };

inline std::string_view to_string(TestKind t) {
    switch (t) {
        case TestKind::bc: return "BC";
        case TestKind::glrt: return "GLRT";
        case TestKind::pglrt: return "PGLRT";
    }
    return "?";
}

inline TestKind parse_test(std::string_view s) {
    std::string lower(s);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "bc") return TestKind::bc;
    if (lower == "glrt") return TestKind::glrt;
    if (lower == "pglrt") return TestKind::pglrt;
    throw InvalidArgument("unknown test '" + std::string(s) + "' (expected bc, glrt or pglrt)");
}

// Overlapping windows (stride 1) follow the detection algorithm; disjoint
// windows (stride w_in + w_out) give independent counts under the null.
enum class Stride { overlapping, disjoint };

namespace detail {

inline void check_counts(std::span<const int> z, std::size_t k) {
    if (z.empty()) throw InvalidArgument("no match counts to test");
    if (k == 0) throw InvalidArgument("k must be positive");
    for (int v : z)
        if (v < 0 || static_cast<std::size_t>(v) > k)
            throw InvalidArgument("match count " + std::to_string(v) + " outside [0, k]");
}

// z ln(z / (k q0)) + (k - z) ln((k - z) / (k (1 - q0))) with 0 ln 0 = 0:
// half the likelihood-ratio statistic of Binomial(k, z/k) against Binomial(k, q0).
inline double xlogx_ratio(double z, double k, double q) {
    double s = 0.0;
    if (z > 0) s += z * std::log(z / (k * q));
    if (k - z > 0) s += (k - z) * std::log((k - z) / (k * (1.0 - q)));
    return s;
}

}  // namespace detail

struct TestResult {
    stats::LogProb log_p;
    double statistic = 0.0;  // sum of Z for BC, T for the likelihood-ratio tests
};

// P(X >= sum Z) for X ~ Binomial(m k, 1/2). The tail includes the observed
// value, so p > 0 even when every bit matches.
inline TestResult bc_test(std::span<const int> z, std::size_t k) {
    detail::check_counts(z, k);
    const long long sum = std::accumulate(z.begin(), z.end(), 0LL);
    const long long trials = static_cast<long long>(z.size() * k);
    return {stats::binom_log_sf(sum, trials, 0.5), static_cast<double>(sum)};
}

// Per-window MLE against 1/2; T ~ chi-square with m degrees of freedom.
inline TestResult glrt_test(std::span<const int> z, std::size_t k) {
    detail::check_counts(z, k);
    const double kd = static_cast<double>(k);
    double half_t = 0.0;
    for (int v : z) half_t += detail::xlogx_ratio(v, kd, 0.5);
    const double t = std::max(0.0, 2.0 * half_t);
    return {stats::chi2_log_sf(t, static_cast<long long>(z.size())), t};
}

// Pooled MLE q = sum Z / (k m); T ~ chi-square with one degree of freedom.
inline TestResult pglrt_test(std::span<const int> z, std::size_t k) {
    detail::check_counts(z, k);
    const double kd = static_cast<double>(k);
    const double m = static_cast<double>(z.size());
    const double sum = std::accumulate(z.begin(), z.end(), 0.0);
    const double q = sum / (kd * m);
    // The binomial coefficients cancel, so only the pooled Bernoulli terms remain.
    const double t = std::max(0.0, 2.0 * detail::xlogx_ratio(q * kd * m, kd * m, 0.5));
    return {stats::chi2_log_sf(t, 1), t};
}

inline TestResult run_test(TestKind kind, std::span<const int> z, std::size_t k) {
    switch (kind) {
        case TestKind::bc: return bc_test(z, k);
        case TestKind::glrt: return glrt_test(z, k);
        case TestKind::pglrt: return pglrt_test(z, k);
    }
    throw InvalidArgument("unknown test");
}

// Window scanner. Holds a lazily filled decode table for codes with n <= 16,
// so one instance should stay on one thread.
class Detector {
public:
    explicit Detector(const WatermarkConfig& cfg) : cfg_(cfg) {
        if (cfg.n() <= 16) table_.assign(std::size_t{1} << cfg.n(), kUnset);
    }

    const WatermarkConfig& config() const noexcept { return cfg_; }

    // Minimum number of tokens for one window.
    std::size_t min_tokens() const noexcept { return cfg_.w_in + cfg_.w_out; }

    // Z_i = k - d_H(C^-1(B_i), M_i) for every window. B_i is the first n bits of
    // the w_out tokens after the message window. No language model involved.
    std::vector<int> scan(std::span<const TokenId> tokens, Stride stride = Stride::overlapping) {
        if (tokens.size() < min_tokens()) throw InsufficientLength(tokens.size(), min_tokens());
        const std::size_t windows = tokens.size() - min_tokens() + 1;
        const std::size_t step = stride == Stride::overlapping ? 1 : min_tokens();
        const std::size_t n = cfg_.n(), k = cfg_.k();
        const BitString all = cfg_.converter.convert(tokens);
        const std::size_t l = cfg_.bits_per_token();
        std::vector<int> z;
        z.reserve(windows / step + 1);
        for (std::size_t i = 0; i < windows; i += step) {
            const BitString message = all.slice(i * l, k) ^ cfg_.key;
            const BitString decoded = decode(all.slice((i + cfg_.w_in) * l, n));
            z.push_back(static_cast<int>(k - hamming_distance(decoded, message)));
        }
        return z;
    }

    BitString decode(const BitString& received) {
        if (table_.empty()) return cfg_.code.decode(received);
        const auto idx = static_cast<std::size_t>(received.to_uint(0, received.size()));
        if (table_[idx] == kUnset)
            table_[idx] = static_cast<std::uint32_t>(cfg_.code.decode(received).to_uint(0, cfg_.k()));
        return BitString::from_uint(table_[idx], cfg_.k());
    }

private:
    static constexpr std::uint32_t kUnset = 0xffffffffu;
    const WatermarkConfig& cfg_;
    std::vector<std::uint32_t> table_;
};

inline std::vector<int> scan_windows(const WatermarkConfig& cfg, std::span<const TokenId> tokens,
                                     Stride stride = Stride::overlapping) {
    Detector d(cfg);
    return d.scan(tokens, stride);
}

// Bit-level counterpart: message = bits [i, i+k) xor R, received word = the next
// n bits, for every i in [0, N - n - k].
inline std::vector<int> scan_bits(const Code& code, const BitString& key, const BitString& bits) {
    const std::size_t k = code.k(), n = code.n();
    if (key.size() != k) throw InvalidArgument("key length does not match k");
    if (bits.size() < n + k) throw InsufficientLength(bits.size(), n + k);
    std::vector<int> z;
    z.reserve(bits.size() - n - k + 1);
    for (std::size_t i = 0; i + n + k <= bits.size(); ++i) {
        const BitString message = bits.slice(i, k) ^ key;
        z.push_back(static_cast<int>(k - hamming_distance(code.decode(bits.slice(i + k, n)), message)));
    }
    return z;
}

struct DetectionReport {
    TestKind test = TestKind::bc;
    std::size_t windows = 0;
    std::size_t k = 0;
    long long sum_z = 0;
    double statistic = 0.0;
    double log10_p = 0.0;
    double p = 1.0;
    double alpha = 0.0;
    bool watermarked = false;
    std::vector<int> z_counts;

    nlohmann::json to_json(bool with_counts = false) const {
        nlohmann::json j = {{"test", std::string(to_string(test))},
                            {"m", windows},
                            {"k", k},
                            {"sum_z", sum_z},
                            {"statistic", statistic},
                            {"log10_p", log10_p},
                            {"p", p},
                            {"alpha", alpha},
                            {"decision", watermarked ? "watermarked" : "not-watermarked"}};
        if (with_counts) j["z_counts"] = z_counts;
        return j;
    }
};

inline DetectionReport make_report(std::vector<int> z, std::size_t k, double alpha, TestKind test) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
    const auto r = run_test(test, z, k);
    DetectionReport rep;
    rep.test = test;
    rep.windows = z.size();
    rep.k = k;
    rep.sum_z = std::accumulate(z.begin(), z.end(), 0LL);
    rep.statistic = r.statistic;
    rep.log10_p = r.log_p.log10();
    rep.p = r.log_p.prob();
    rep.alpha = alpha;
    rep.watermarked = r.log_p.value <= std::log(alpha);
    rep.z_counts = std::move(z);
    return rep;
}

inline DetectionReport detect(Detector& detector, std::span<const TokenId> tokens, double alpha,
                              TestKind test = TestKind::bc, Stride stride = Stride::overlapping) {
    return make_report(detector.scan(tokens, stride), detector.config().k(), alpha, test);
}

inline DetectionReport detect(const WatermarkConfig& cfg, std::span<const TokenId> tokens, double alpha,
                              TestKind test = TestKind::bc, Stride stride = Stride::overlapping) {
    Detector d(cfg);
    return detect(d, tokens, alpha, test, stride);
}

// Per-token log10 p-values for localizing watermarked spans. Window i covers
// tokens [i, i + w_in + w_out). For each token the BC test runs over `span`
// consecutive windows centred on the windows covering it, clamped to the
// document. Tokens get 0 when the document has no window at all.
inline std::vector<double> rolling_scores(Detector& detector, std::span<const TokenId> tokens,
                                          std::size_t span) {
    if (span < 1) throw InvalidArgument("rolling span must be at least one window");
    std::vector<double> scores(tokens.size(), 0.0);
    const std::size_t width = detector.min_tokens();
    if (tokens.size() < width) return scores;
    const auto z = detector.scan(tokens);
    const std::size_t m = z.size(), k = detector.config().k();
    std::vector<long long> prefix(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + z[i];
    const std::size_t take = std::min(span, m);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::size_t lo = t + 1 >= width ? t + 1 - width : 0;
        const std::size_t hi = std::min(t, m - 1);  // inclusive
        // Twice the centre of the covering windows, to stay in integers.
        const std::size_t centre2 = lo + hi;
        std::size_t first = centre2 + 1 >= take ? (centre2 + 1 - take) / 2 : 0;
        first = std::min(first, m - take);
        const long long sum = prefix[first + take] - prefix[first];
        scores[t] = stats::binom_log_sf(sum, static_cast<long long>(take * k), 0.5).log10();
    }
    return scores;
}

inline std::vector<double> rolling_scores(const WatermarkConfig& cfg, std::span<const TokenId> tokens,
                                          std::size_t span) {
    Detector d(cfg);
    return rolling_scores(d, tokens, span);
}

}  // namespace rbc
