#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/bits.hpp"
#include "rbc/errors.hpp"
#include "rbc/gf2.hpp"
#include "rbc/random.hpp"

namespace rbc {

enum class CodeKind { one_to_one, ldpc };

inline std::string_view to_string(CodeKind kind) {
    return kind == CodeKind::ldpc ? "ldpc" : "one-to-one";
}

// C(m) = m xor mask. No correction capability; decoding applies the same mask.
class OneToOneCode {
public:
    OneToOneCode(BitString mask, std::uint64_t seed = 0) : mask_(std::move(mask)), seed_(seed) {
        if (mask_.empty()) throw InvalidArgument("one-to-one code needs k >= 1");
    }

    // Mask entries are i.i.d. fair bits drawn from `seed`.
    static OneToOneCode make(std::size_t k, std::uint64_t seed) {
        if (k < 1) throw InvalidArgument("one-to-one code needs k >= 1");
        UniformStream rng(seed, 0x6d61736bULL);
        return OneToOneCode(rng.next_bits(k), seed);
    }

    std::size_t n() const noexcept { return mask_.size(); }
    std::size_t k() const noexcept { return mask_.size(); }
    std::size_t t() const noexcept { return 0; }
    const BitString& mask() const noexcept { return mask_; }
    std::uint64_t seed() const noexcept { return seed_; }

    BitString encode(const BitString& m) const {
        if (m.size() != k()) throw InvalidArgument("message length does not match k");
        return m ^ mask_;
    }
    BitString decode(const BitString& b) const {
        if (b.size() != n()) throw InvalidArgument("received word length does not match n");
        return b ^ mask_;
    }

private:
    BitString mask_;
    std::uint64_t seed_;
};

struct LdpcParams {
    std::size_t n = 12;
    std::size_t d_v = 3;
    std::size_t d_c = 4;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 50;
    double crossover = 0.35;
};

// (d_v, d_c)-regular LDPC code with a sum-product decoder.
//
// The constructed parity-check matrix is column-permuted so that the
// information set occupies positions [0, k): the generator is [I_k | A] and the
// message bits are the first k bits of every codeword. Column permutation keeps
// the row and column weights, so the permuted matrix is still regular.
class LdpcCode {
public:
    static LdpcCode make(const LdpcParams& params) {
        validate(params);
        return LdpcCode(params);
    }

    std::size_t n() const noexcept { return params_.n; }
    std::size_t k() const noexcept { return k_; }
    std::size_t t() const noexcept { return 0; }
    std::size_t checks() const noexcept { return parity_.rows(); }
    const LdpcParams& params() const noexcept { return params_; }

    // As constructed, before the column permutation.
    const gf2::Matrix& constructed_parity() const noexcept { return constructed_; }
    // Parity checks in codeword layout.
    const gf2::Matrix& parity() const noexcept { return parity_; }
    const gf2::Matrix& generator() const noexcept { return generator_; }
    // Codeword position i holds column source_of[i] of the constructed matrix.
    const std::vector<std::size_t>& column_permutation() const noexcept { return source_of_; }

    BitString encode(const BitString& m) const {
        if (m.size() != k_) throw InvalidArgument("message length does not match k");
        return gf2::row_times(m, generator_);
    }

    bool is_codeword(const BitString& c) const {
        if (c.size() != n()) return false;
        for (std::size_t r = 0; r < check_vars_.size(); ++r) {
            Bit acc = 0;
            for (std::size_t v : check_vars_[r]) acc ^= c[v];
            if (acc) return false;
        }
        return true;
    }

    struct DecodeResult {
        BitString word;          // hard decision, length n
        bool converged = false;  // word satisfies every parity check
        std::size_t iterations = 0;
    };

    // Sum-product belief propagation over the Tanner graph. Channel LLRs come from
    // a binary symmetric channel with the configured crossover probability.
    DecodeResult decode_word(const BitString& received) const {
        if (received.size() != n()) throw InvalidArgument("received word length does not match n");
        DecodeResult result{received, is_codeword(received), 0};
        if (result.converged) return result;

        const double p = params_.crossover;
        const double magnitude = std::log((1.0 - p) / p);
        std::vector<double> channel(n());
        for (std::size_t v = 0; v < n(); ++v) channel[v] = received[v] ? -magnitude : magnitude;

        const std::size_t edges = edge_var_.size();
        std::vector<double> to_check(edges), to_var(edges, 0.0), posterior(n());
        for (std::size_t e = 0; e < edges; ++e) to_check[e] = channel[edge_var_[e]];

        for (std::size_t it = 1; it <= params_.max_iterations; ++it) {
            for (std::size_t r = 0; r < check_edges_.size(); ++r) {
                const auto& es = check_edges_[r];
                for (std::size_t a = 0; a < es.size(); ++a) {
                    double prod = 1.0;
                    for (std::size_t b = 0; b < es.size(); ++b)
                        if (b != a) prod *= std::tanh(0.5 * to_check[es[b]]);
                    prod = std::clamp(prod, -kTanhLimit, kTanhLimit);
                    to_var[es[a]] = 2.0 * std::atanh(prod);
                }
            }
            for (std::size_t v = 0; v < n(); ++v) {
                double total = channel[v];
                for (std::size_t e : var_edges_[v]) total += to_var[e];
                posterior[v] = total;
                for (std::size_t e : var_edges_[v]) to_check[e] = total - to_var[e];
                result.word[v] = posterior[v] < 0.0 ? 1 : 0;
            }
            result.iterations = it;
            if (is_codeword(result.word)) {
                result.converged = true;
                break;
            }
        }
        return result;
    }

    // Message bits of the decoded word; total on length-n input.
    BitString decode(const BitString& received) const {
        return decode_word(received).word.slice(0, k_);
    }

private:
    static constexpr double kTanhLimit = 1.0 - 1e-15;

    static void validate(const LdpcParams& p) {
        if (p.n < 2) throw InvalidArgument("ldpc code needs n >= 2");
        if (p.d_v < 1 || p.d_c < 2) throw InvalidArgument("ldpc degrees must be positive");
        if (p.d_v >= p.d_c) throw InvalidArgument("ldpc code needs d_v < d_c");
        if ((p.n * p.d_v) % p.d_c != 0) throw InvalidArgument("n * d_v must be divisible by d_c");
        if (p.d_c > p.n) throw InvalidArgument("check degree exceeds n");
        if (!(p.crossover > 0.0 && p.crossover < 0.5))
            throw InvalidArgument("decoder crossover must lie in (0, 1/2)");
        if (p.max_iterations < 1) throw InvalidArgument("decoder needs at least one iteration");
    }

    explicit LdpcCode(const LdpcParams& params) : params_(params) {
        constructed_ = construct(params);
        const auto echelon = gf2::row_reduce(constructed_);
        const std::size_t rank = echelon.pivots.size();
        if (rank >= params.n) throw ConstructionFailed("parity-check matrix has full column rank");
        k_ = params.n - rank;

        // Free (non-pivot) columns carry the message and go first.
        std::vector<bool> is_pivot(params.n, false);
        for (std::size_t c : echelon.pivots) is_pivot[c] = true;
        for (std::size_t c = 0; c < params.n; ++c)
            if (!is_pivot[c]) source_of_.push_back(c);
        for (std::size_t c : echelon.pivots) source_of_.push_back(c);
        parity_ = constructed_.permute_columns(source_of_);

        // Pivot row r fixes bit pivots[r] = sum over free columns f of R[r][f] * bit f.
        generator_ = gf2::Matrix(k_, params.n);
        for (std::size_t i = 0; i < k_; ++i) {
            generator_.set(i, i);
            for (std::size_t r = 0; r < rank; ++r)
                if (echelon.reduced.get(r, source_of_[i])) generator_.set(i, k_ + r);
        }

        check_vars_.resize(parity_.rows());
        check_edges_.resize(parity_.rows());
        var_edges_.resize(params.n);
        for (std::size_t r = 0; r < parity_.rows(); ++r)
            for (std::size_t c = 0; c < params.n; ++c)
                if (parity_.get(r, c)) {
                    check_vars_[r].push_back(c);
                    check_edges_[r].push_back(edge_var_.size());
                    var_edges_[c].push_back(edge_var_.size());
                    edge_var_.push_back(c);
                }
    }

    static bool has_duplicate_columns(const gf2::Matrix& h) {
        for (std::size_t a = 0; a < h.cols(); ++a)
            for (std::size_t b = a + 1; b < h.cols(); ++b) {
                bool same = true;
                for (std::size_t r = 0; r < h.rows() && same; ++r) same = h.get(r, a) == h.get(r, b);
                if (same) return true;
            }
        return false;
    }

    // Gallager ensemble when d_c divides n: d_v bands of n/d_c rows, band 0 holds
    // consecutive column groups and every other band is a random column
    // permutation of it. Otherwise sockets are paired at random and pairings with
    // a repeated (variable, check) edge are rejected. Attempts that give two
    // identical columns are redrawn while a fresh attempt remains.
    static gf2::Matrix construct(const LdpcParams& p) {
        constexpr std::size_t kAttempts = 256;
        gf2::Matrix first;
        for (std::size_t attempt = 0; attempt < kAttempts; ++attempt) {
            UniformStream rng(p.seed, attempt);
            auto h = p.n % p.d_c == 0 ? gallager(p, rng) : socket_pairing(p, rng);
            if (h.rows() == 0) continue;
            if (!has_duplicate_columns(h)) return h;
            if (first.rows() == 0) first = std::move(h);
        }
        if (first.rows() == 0) throw ConstructionFailed("no simple regular graph found for this seed");
        return first;
    }

    static std::vector<std::size_t> shuffled(std::size_t count, UniformStream& rng) {
        std::vector<std::size_t> v(count);
        std::iota(v.begin(), v.end(), std::size_t{0});
        for (std::size_t i = count; i > 1; --i) std::swap(v[i - 1], v[rng.next_below(i)]);
        return v;
    }

    static gf2::Matrix gallager(const LdpcParams& p, UniformStream& rng) {
        const std::size_t per_band = p.n / p.d_c;
        gf2::Matrix h(per_band * p.d_v, p.n);
        for (std::size_t band = 0; band < p.d_v; ++band) {
            std::vector<std::size_t> perm(p.n);
            if (band == 0)
                std::iota(perm.begin(), perm.end(), std::size_t{0});
            else
                perm = shuffled(p.n, rng);
            for (std::size_t c = 0; c < p.n; ++c) h.set(band * per_band + c / p.d_c, perm[c]);
        }
        return h;
    }

    // Empty matrix on a repeated edge.
    static gf2::Matrix socket_pairing(const LdpcParams& p, UniformStream& rng) {
        const std::size_t m = p.n * p.d_v / p.d_c;
        const auto perm = shuffled(p.n * p.d_v, rng);
        gf2::Matrix h(m, p.n);
        for (std::size_t s = 0; s < perm.size(); ++s) {
            const std::size_t var = s / p.d_v;
            const std::size_t check = perm[s] / p.d_c;
            if (h.get(check, var)) return {};
            h.set(check, var);
        }
        return h;
    }

    LdpcParams params_;
    std::size_t k_ = 0;
    gf2::Matrix constructed_, parity_, generator_;
    std::vector<std::size_t> source_of_;
    std::vector<std::vector<std::size_t>> check_vars_, check_edges_, var_edges_;
    std::vector<std::size_t> edge_var_;
};

// Either code kind behind one value type.
class Code {
public:
    Code(OneToOneCode c) : impl_(std::move(c)) {}
    Code(LdpcCode c) : impl_(std::move(c)) {}

    CodeKind kind() const noexcept {
        return std::holds_alternative<LdpcCode>(impl_) ? CodeKind::ldpc : CodeKind::one_to_one;
    }
    std::size_t n() const {
        return std::visit([](const auto& c) { return c.n(); }, impl_);
    }
    std::size_t k() const {
        return std::visit([](const auto& c) { return c.k(); }, impl_);
    }
    std::size_t t() const {
        return std::visit([](const auto& c) { return c.t(); }, impl_);
    }
    BitString encode(const BitString& m) const {
        return std::visit([&](const auto& c) { return c.encode(m); }, impl_);
    }
    BitString decode(const BitString& b) const {
        return std::visit([&](const auto& c) { return c.decode(b); }, impl_);
    }

    const LdpcCode* ldpc() const noexcept { return std::get_if<LdpcCode>(&impl_); }
    const OneToOneCode* one_to_one() const noexcept { return std::get_if<OneToOneCode>(&impl_); }

    // Matrices are re-derived on load; only construction inputs are stored.
    nlohmann::json to_json() const {
        if (const auto* c = ldpc()) {
            const auto& p = c->params();
            return {{"kind", "ldpc"},     {"n", p.n},         {"d_v", p.d_v},
                    {"d_c", p.d_c},       {"seed", p.seed},   {"crossover", p.crossover},
                    {"max_iter", p.max_iterations}, {"k", c->k()}};
        }
        const auto* c = one_to_one();
        return {{"kind", "one-to-one"}, {"n", c->n()}, {"k", c->k()}, {"seed", c->seed()},
                {"mask", c->mask().str()}};
    }

    static Code from_json(const nlohmann::json& j) {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "ldpc") {
            LdpcParams p;
            p.n = j.at("n").get<std::size_t>();
            p.d_v = j.at("d_v").get<std::size_t>();
            p.d_c = j.at("d_c").get<std::size_t>();
            p.seed = j.at("seed").get<std::uint64_t>();
            p.crossover = j.value("crossover", 0.35);
            p.max_iterations = j.value("max_iter", std::size_t{50});
            auto code = LdpcCode::make(p);
            if (j.contains("k") && j.at("k").get<std::size_t>() != code.k())
                throw InvalidArgument("stored k does not match the re-derived code");
            return code;
        }
        if (kind == "one-to-one") {
            if (j.contains("mask")) return OneToOneCode(BitString::parse(j.at("mask").get<std::string>()),
                                                        j.value("seed", std::uint64_t{0}));
            return OneToOneCode::make(j.at("k").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
        }
        throw InvalidArgument("unknown code kind '" + kind + "'");
    }

private:
    std::variant<OneToOneCode, LdpcCode> impl_;
};

}  // namespace rbc
