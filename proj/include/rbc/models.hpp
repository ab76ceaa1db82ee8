#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rbc/bits.hpp"
#include "rbc/converter.hpp"
#include "rbc/errors.hpp"
#include "rbc/random.hpp"
#include "rbc/stats.hpp"

namespace rbc {

// Token-level language model: p(. | context).
class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual std::size_t vocab_size() const = 0;
    virtual std::string name() const = 0;
    virtual TokenDistribution next(std::span<const TokenId> context) = 0;
    // Whether next() may be used to score text (perplexity).
    virtual bool scorable() const { return true; }
};

// Bit-level language model: q = P(next bit = 1 | bits so far).
class BinaryModel {
public:
    virtual ~BinaryModel() = default;
    virtual double next_q(const BitString& history) const = 0;
};

// Inverse-CDF draw from `dist` at u in (0,1).
inline TokenId sample_token(const TokenDistribution& dist, double u) {
    double acc = 0.0;
    TokenId last_positive = 0;
    for (std::size_t t = 0; t < dist.size(); ++t) {
        if (dist[static_cast<TokenId>(t)] <= 0.0) continue;
        acc += dist[static_cast<TokenId>(t)];
        last_positive = static_cast<TokenId>(t);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

class UniformModel final : public LanguageModel {
public:
    explicit UniformModel(std::size_t vocab_size) : dist_(TokenDistribution::uniform(vocab_size)) {}
    std::size_t vocab_size() const override { return dist_.size(); }
    std::string name() const override { return "uniform-" + std::to_string(dist_.size()); }
    TokenDistribution next(std::span<const TokenId>) override { return dist_; }

private:
    TokenDistribution dist_;
};

// Fixed-order Markov chain over tokens with Dirichlet-drawn rows. Contexts
// shorter than the order are left-padded with a start symbol that is not a
// token (index vocab_size), so the dense table has (|V| + 1)^order rows.
class MarkovTokenModel final : public LanguageModel {
public:
    struct Params {
        std::size_t vocab_size = 64;
        std::size_t order = 2;
        double concentration = 0.5;
        std::uint64_t seed = 0;
    };

    explicit MarkovTokenModel(const Params& p) : params_(p) {
        if (p.vocab_size < 2) throw InvalidArgument("markov model needs at least two tokens");
        if (!(p.concentration > 0.0)) throw InvalidArgument("dirichlet concentration must be positive");
        std::size_t rows = 1;
        for (std::size_t i = 0; i < p.order; ++i) {
            rows *= p.vocab_size + 1;
            if (rows * p.vocab_size > 50'000'000) throw InvalidArgument("markov table too large");
        }
        std::mt19937_64 engine(p.seed);
        std::gamma_distribution<double> gamma(p.concentration, 1.0);
        rows_.reserve(rows);
        std::vector<double> row(p.vocab_size);
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (double& x : row) sum += (x = gamma(engine));
            if (!(sum > 0.0)) {
                // Every draw underflowed: the Dirichlet limit is a vertex.
                std::fill(row.begin(), row.end(), 0.0);
                row[engine() % p.vocab_size] = sum = 1.0;
            }
            std::vector<double> normalized(row);
            for (double& x : normalized) x /= sum;
            rows_.emplace_back(std::move(normalized));
        }
    }

    std::size_t vocab_size() const override { return params_.vocab_size; }
    std::size_t order() const noexcept { return params_.order; }
    const Params& params() const noexcept { return params_; }
    std::string name() const override {
        return "markov-v" + std::to_string(params_.vocab_size) + "-o" + std::to_string(params_.order) +
               "-a" + std::to_string(params_.concentration) + "-s" + std::to_string(params_.seed);
    }

    const TokenDistribution& dist(std::span<const TokenId> context) const {
        return rows_[row_index(context)];
    }
    TokenDistribution next(std::span<const TokenId> context) override { return dist(context); }

    double log_prob(std::span<const TokenId> context, TokenId token) const {
        return std::log(dist(context)[token]);
    }

private:
    std::size_t row_index(std::span<const TokenId> context) const {
        const std::size_t base = params_.vocab_size + 1;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < params_.order; ++i) {
            std::size_t symbol = params_.vocab_size;  // start symbol
            if (context.size() + i >= params_.order) {
                const TokenId t = context[context.size() + i - params_.order];
                if (t >= params_.vocab_size) throw InvalidArgument("context token outside vocabulary");
                symbol = t;
            }
            idx = idx * base + symbol;
        }
        return idx;
    }

    Params params_;
    std::vector<TokenDistribution> rows_;
};

// Binary model whose every per-bit probability has entropy exactly h.
// fixed_low always emits the low branch; random_branch picks low or high per
// step from a seeded counter stream, so q at step i is a pure function of i.
class ConstEntropyBinaryModel final : public BinaryModel {
public:
    enum class Policy { fixed_low, random_branch };

    ConstEntropyBinaryModel(double h, Policy policy, std::uint64_t seed = 0)
        : h_(h), policy_(policy), seed_(seed), q_low_(stats::entropy_inverse(h, stats::Branch::low)) {}

    double entropy() const noexcept { return h_; }
    double q_low() const noexcept { return q_low_; }

    double q_at(std::size_t step) const noexcept {
        if (policy_ == Policy::fixed_low) return q_low_;
        return (derive_seed(seed_, step) >> 63) ? 1.0 - q_low_ : q_low_;
    }

    double next_q(const BitString& history) const override { return q_at(history.size()); }

private:
    double h_;
    Policy policy_;
    std::uint64_t seed_;
    double q_low_;
};

// Exponential of the mean negative log-likelihood per token. The model is
// conditioned on the prompt and on every earlier token of the document.
inline double compute_perplexity(LanguageModel& model, std::span<const TokenId> tokens,
                                 std::span<const TokenId> prompt = {}) {
    if (!model.scorable()) throw UnsupportedOperation("model '" + model.name() + "' cannot score text");
    if (tokens.empty()) throw InvalidArgument("perplexity of an empty document");
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    double nll = 0.0;
    for (TokenId t : tokens) {
        const auto dist = model.next(context);
        if (t >= dist.size()) throw InvalidArgument("token outside vocabulary");
        const double p = dist[t];
        if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
        nll -= std::log(p);
        context.push_back(t);
    }
    return std::exp(nll / static_cast<double>(tokens.size()));
}

}  // namespace rbc
