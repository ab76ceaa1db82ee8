#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/bits.hpp"
#include "rbc/channel.hpp"
#include "rbc/converter.hpp"
#include "rbc/ecc.hpp"
#include "rbc/errors.hpp"
#include "rbc/models.hpp"
#include "rbc/random.hpp"

namespace rbc {

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Everything generation and detection share: converter, code, secret key and
// window widths. w_in = ceil(k / l) tokens feed each message; each block spans
// w_out = ceil(n / l) tokens.
struct WatermarkConfig {
    BinaryConverter converter;
    Code code;
    BitString key;
    std::size_t w_in = 1;
    std::size_t w_out = 1;
    std::size_t length = 0;

    WatermarkConfig(BinaryConverter conv, Code c, BitString r, std::size_t n_tokens)
        : converter(std::move(conv)), code(std::move(c)), key(std::move(r)), length(n_tokens) {
        const std::size_t l = converter.bits_per_token();
        if (key.size() != code.k())
            throw InvalidArgument("key has " + std::to_string(key.size()) + " bits, code needs k=" +
                                  std::to_string(code.k()));
        w_in = ceil_div(code.k(), l);
        w_out = ceil_div(code.n(), l);
    }

    std::size_t k() const { return code.k(); }
    std::size_t n() const { return code.n(); }
    std::size_t bits_per_token() const { return converter.bits_per_token(); }
    std::size_t vocab_size() const { return converter.vocab_size(); }

    // Stable 64-bit FNV-1a digest of the settings, hex encoded.
    std::string fingerprint() const {
        const std::string canon = converter.to_json().dump() + code.to_json().dump() + key.str() + "/" +
                                  std::to_string(length);
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : canon) h = (h ^ c) * 0x100000001b3ULL;
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

// Secret key R: k fair bits from the seed.
inline BitString make_key(std::size_t k, std::uint64_t seed) {
    UniformStream rng(seed, 0x6b6579ULL);
    return rng.next_bits(k);
}

struct TokenDocument {
    std::vector<TokenId> tokens;
    nlohmann::json meta = nlohmann::json::object();

    nlohmann::json to_json() const { return {{"tokens", tokens}, {"meta", meta}}; }

    static TokenDocument from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
            throw InvalidArgument("document needs a 'tokens' array");
        TokenDocument d;
        for (const auto& t : j["tokens"]) {
            if (!t.is_number_unsigned() && !(t.is_number_integer() && t.get<long long>() >= 0))
                throw InvalidArgument("token ids must be non-negative integers");
            d.tokens.push_back(t.get<TokenId>());
        }
        if (j.contains("meta")) d.meta = j["meta"];
        return d;
    }
};

inline void write_jsonl(std::ostream& out, const std::vector<TokenDocument>& docs) {
    for (const auto& d : docs) out << d.to_json().dump() << '\n';
}

inline std::vector<TokenDocument> read_jsonl(std::istream& in) {
    std::vector<TokenDocument> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            docs.push_back(TokenDocument::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

// M = first k bits of the binarized window, xor the key.
inline BitString build_message(const WatermarkConfig& cfg, std::span<const TokenId> window) {
    if (window.size() != cfg.w_in)
        throw InvalidArgument("message window needs " + std::to_string(cfg.w_in) + " tokens, got " +
                              std::to_string(window.size()));
    return cfg.converter.convert(window).slice(0, cfg.k()) ^ cfg.key;
}

namespace detail {

inline TokenDistribution query_model(LanguageModel& model, std::span<const TokenId> context,
                                     std::size_t position) {
    try {
        return model.next(context);
    } catch (const ModelError&) {
        throw;
    } catch (const std::exception& e) {
        throw ModelError(position, e.what());
    }
}

}  // namespace detail

// One block of w_out tokens. Bits 1..n go through the correlated channel with
// codeword bit Y_j; the remaining bits of the last token are sampled plainly.
// At each token boundary the model is queried again with the completed tokens
// of the block appended to the context.
inline std::vector<TokenId> gen_block(const WatermarkConfig& cfg, LanguageModel& model,
                                      std::span<const TokenId> context, const BitString& codeword,
                                      UniformStream& rng) {
    if (codeword.size() != cfg.n())
        throw InvalidArgument("codeword has " + std::to_string(codeword.size()) + " bits, expected " +
                              std::to_string(cfg.n()));
    const std::size_t l = cfg.bits_per_token();
    std::vector<TokenId> ctx(context.begin(), context.end());
    std::vector<TokenId> block;
    block.reserve(cfg.w_out);
    std::size_t j = 0;
    for (std::size_t tok = 0; tok < cfg.w_out; ++tok) {
        const auto dist = detail::query_model(model, ctx, ctx.size());
        if (dist.size() != cfg.vocab_size()) throw ModelError(ctx.size(), "distribution size mismatch");
        BitString prefix;
        for (std::size_t b = 0; b < l; ++b, ++j) {
            const double q = cfg.converter.next_bit_prob(dist, prefix);
            const double u = rng.next_unit();
            prefix.push_back(j < cfg.n() ? cbsc_sample(q, codeword[j], u) : bernoulli_sample(q, u));
        }
        const TokenId t = cfg.converter.token_for_code(static_cast<std::uint32_t>(prefix.to_uint(0, l)));
        block.push_back(t);
        ctx.push_back(t);
    }
    return block;
}

// Ancestral sampling of `count` tokens, no watermark.
inline std::vector<TokenId> plain_sample(LanguageModel& model, std::span<const TokenId> context,
                                         std::size_t count, UniformStream& rng) {
    std::vector<TokenId> ctx(context.begin(), context.end());
    std::vector<TokenId> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto dist = detail::query_model(model, ctx, ctx.size());
        const TokenId t = sample_token(dist, rng.next_unit());
        out.push_back(t);
        ctx.push_back(t);
    }
    return out;
}

// Full token-level scheme. The prompt is context only: it is not counted in
// the length and never feeds a message window. The first w_in tokens are
// sampled plainly; after that each block's message comes from the previous
// w_in generated tokens. Output is truncated to cfg.length.
inline TokenDocument watermark_generate(const WatermarkConfig& cfg, LanguageModel& model,
                                        std::span<const TokenId> prompt, std::uint64_t seed) {
    if (cfg.length < cfg.w_in)
        throw InvalidArgument("generation length " + std::to_string(cfg.length) + " shorter than w_in=" +
                              std::to_string(cfg.w_in));
    if (model.vocab_size() != cfg.vocab_size())
        throw InvalidArgument("model vocabulary does not match the converter");
    UniformStream rng(seed, 0x67656eULL);
    std::vector<TokenId> context(prompt.begin(), prompt.end());
    auto head = plain_sample(model, context, cfg.w_in, rng);
    context.insert(context.end(), head.begin(), head.end());
    std::vector<TokenId> generated = std::move(head);
    std::size_t blocks = 0;
    while (generated.size() < cfg.length) {
        const std::span<const TokenId> window(generated.data() + generated.size() - cfg.w_in, cfg.w_in);
        const BitString codeword = cfg.code.encode(build_message(cfg, window));
        const auto block = gen_block(cfg, model, context, codeword, rng);
        generated.insert(generated.end(), block.begin(), block.end());
        context.insert(context.end(), block.begin(), block.end());
        ++blocks;
    }
    generated.resize(cfg.length);
    TokenDocument doc;
    doc.tokens = std::move(generated);
    doc.meta = {{"model", model.name()},      {"seed", seed},
                {"config", cfg.fingerprint()}, {"watermarked", true},
                {"blocks", blocks},           {"prompt_tokens", prompt.size()}};
    return doc;
}

inline TokenDocument unwatermarked_generate(LanguageModel& model, std::span<const TokenId> prompt,
                                            std::size_t length, std::uint64_t seed) {
    UniformStream rng(seed, 0x706c61ULL);
    TokenDocument doc;
    doc.tokens = plain_sample(model, prompt, length, rng);
    doc.meta = {{"model", model.name()}, {"seed", seed}, {"watermarked", false},
                {"prompt_tokens", prompt.size()}};
    return doc;
}

// Output of the bit-level scheme, with the codeword each block was steered to.
struct BinaryGeneration {
    struct Block {
        std::size_t start = 0;  // index of the block's first bit
        BitString codeword;
    };
    BitString bits;
    std::vector<Block> blocks;
};

// Bit-level scheme: k plain bits, then repeatedly message = last k bits xor R,
// Y = C(message), next n bits through the correlated channel. Truncated to
// total_bits.
inline BinaryGeneration binary_generate(const BinaryModel& model, const Code& code, const BitString& key,
                                        std::size_t total_bits, UniformStream& rng) {
    const std::size_t k = code.k(), n = code.n();
    if (key.size() != k) throw InvalidArgument("key length does not match k");
    if (total_bits < k) throw InvalidArgument("need at least k bits");
    BinaryGeneration out;
    out.bits.reserve(total_bits + n);
    while (out.bits.size() < k) out.bits.push_back(bernoulli_sample(model.next_q(out.bits), rng.next_unit()));
    while (out.bits.size() < total_bits) {
        const BitString message = out.bits.slice(out.bits.size() - k, k) ^ key;
        BinaryGeneration::Block block{out.bits.size(), code.encode(message)};
        for (std::size_t j = 0; j < n; ++j)
            out.bits.push_back(cbsc_sample(model.next_q(out.bits), block.codeword[j], rng.next_unit()));
        out.blocks.push_back(std::move(block));
    }
    out.bits.truncate(total_bits);
    return out;
}

}  // namespace rbc
