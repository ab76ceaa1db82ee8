#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbc/errors.hpp"
#include "rbc/process.hpp"
#include "rbc/random.hpp"
#include "rbc/watermark.hpp"

namespace rbc {

enum class AttackKind { delete_tokens, swap_tokens, external };

struct AttackSpec {
    AttackKind kind = AttackKind::delete_tokens;
    double rate = 0.0;
    std::uint64_t seed = 0;
    std::string external_command;

    std::string label() const {
        if (kind == AttackKind::external) return "external";
        std::ostringstream s;
        s << (kind == AttackKind::delete_tokens ? "delete" : "swap") << '-' << rate;
        return s.str();
    }
};

namespace detail {

inline std::size_t perturbed_count(std::size_t len, double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("attack rate outside [0,1]");
    // The epsilon keeps 0.2 * 150 at 30 despite binary rounding.
    return std::min(len, static_cast<std::size_t>(std::floor(rate * static_cast<double>(len) + 1e-9)));
}

// floor(rate * len) distinct positions, uniformly without replacement.
inline std::vector<std::size_t> choose_positions(std::size_t len, std::size_t count, UniformStream& rng) {
    std::vector<std::size_t> idx(len);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.next_below(len - i)]);
    idx.resize(count);
    return idx;
}

}  // namespace detail

inline std::vector<TokenId> attack_delete(std::span<const TokenId> tokens, double rate, std::uint64_t seed) {
    const std::size_t count = detail::perturbed_count(tokens.size(), rate);
    UniformStream rng(seed, 0x64656cULL);
    std::vector<bool> drop(tokens.size(), false);
    for (std::size_t i : detail::choose_positions(tokens.size(), count, rng)) drop[i] = true;
    std::vector<TokenId> out;
    out.reserve(tokens.size() - count);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!drop[i]) out.push_back(tokens[i]);
    return out;
}

// Replacements are uniform over the whole vocabulary and may equal the original.
inline std::vector<TokenId> attack_swap(std::span<const TokenId> tokens, double rate, std::uint64_t seed,
                                        std::size_t vocab_size) {
    if (vocab_size < 1) throw InvalidArgument("swap attack needs a vocabulary");
    const std::size_t count = detail::perturbed_count(tokens.size(), rate);
    UniformStream rng(seed, 0x737761ULL);
    std::vector<TokenId> out(tokens.begin(), tokens.end());
    for (std::size_t i : detail::choose_positions(tokens.size(), count, rng))
        out[i] = static_cast<TokenId>(rng.next_below(vocab_size));
    return out;
}

// Pipes the document as one JSONL line to `command` and reads one document back.
inline TokenDocument attack_external(const TokenDocument& doc, const std::string& command) {
    process::FilterResult result;
    try {
        result = process::run_filter(command, doc.to_json().dump() + "\n");
    } catch (const std::exception& e) {
        throw ExternalAttackFailed(std::string("could not run attack command: ") + e.what());
    }
    if (result.exit_code != 0)
        throw ExternalAttackFailed("attack command exited with status " + std::to_string(result.exit_code));
    std::istringstream in(result.output);
    std::vector<TokenDocument> docs;
    try {
        docs = read_jsonl(in);
    } catch (const std::exception& e) {
        throw ExternalAttackFailed(std::string("attack output is not a JSONL document: ") + e.what());
    }
    if (docs.size() != 1)
        throw ExternalAttackFailed("attack command returned " + std::to_string(docs.size()) +
                                   " documents, expected 1");
    return std::move(docs.front());
}

inline TokenDocument apply_attack(const AttackSpec& spec, const TokenDocument& doc, std::size_t vocab_size) {
    TokenDocument out;
    switch (spec.kind) {
        case AttackKind::delete_tokens:
            out.tokens = attack_delete(doc.tokens, spec.rate, spec.seed);
            break;
        case AttackKind::swap_tokens:
            out.tokens = attack_swap(doc.tokens, spec.rate, spec.seed, vocab_size);
            break;
        case AttackKind::external:
            out = attack_external(doc, spec.external_command);
            break;
    }
    if (spec.kind != AttackKind::external || !out.meta.is_object()) out.meta = doc.meta;
    if (!out.meta.is_object()) out.meta = nlohmann::json::object();
    out.meta["attack"] = spec.label();
    return out;
}

}  // namespace rbc
