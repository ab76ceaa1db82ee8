#pragma once

// Flat key = value run configuration. Lines starting with '#' are comments;
// later assignments override earlier ones. Keys are documented in the README.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbc/attacks.hpp"
#include "rbc/bridge.hpp"
#include "rbc/converter.hpp"
#include "rbc/detector.hpp"
#include "rbc/ecc.hpp"
#include "rbc/errors.hpp"
#include "rbc/models.hpp"
#include "rbc/watermark.hpp"

namespace rbc {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!piece.empty()) out.push_back(std::move(piece));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw InvalidArgument("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

}  // namespace detail

class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in) {
        KeyValueFile f;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto body = detail::trim(line);
            if (body.empty() || body[0] == '#') continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
            const auto key = detail::trim(std::string_view(body).substr(0, eq));
            if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
            f.values_[key] = detail::trim(std::string_view(body).substr(eq + 1));
        }
        return f;
    }

    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
        return parse(in);
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string str(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    template <class T>
    T num(const std::string& key, T fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::parse_number<T>(key, it->second);
    }

private:
    std::map<std::string, std::string> values_;
};

struct ModelSpec {
    std::string kind = "markov";  // markov | uniform | bridge-stdio | bridge-tcp
    MarkovTokenModel::Params markov{};
    std::size_t vocab_size = 64;
    std::string command;
    std::string host = "127.0.0.1";
    int port = 0;
};

struct CodeSpec {
    std::string kind = "ldpc";  // ldpc | one-to-one
    LdpcParams ldpc{};
    std::size_t k = 4;  // one-to-one only
    std::uint64_t seed = 0;
};

struct RunConfig {
    ModelSpec model;
    CodeSpec code;
    std::uint64_t converter_seed = 0;
    std::optional<BitString> key;  // explicit key bits; otherwise derived from key_seed
    std::uint64_t key_seed = 0;
    std::size_t length = 150;
    std::vector<std::size_t> lengths{10, 25, 50, 75, 100, 125, 150};
    std::size_t replications = 10;
    double alpha = 0.01;
    std::vector<TestKind> tests{TestKind::bc, TestKind::glrt, TestKind::pglrt};
    std::vector<AttackSpec> attacks;
    Stride stride = Stride::overlapping;
    std::string prompts;
    std::string out = "out";
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (replications < 1) throw InvalidArgument("replications must be at least 1");
        if (lengths.empty()) throw InvalidArgument("lengths must be non-empty");
        for (auto l : lengths)
            if (l == 0) throw InvalidArgument("lengths must be positive");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
        if (tests.empty()) throw InvalidArgument("tests must be non-empty");
    }

    static RunConfig from(const KeyValueFile& f) {
        RunConfig c;
        c.model.kind = f.str("model", c.model.kind);
        c.model.vocab_size = f.num<std::size_t>("model.vocab_size", c.model.vocab_size);
        c.model.markov.vocab_size = c.model.vocab_size;
        c.model.markov.order = f.num<std::size_t>("model.order", c.model.markov.order);
        c.model.markov.concentration = f.num<double>("model.concentration", c.model.markov.concentration);
        c.model.markov.seed = f.num<std::uint64_t>("model.seed", c.model.markov.seed);
        c.model.command = f.str("model.command", "");
        c.model.host = f.str("model.host", c.model.host);
        c.model.port = f.num<int>("model.port", 0);
        if (c.model.kind != "markov" && c.model.kind != "uniform" && c.model.kind != "bridge-stdio" &&
            c.model.kind != "bridge-tcp")
            throw InvalidArgument("unknown model '" + c.model.kind + "'");

        c.code.kind = f.str("code", c.code.kind);
        c.code.seed = f.num<std::uint64_t>("code.seed", 0);
        c.code.ldpc.n = f.num<std::size_t>("code.n", c.code.ldpc.n);
        c.code.ldpc.d_v = f.num<std::size_t>("code.d_v", c.code.ldpc.d_v);
        c.code.ldpc.d_c = f.num<std::size_t>("code.d_c", c.code.ldpc.d_c);
        c.code.ldpc.max_iterations = f.num<std::size_t>("code.max_iter", c.code.ldpc.max_iterations);
        c.code.ldpc.crossover = f.num<double>("code.crossover", c.code.ldpc.crossover);
        c.code.ldpc.seed = c.code.seed;
        c.code.k = f.num<std::size_t>("code.k", c.code.k);
        if (c.code.kind != "ldpc" && c.code.kind != "one-to-one")
            throw InvalidArgument("unknown code '" + c.code.kind + "'");

        c.converter_seed = f.num<std::uint64_t>("converter.seed", 0);
        if (f.has("key")) c.key = BitString::parse(f.str("key", ""));
        c.key_seed = f.num<std::uint64_t>("key.seed", 0);
        c.length = f.num<std::size_t>("length", c.length);
        if (f.has("lengths")) {
            c.lengths.clear();
            for (const auto& s : detail::split(f.str("lengths", ""), ','))
                c.lengths.push_back(detail::parse_number<std::size_t>("lengths", s));
        }
        c.replications = f.num<std::size_t>("replications", c.replications);
        c.alpha = f.num<double>("alpha", c.alpha);
        if (f.has("tests")) {
            c.tests.clear();
            for (const auto& s : detail::split(f.str("tests", ""), ',')) c.tests.push_back(parse_test(s));
        }
        if (f.has("attacks")) c.attacks = parse_attacks(f.str("attacks", ""));
        const auto stride = f.str("stride", "overlapping");
        if (stride == "overlapping") c.stride = Stride::overlapping;
        else if (stride == "disjoint") c.stride = Stride::disjoint;
        else throw InvalidArgument("stride must be overlapping or disjoint");
        c.prompts = f.str("prompts", "");
        c.out = f.str("out", c.out);
        c.seed = f.num<std::uint64_t>("seed", 0);
        c.threads = f.num<std::size_t>("threads", 0);
        c.validate();
        return c;
    }

    // "delete:0.2,swap:0.1,external:<command>". The external entry must come
    // last since its command may itself contain commas.
    static std::vector<AttackSpec> parse_attacks(const std::string& text) {
        std::vector<AttackSpec> out;
        std::string_view rest = text;
        while (!detail::trim(rest).empty()) {
            const auto item_end = rest.find(',');
            const auto colon = rest.find(':');
            if (colon == std::string_view::npos) throw InvalidArgument("attack needs kind:argument");
            const auto kind = detail::trim(rest.substr(0, colon));
            AttackSpec a;
            if (kind == "external") {
                a.kind = AttackKind::external;
                a.external_command = detail::trim(rest.substr(colon + 1));
                if (a.external_command.empty()) throw InvalidArgument("external attack needs a command");
                out.push_back(std::move(a));
                break;
            }
            if (kind == "delete") a.kind = AttackKind::delete_tokens;
            else if (kind == "swap") a.kind = AttackKind::swap_tokens;
            else throw InvalidArgument("unknown attack '" + kind + "'");
            const auto arg = detail::trim(rest.substr(colon + 1, item_end == std::string_view::npos
                                                                    ? std::string_view::npos
                                                                    : item_end - colon - 1));
            a.rate = detail::parse_number<double>("attacks", arg);
            if (!(a.rate >= 0.0 && a.rate <= 1.0)) throw InvalidArgument("attack rate outside [0,1]");
            out.push_back(a);
            if (item_end == std::string_view::npos) break;
            rest = rest.substr(item_end + 1);
        }
        return out;
    }
};

inline Code build_code(const CodeSpec& spec) {
    if (spec.kind == "ldpc") return LdpcCode::make(spec.ldpc);
    return OneToOneCode::make(spec.k, spec.seed);
}

inline std::unique_ptr<LanguageModel> build_model(const ModelSpec& spec) {
    if (spec.kind == "markov") return std::make_unique<MarkovTokenModel>(spec.markov);
    if (spec.kind == "uniform") return std::make_unique<UniformModel>(spec.vocab_size);
    if (spec.kind == "bridge-stdio") return std::make_unique<BridgeModel>(BridgeEndpoint::stdio(spec.command));
    if (spec.kind == "bridge-tcp") return std::make_unique<BridgeModel>(BridgeEndpoint::tcp(spec.host, spec.port));
    throw InvalidArgument("unknown model '" + spec.kind + "'");
}

// The vocabulary size comes from the model, so a bridge is contacted once.
inline WatermarkConfig build_watermark(const RunConfig& rc, std::size_t vocab_size, std::size_t length) {
    Code code = build_code(rc.code);
    BitString key = rc.key ? *rc.key : make_key(code.k(), rc.key_seed);
    return WatermarkConfig(BinaryConverter::random(vocab_size, rc.converter_seed), std::move(code),
                           std::move(key), length);
}

// Prompts file: one JSON document per line with a "tokens" array, or one line
// of whitespace-separated token ids. No file means a single empty prompt.
inline std::vector<std::vector<TokenId>> load_prompts(const std::string& path) {
    if (path.empty()) return {{}};
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open prompts file '" + path + "'");
    std::vector<std::vector<TokenId>> prompts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty() || body[0] == '#') continue;
        if (body[0] == '{') {
            try {
                prompts.push_back(TokenDocument::from_json(nlohmann::json::parse(body)).tokens);
            } catch (const std::exception& e) {
                throw InvalidArgument("prompts line " + std::to_string(lineno) + ": " + e.what());
            }
            continue;
        }
        std::istringstream ss(body);
        std::vector<TokenId> p;
        std::string tok;
        while (ss >> tok) p.push_back(detail::parse_number<TokenId>("prompts", tok));
        prompts.push_back(std::move(p));
    }
    if (prompts.empty()) throw InvalidArgument("prompts file '" + path + "' has no prompts");
    return prompts;
}

}  // namespace rbc
