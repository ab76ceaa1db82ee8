// rbc: command-line front end for watermark generation, detection, attacks,
// the bench grid and the theory checks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rbc/rbc.hpp"

namespace {

using rbc::RunConfig;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;  // --set key=value
};

rbc::KeyValueFile load_settings(const Globals& g) {
    rbc::KeyValueFile f = g.config_path.empty() ? rbc::KeyValueFile{} : rbc::KeyValueFile::load(g.config_path);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw rbc::InvalidArgument("--set expects key=value, got '" + kv + "'");
        f.set(rbc::detail::trim(kv.substr(0, eq)), rbc::detail::trim(kv.substr(eq + 1)));
    }
    if (g.seed) f.set("seed", std::to_string(*g.seed));
    if (!g.out.empty()) f.set("out", g.out);
    return f;
}

// Keys written by keygen override the config file.
void apply_key_file(rbc::KeyValueFile& f, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw rbc::InvalidArgument("cannot open key file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw rbc::InvalidArgument("key file is not JSON: " + std::string(e.what()));
    }
    if (!j.contains("key") || !j.contains("converter_seed"))
        throw rbc::InvalidArgument("key file needs 'key' and 'converter_seed'");
    f.set("key", j["key"].get<std::string>());
    f.set("converter.seed", std::to_string(j["converter_seed"].get<std::uint64_t>()));
    if (j.contains("vocab_size")) f.set("model.vocab_size", std::to_string(j["vocab_size"].get<std::size_t>()));
}

std::size_t vocab_for_detection(const RunConfig& rc) {
    if (rc.model.kind == "markov" || rc.model.kind == "uniform") return rc.model.vocab_size;
    return rbc::build_model(rc.model)->vocab_size();
}

// Output goes to --out when given, stdout otherwise.
void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    rbc::write_file_atomic(out_path, text);
}

std::vector<rbc::TokenDocument> read_documents(const std::string& path) {
    if (path.empty() || path == "-") return rbc::read_jsonl(std::cin);
    std::ifstream in(path);
    if (!in) throw rbc::InvalidArgument("cannot open '" + path + "'");
    return rbc::read_jsonl(in);
}

std::string jsonl(const std::vector<rbc::TokenDocument>& docs) {
    std::ostringstream s;
    rbc::write_jsonl(s, docs);
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RBC language-model watermarking toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "Run configuration (key = value lines)");
    app.add_option("--seed", g.seed, "Master seed (overrides the config)");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--set", g.overrides, "Override a config key: --set key=value")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    std::string key_file;

    auto* keygen = app.add_subcommand("keygen", "Draw a secret key and converter seed");

    auto* generate = app.add_subcommand("generate", "Generate token documents (JSONL)");
    std::size_t gen_count = 1;
    std::optional<std::size_t> gen_length;
    bool gen_plain = false;
    generate->add_option("--count", gen_count, "Documents per prompt")->check(CLI::PositiveNumber);
    generate->add_option("--length", gen_length, "Tokens per document")->check(CLI::PositiveNumber);
    generate->add_flag("--unwatermarked", gen_plain, "Plain sampling, no watermark");
    generate->add_option("--key-file", key_file, "Key file from keygen");

    auto* detect = app.add_subcommand("detect", "Detect the watermark in JSONL documents");
    std::string det_input = "-";
    std::string det_test = "bc";
    std::optional<double> det_alpha;
    bool det_counts = false;
    detect->add_option("--input", det_input, "JSONL documents ('-' for stdin)");
    detect->add_option("--test", det_test, "bc, glrt or pglrt");
    detect->add_option("--alpha", det_alpha, "Significance level");
    detect->add_flag("--counts", det_counts, "Include per-window match counts");
    detect->add_option("--key-file", key_file, "Key file from keygen");

    auto* attack = app.add_subcommand("attack", "Perturb JSONL documents");
    std::string att_input = "-";
    std::string att_kind = "delete";
    double att_rate = 0.2;
    std::string att_command;
    attack->add_option("--input", att_input, "JSONL documents ('-' for stdin)");
    attack->add_option("--kind", att_kind, "delete, swap or external")
        ->check(CLI::IsMember({"delete", "swap", "external"}));
    attack->add_option("--rate", att_rate, "Fraction of tokens perturbed")->check(CLI::Range(0.0, 1.0));
    attack->add_option("--command", att_command, "Command for the external attack");

    auto* bench = app.add_subcommand("bench", "Run the configured experiment grid");

    auto* theory = app.add_subcommand("theory", "Monte Carlo checks of the entropy bounds");
    std::string th_check = "all";
    std::vector<double> th_h{0.3, 0.6, 0.811278, 0.95};
    std::size_t th_trials = 100000;
    theory->add_option("--check", th_check, "mismatch, exact, lemma or all")
        ->check(CLI::IsMember({"mismatch", "exact", "lemma", "all"}));
    theory->add_option("--entropy", th_h, "Entropy values")->check(CLI::Range(0.0, 1.0));
    theory->add_option("--trials", th_trials, "Bits (mismatch) or blocks (exact)")->check(CLI::PositiveNumber);

    auto* rolling = app.add_subcommand("rolling", "Per-token rolling log10 p-values");
    std::string rol_input = "-";
    std::size_t rol_span = 5;
    bool rol_csv = false;
    rolling->add_option("--input", rol_input, "JSONL documents ('-' for stdin)");
    rolling->add_option("--span", rol_span, "Windows per score")->check(CLI::PositiveNumber);
    rolling->add_flag("--csv", rol_csv, "CSV output (doc,position,token,log10_p)");
    rolling->add_option("--key-file", key_file, "Key file from keygen");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        auto settings = load_settings(g);
        apply_key_file(settings, key_file);
        const RunConfig rc = RunConfig::from(settings);

        if (*keygen) {
            const std::uint64_t seed = g.seed.value_or(rc.seed);
            const std::size_t vocab = vocab_for_detection(rc);
            const rbc::Code code = rbc::build_code(rc.code);
            const std::uint64_t conv_seed = rbc::derive_seed(seed, 0x636f6e76ULL);
            nlohmann::json j = {{"key", rbc::make_key(code.k(), rbc::derive_seed(seed, 0x6b6579ULL)).str()},
                                {"converter_seed", conv_seed},
                                {"vocab_size", vocab},
                                {"k", code.k()},
                                {"code", code.to_json()}};
            emit(g.out, j.dump(2) + "\n");
        } else if (*generate) {
            auto model = rbc::build_model(rc.model);
            const std::size_t length = gen_length.value_or(rc.length);
            const auto wm = rbc::build_watermark(rc, model->vocab_size(), length);
            const auto prompts = rbc::load_prompts(rc.prompts);
            std::vector<rbc::TokenDocument> docs;
            std::uint64_t index = 0;
            for (const auto& prompt : prompts)
                for (std::size_t i = 0; i < gen_count; ++i, ++index) {
                    const auto seed = rbc::derive_seed(rc.seed, index);
                    docs.push_back(gen_plain ? rbc::unwatermarked_generate(*model, prompt, length, seed)
                                             : rbc::watermark_generate(wm, *model, prompt, seed));
                }
            emit(g.out, jsonl(docs));
        } else if (*detect) {
            const auto wm = rbc::build_watermark(rc, vocab_for_detection(rc), rc.length);
            const auto test = rbc::parse_test(det_test);
            const double alpha = det_alpha.value_or(rc.alpha);
            if (!(alpha > 0.0 && alpha <= 1.0)) throw rbc::InvalidArgument("alpha must lie in (0, 1]");
            rbc::Detector detector(wm);
            nlohmann::json reports = nlohmann::json::array();
            for (const auto& doc : read_documents(det_input))
                reports.push_back(rbc::detect(detector, doc.tokens, alpha, test, rc.stride).to_json(det_counts));
            emit(g.out, reports.dump(2) + "\n");
        } else if (*attack) {
            rbc::AttackSpec spec;
            spec.kind = att_kind == "delete" ? rbc::AttackKind::delete_tokens
                        : att_kind == "swap" ? rbc::AttackKind::swap_tokens
                                             : rbc::AttackKind::external;
            spec.rate = att_rate;
            spec.external_command = att_command;
            if (spec.kind == rbc::AttackKind::external && att_command.empty())
                throw rbc::InvalidArgument("external attack needs --command");
            std::vector<rbc::TokenDocument> out;
            std::uint64_t index = 0;
            for (const auto& doc : read_documents(att_input)) {
                spec.seed = rbc::derive_seed(rc.seed, index++);
                out.push_back(rbc::apply_attack(spec, doc, rc.model.vocab_size));
            }
            emit(g.out, jsonl(out));
        } else if (*bench) {
            const auto result = rbc::run_bench(rc);
            std::cout << "wrote " << (std::filesystem::path(rc.out) / "results.json").string() << " ("
                      << result.detection.size() << " rows, " << result.failures.size() << " failed arms)\n";
        } else if (*theory) {
            nlohmann::json reports = nlohmann::json::array();
            const rbc::Code code = rbc::build_code(rc.code);
            std::vector<std::pair<std::string, nlohmann::json>> files;
            if (th_check == "lemma" || th_check == "all") {
                const auto r = rbc::verify_entropy_lemma(10000, rc.seed);
                reports.push_back(r.to_json());
                files.emplace_back("entropy_lemma.json", r.to_json());
            }
            for (double h : th_h) {
                if (th_check == "mismatch" || th_check == "all") {
                    const auto r = rbc::verify_mismatch_bound(h, code, th_trials, rc.seed);
                    reports.push_back(r.to_json());
                    files.emplace_back("mismatch_h" + rbc::format_number(h) + ".json", r.to_json());
                }
                if ((th_check == "exact" || th_check == "all") && h > 0.0) {
                    const auto r = rbc::verify_exact_decoding(code, h, th_trials, rc.seed);
                    reports.push_back(r.to_json());
                    files.emplace_back("exact_h" + rbc::format_number(h) + ".json", r.to_json());
                }
            }
            if (!g.out.empty()) {
                for (const auto& [name, j] : files)
                    rbc::write_file_atomic(std::filesystem::path(g.out) / "reports" / name, j.dump(2) + "\n");
            }
            std::cout << reports.dump(2) << "\n";
        } else if (*rolling) {
            const auto wm = rbc::build_watermark(rc, vocab_for_detection(rc), rc.length);
            rbc::Detector detector(wm);
            const auto docs = read_documents(rol_input);
            if (rol_csv) {
                std::ostringstream s;
                s << "doc,position,token,log10_p\n";
                for (std::size_t d = 0; d < docs.size(); ++d) {
                    const auto scores = rbc::rolling_scores(detector, docs[d].tokens, rol_span);
                    for (std::size_t i = 0; i < scores.size(); ++i)
                        s << d << ',' << i << ',' << docs[d].tokens[i] << ',' << rbc::format_number(scores[i]) << '\n';
                }
                emit(g.out, s.str());
            } else {
                nlohmann::json all = nlohmann::json::array();
                for (const auto& doc : docs)
                    all.push_back({{"tokens", doc.tokens},
                                   {"log10_p", rbc::rolling_scores(detector, doc.tokens, rol_span)}});
                emit(g.out, all.dump() + "\n");
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "rbc: invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rbc: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
