#pragma once

// Experiment orchestration (bench grid), theory checks and report emission.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/attacks.hpp"
#include "rbc/channel.hpp"
#include "rbc/config.hpp"
#include "rbc/detector.hpp"
#include "rbc/models.hpp"
#include "rbc/stats.hpp"
#include "rbc/watermark.hpp"

namespace rbc {

// ---------------------------------------------------------------- file output

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// JSON cannot hold NaN; it is written as null.
inline nlohmann::json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

// ---------------------------------------------------------------- statistics

struct Summary {
    std::size_t count = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
};

inline Summary summarize(std::vector<double> v) {
    Summary s;
    s.count = v.size();
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    return s;
}

// One-sided Mann-Whitney U test of "x tends to be larger than y". Normal
// approximation with midranks, tie correction and continuity correction.
inline double mann_whitney_greater(std::span<const double> x, std::span<const double> y) {
    const std::size_t n1 = x.size(), n2 = y.size();
    if (n1 == 0 || n2 == 0) throw InvalidArgument("Mann-Whitney test needs two non-empty samples");
    std::vector<std::pair<double, int>> all;
    all.reserve(n1 + n2);
    for (double v : x) all.emplace_back(v, 0);
    for (double v : y) all.emplace_back(v, 1);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const double N = static_cast<double>(n1 + n2);
    double rank_sum_x = 0.0, tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t r = i; r < j; ++r)
            if (all[r].second == 0) rank_sum_x += mid;
        i = j;
    }
    const double a = static_cast<double>(n1), b = static_cast<double>(n2);
    const double u = rank_sum_x - a * (a + 1.0) / 2.0;
    const double mean = a * b / 2.0;
    const double var = a * b / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
    if (var <= 0.0) return u > mean ? 0.0 : 1.0;
    const double z = (u - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// ---------------------------------------------------------------- bench

struct DetectionRow {
    std::string arm;
    TestKind test = TestKind::bc;
    std::size_t length = 0;
    std::size_t failures = 0;
    Summary log10_p;
    double mean_p = std::numeric_limits<double>::quiet_NaN();  // 10^(mean log10 p)
    double median_p = std::numeric_limits<double>::quiet_NaN();
    double detection_rate = std::numeric_limits<double>::quiet_NaN();
    double detection_se = std::numeric_limits<double>::quiet_NaN();
};

struct PerplexityRow {
    std::string arm;
    std::size_t length = 0;
    Summary perplexity;
};

struct CellFailure {
    std::size_t cell = 0;
    std::string arm;
    std::string error;
};

struct BenchResult {
    std::vector<DetectionRow> detection;
    std::vector<PerplexityRow> perplexity;
    std::vector<CellFailure> failures;
    nlohmann::json cells = nlohmann::json::array();
    nlohmann::json header;

    const DetectionRow* find(const std::string& arm, TestKind test, std::size_t length) const {
        for (const auto& r : detection)
            if (r.arm == arm && r.test == test && r.length == length) return &r;
        return nullptr;
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : detection)
            rows.push_back({{"arm", r.arm},
                            {"test", std::string(to_string(r.test))},
                            {"length", r.length},
                            {"count", r.log10_p.count},
                            {"failures", r.failures},
                            {"mean_log10_p", json_number(r.log10_p.mean)},
                            {"se_log10_p", json_number(r.log10_p.se)},
                            {"mean_p", json_number(r.mean_p)},
                            {"median_p", json_number(r.median_p)},
                            {"detection_rate", json_number(r.detection_rate)},
                            {"se_detection_rate", json_number(r.detection_se)}});
        nlohmann::json ppl = nlohmann::json::array();
        for (const auto& r : perplexity)
            ppl.push_back({{"arm", r.arm},
                           {"length", r.length},
                           {"count", r.perplexity.count},
                           {"mean", json_number(r.perplexity.mean)},
                           {"se", json_number(r.perplexity.se)}});
        nlohmann::json fails = nlohmann::json::array();
        for (const auto& f : failures) fails.push_back({{"cell", f.cell}, {"arm", f.arm}, {"error", f.error}});
        return {{"run", header}, {"detection", rows}, {"perplexity", ppl}, {"failures", fails}};
    }
};

namespace detail {

struct ArmOutcome {
    std::vector<double> log10_p;  // one per test, empty on failure
    double perplexity = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct CellOutcome {
    std::size_t prompt = 0, length = 0, replication = 0;
    std::vector<ArmOutcome> arms;  // watermarked, unwatermarked, then attacks
};

inline std::string detection_csv(const BenchResult& r) {
    std::ostringstream s;
    s << "arm,test,length,count,failures,mean_p,mean_log10_p,se_log10_p,median_p,detection_rate,"
         "se_detection_rate\n";
    for (const auto& row : r.detection)
        s << row.arm << ',' << to_string(row.test) << ',' << row.length << ',' << row.log10_p.count << ','
          << row.failures << ',' << format_number(row.mean_p) << ',' << format_number(row.log10_p.mean) << ','
          << format_number(row.log10_p.se) << ',' << format_number(row.median_p) << ','
          << format_number(row.detection_rate) << ',' << format_number(row.detection_se) << '\n';
    return s.str();
}

// Attack arms at the longest length, in the layout of a robustness table.
inline std::string robustness_csv(const BenchResult& r, std::size_t length) {
    std::ostringstream s;
    s << "arm,test,length,mean_p,median_p,detection_rate\n";
    for (const auto& row : r.detection)
        if (row.length == length)
            s << row.arm << ',' << to_string(row.test) << ',' << row.length << ',' << format_number(row.mean_p)
              << ',' << format_number(row.median_p) << ',' << format_number(row.detection_rate) << '\n';
    return s.str();
}

inline std::string perplexity_csv(const BenchResult& r) {
    std::ostringstream s;
    s << "arm,length,count,mean,se\n";
    for (const auto& row : r.perplexity)
        s << row.arm << ',' << row.length << ',' << row.perplexity.count << ','
          << format_number(row.perplexity.mean) << ',' << format_number(row.perplexity.se) << '\n';
    return s.str();
}

// Plot data: mean log10 p against length with a 95% band.
inline std::string plot_csv(const BenchResult& r) {
    std::ostringstream s;
    s << "arm,test,length,mean_log10_p,lower,upper\n";
    for (const auto& row : r.detection) {
        const double m = row.log10_p.mean, se = row.log10_p.se;
        s << row.arm << ',' << to_string(row.test) << ',' << row.length << ',' << format_number(m) << ','
          << format_number(m - 1.96 * se) << ',' << format_number(m + 1.96 * se) << '\n';
    }
    return s.str();
}

}  // namespace detail

inline nlohmann::json run_header(const RunConfig& rc, const WatermarkConfig& wm, const std::string& model_name) {
    nlohmann::json tests = nlohmann::json::array();
    for (auto t : rc.tests) tests.push_back(std::string(to_string(t)));
    nlohmann::json attacks = nlohmann::json::array();
    for (const auto& a : rc.attacks) attacks.push_back(a.label());
    return {{"model", model_name},
            {"code", wm.code.to_json()},
            {"converter", wm.converter.to_json()},
            {"key", wm.key.str()},
            {"w_in", wm.w_in},
            {"w_out", wm.w_out},
            {"lengths", rc.lengths},
            {"replications", rc.replications},
            {"alpha", rc.alpha},
            {"tests", tests},
            {"attacks", attacks},
            {"stride", rc.stride == Stride::overlapping ? "overlapping" : "disjoint"},
            {"seed", rc.seed}};
}

// Runs every (prompt, length, replication) cell. Cells draw their seeds from
// the master seed and their index, so results do not depend on thread count.
// Writes results.json, tables/*.csv and reports/cells.json when write_files.
inline BenchResult run_bench(const RunConfig& rc, bool write_files = true) {
    rc.validate();
    const auto prompts = load_prompts(rc.prompts);
    std::size_t vocab = 0;
    std::string model_name;
    {
        auto probe = build_model(rc.model);
        vocab = probe->vocab_size();
        model_name = probe->name();
    }
    std::vector<WatermarkConfig> configs;
    for (auto len : rc.lengths) configs.push_back(build_watermark(rc, vocab, len));

    std::vector<std::string> arms{"watermarked", "unwatermarked"};
    for (const auto& a : rc.attacks) arms.push_back(a.label());

    const std::size_t per_prompt = rc.lengths.size() * rc.replications;
    const std::size_t total = prompts.size() * per_prompt;
    std::vector<detail::CellOutcome> outcomes(total);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string fatal;

    auto worker = [&] {
        std::unique_ptr<LanguageModel> model;
        try {
            model = build_model(rc.model);
        } catch (const std::exception& e) {
            std::lock_guard lock(error_mutex);
            if (fatal.empty()) fatal = e.what();
            return;
        }
        std::vector<Detector> detectors;
        detectors.reserve(configs.size());
        for (const auto& c : configs) detectors.emplace_back(c);
        for (std::size_t c = next++; c < total; c = next++) {
            auto& out = outcomes[c];
            out.prompt = c / per_prompt;
            const std::size_t li = (c % per_prompt) / rc.replications;
            out.length = rc.lengths[li];
            out.replication = c % rc.replications;
            out.arms.resize(arms.size());
            const std::uint64_t cell_seed = derive_seed(rc.seed, c);
            const auto& prompt = prompts[out.prompt];

            auto score = [&](detail::ArmOutcome& arm, const TokenDocument& doc) {
                try {
                    const auto z = detectors[li].scan(doc.tokens, rc.stride);
                    for (auto t : rc.tests) arm.log10_p.push_back(run_test(t, z, configs[li].k()).log_p.log10());
                } catch (const std::exception& e) {
                    arm.log10_p.clear();
                    arm.error = e.what();
                }
            };
            auto perplexity = [&](detail::ArmOutcome& arm, const TokenDocument& doc) {
                if (!model->scorable() || doc.tokens.empty()) return;
                try {
                    arm.perplexity = compute_perplexity(*model, doc.tokens, prompt);
                } catch (const std::exception&) {
                }
            };

            std::optional<TokenDocument> wm;
            try {
                wm = watermark_generate(configs[li], *model, prompt, derive_seed(cell_seed, 1));
                score(out.arms[0], *wm);
                perplexity(out.arms[0], *wm);
            } catch (const std::exception& e) {
                out.arms[0].error = e.what();
            }
            try {
                const auto plain = unwatermarked_generate(*model, prompt, out.length, derive_seed(cell_seed, 2));
                score(out.arms[1], plain);
                perplexity(out.arms[1], plain);
            } catch (const std::exception& e) {
                out.arms[1].error = e.what();
            }
            for (std::size_t a = 0; a < rc.attacks.size(); ++a) {
                auto& arm = out.arms[2 + a];
                if (!wm) {
                    arm.error = "no watermarked document";
                    continue;
                }
                try {
                    AttackSpec spec = rc.attacks[a];
                    spec.seed = derive_seed(cell_seed, 100 + a);
                    score(arm, apply_attack(spec, *wm, vocab));
                } catch (const std::exception& e) {
                    arm.error = e.what();
                }
            }
        }
    };

    std::size_t threads = rc.threads ? rc.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(total, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!fatal.empty()) throw EndpointUnavailable("model unavailable: " + fatal);

    // Serial reduce in cell order.
    BenchResult result;
    result.header = run_header(rc, configs.front(), model_name);
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t li = 0; li < rc.lengths.size(); ++li) {
            for (std::size_t ti = 0; ti < rc.tests.size(); ++ti) {
                DetectionRow row;
                row.arm = arms[a];
                row.test = rc.tests[ti];
                row.length = rc.lengths[li];
                std::vector<double> values, probs;
                std::size_t hits = 0;
                for (const auto& cell : outcomes) {
                    if (cell.length != row.length) continue;
                    const auto& arm = cell.arms[a];
                    if (arm.log10_p.empty()) {
                        ++row.failures;
                        continue;
                    }
                    const double v = arm.log10_p[ti];
                    values.push_back(v);
                    probs.push_back(std::pow(10.0, v));
                    if (v <= std::log10(rc.alpha)) ++hits;
                }
                row.log10_p = summarize(values);
                if (!values.empty()) {
                    const double n = static_cast<double>(values.size());
                    row.mean_p = std::pow(10.0, row.log10_p.mean);
                    row.median_p = summarize(probs).median;
                    row.detection_rate = static_cast<double>(hits) / n;
                    row.detection_se = std::sqrt(row.detection_rate * (1.0 - row.detection_rate) / n);
                }
                result.detection.push_back(std::move(row));
            }
        }
    }
    for (std::size_t a = 0; a < 2; ++a) {
        for (auto len : rc.lengths) {
            std::vector<double> v;
            for (const auto& cell : outcomes)
                if (cell.length == len && !std::isnan(cell.arms[a].perplexity)) v.push_back(cell.arms[a].perplexity);
            if (v.empty()) continue;
            result.perplexity.push_back({arms[a], len, summarize(std::move(v))});
        }
    }
    for (std::size_t c = 0; c < outcomes.size(); ++c) {
        const auto& cell = outcomes[c];
        nlohmann::json arms_json = nlohmann::json::object();
        for (std::size_t a = 0; a < arms.size(); ++a) {
            const auto& arm = cell.arms[a];
            if (!arm.error.empty()) result.failures.push_back({c, arms[a], arm.error});
            nlohmann::json values = nlohmann::json::array();
            for (double v : arm.log10_p) values.push_back(v);
            arms_json[arms[a]] = {{"log10_p", values}, {"perplexity", json_number(arm.perplexity)}};
        }
        result.cells.push_back({{"cell", c},
                                {"prompt", cell.prompt},
                                {"length", cell.length},
                                {"replication", cell.replication},
                                {"arms", arms_json}});
    }

    if (write_files) {
        const std::filesystem::path out(rc.out);
        write_file_atomic(out / "results.json", result.to_json().dump(2) + "\n");
        write_file_atomic(out / "tables" / "detection.csv", detail::detection_csv(result));
        write_file_atomic(out / "tables" / "robustness.csv",
                          detail::robustness_csv(result, *std::max_element(rc.lengths.begin(), rc.lengths.end())));
        write_file_atomic(out / "tables" / "perplexity.csv", detail::perplexity_csv(result));
        write_file_atomic(out / "tables" / "plot_log10p.csv", detail::plot_csv(result));
        nlohmann::json tests = nlohmann::json::array();
        for (auto t : rc.tests) tests.push_back(std::string(to_string(t)));
        write_file_atomic(out / "reports" / "cells.json",
                          nlohmann::json{{"tests", tests}, {"cells", result.cells}}.dump(1) + "\n");
    }
    return result;
}

// ---------------------------------------------------------------- theory

struct TheoryReport {
    std::string check;
    double h = 0.0;
    std::size_t n = 0;
    std::size_t trials = 0;
    double lower_bound = 0.0;  // (1 - h) / 2
    double upper_bound = 0.0;  // sqrt(1 - h^2) / 2
    std::optional<double> mismatch_rate, mismatch_se, expected_mismatch;
    std::optional<double> exact_decode_prob, exact_decode_se;
    std::optional<std::size_t> t_eff;
    std::optional<double> kappa, epsilon, delta_threshold, decode_bound;
    std::string status;  // pass | fail | not-applicable
    bool pass = false;

    nlohmann::json to_json() const {
        auto opt = [](const auto& o) -> nlohmann::json {
            if (o) return *o;
            return nullptr;
        };
        return {{"check", check},
                {"h", h},
                {"n", n},
                {"trials", trials},
                {"lower_bound", lower_bound},
                {"upper_bound", upper_bound},
                {"mismatch_rate", opt(mismatch_rate)},
                {"mismatch_se", opt(mismatch_se)},
                {"expected_mismatch", opt(expected_mismatch)},
                {"exact_decode_prob", opt(exact_decode_prob)},
                {"exact_decode_se", opt(exact_decode_se)},
                {"t_eff", opt(t_eff)},
                {"kappa", opt(kappa)},
                {"epsilon", opt(epsilon)},
                {"delta_threshold", opt(delta_threshold)},
                {"decode_bound", opt(decode_bound)},
                {"status", status},
                {"pass", pass}};
    }
};

namespace detail {
inline void check_entropy_arg(double h) {
    if (!(h >= 0.0 && h <= 1.0)) throw InvalidArgument("h must lie in [0, 1]");
}
}  // namespace detail

// Mean fraction of block bits where B differs from the codeword Y, measured on
// the bit-level scheme driven by a constant-entropy model with random branches.
// Per-bit mismatches are independent Bernoulli(|q - 1/2|), so the binomial SE applies.
inline TheoryReport verify_mismatch_bound(double h, const Code& code, std::size_t trials, std::uint64_t seed) {
    detail::check_entropy_arg(h);
    if (trials < 1) throw InvalidArgument("trials must be positive");
    const ConstEntropyBinaryModel model(h, ConstEntropyBinaryModel::Policy::random_branch, derive_seed(seed, 1));
    const std::size_t n = code.n(), k = code.k();
    const std::size_t blocks = ceil_div(trials, n);
    UniformStream rng(seed, 0x746d6dULL);
    const BitString key = rng.next_bits(k);
    const auto gen = binary_generate(model, code, key, k + blocks * n, rng);
    std::size_t mismatches = 0, counted = 0;
    for (const auto& b : gen.blocks) {
        mismatches += hamming_distance(gen.bits.slice(b.start, n), b.codeword);
        counted += n;
    }
    TheoryReport r;
    r.check = "mismatch-bound";
    r.h = h;
    r.n = n;
    r.trials = counted;
    r.lower_bound = (1.0 - h) / 2.0;
    r.upper_bound = std::sqrt(std::max(0.0, 1.0 - h * h)) / 2.0;
    const double rate = static_cast<double>(mismatches) / static_cast<double>(counted);
    const double se = std::sqrt(rate * (1.0 - rate) / static_cast<double>(counted));
    r.mismatch_rate = rate;
    r.mismatch_se = se;
    r.expected_mismatch = std::abs(model.q_low() - 0.5);
    r.pass = rate >= r.lower_bound - 4.0 * se && rate <= r.upper_bound + 4.0 * se;
    r.status = r.pass ? "pass" : "fail";
    return r;
}

// Largest t such that every error pattern of weight <= t decodes to the sent
// message. All messages are tried when k <= 8, otherwise 32 random ones.
inline std::size_t measure_correction_radius(const Code& code, std::uint64_t seed = 0) {
    const std::size_t n = code.n(), k = code.k();
    std::vector<BitString> messages;
    if (k <= 8) {
        for (std::uint64_t m = 0; m < (1ULL << k); ++m) messages.push_back(BitString::from_uint(m, k));
    } else {
        UniformStream rng(seed, 0x726164ULL);
        for (int i = 0; i < 32; ++i) messages.push_back(rng.next_bits(k));
    }
    for (std::size_t w = 1; w <= n; ++w) {
        std::vector<bool> select(n, false);
        std::fill(select.begin(), select.begin() + static_cast<std::ptrdiff_t>(w), true);
        std::size_t patterns = 0;
        do {
            if (++patterns > 200000) return w - 1;  // too many to enumerate
            BitString e(n);
            for (std::size_t i = 0; i < n; ++i) e[i] = select[i] ? 1 : 0;
            for (const auto& m : messages)
                if (code.decode(code.encode(m) ^ e) != m) return w - 1;
        } while (std::prev_permutation(select.begin(), select.end()));
    }
    return n;
}

// Exact block decoding: P(decode(B) = M) for uniform messages against
// 1 - exp[-(t+1 - kappa n sqrt(1-h^2)/2)^2 / n] - eps. kappa is the smallest
// value in {1.0, 1.1, ..., 3.0} with measured P(Delta <= kappa n sqrt(1-h^2)/2)
// >= 0.99, eps the measured complement.
inline TheoryReport verify_exact_decoding(const Code& code, double h, std::size_t trials, std::uint64_t seed) {
    detail::check_entropy_arg(h);
    if (!(h > 0.0)) throw InvalidArgument("h must lie in (0, 1]");
    if (trials < 1) throw InvalidArgument("trials must be positive");
    const ConstEntropyBinaryModel model(h, ConstEntropyBinaryModel::Policy::random_branch, derive_seed(seed, 1));
    const std::size_t n = code.n(), k = code.k();
    UniformStream rng(seed, 0x657864ULL);
    const double half_width = static_cast<double>(n) * std::sqrt(std::max(0.0, 1.0 - h * h)) / 2.0;
    std::vector<double> deltas;
    deltas.reserve(trials);
    std::size_t exact = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const BitString m = rng.next_bits(k);
        const BitString y = code.encode(m);
        BitString b(n);
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double q = model.q_at(t * n + j);
            delta += std::abs(0.5 - q);
            b[j] = cbsc_sample(q, y[j], rng.next_unit());
        }
        deltas.push_back(delta);
        if (code.decode(b) == m) ++exact;
    }
    TheoryReport r;
    r.check = "exact-decoding";
    r.h = h;
    r.n = n;
    r.trials = trials;
    r.lower_bound = (1.0 - h) / 2.0;
    r.upper_bound = half_width / static_cast<double>(n);
    const double p = static_cast<double>(exact) / static_cast<double>(trials);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    r.exact_decode_prob = p;
    r.exact_decode_se = se;
    const std::size_t t_eff = measure_correction_radius(code, seed);
    r.t_eff = t_eff;

    double kappa = 3.0, eps = 1.0;
    for (int step = 10; step <= 30; ++step) {
        const double kap = step / 10.0;
        const double limit = kap * half_width + 1e-12;
        const auto within = std::count_if(deltas.begin(), deltas.end(), [&](double d) { return d <= limit; });
        const double frac = static_cast<double>(within) / static_cast<double>(trials);
        if (frac >= 0.99 || step == 30) {
            kappa = kap;
            eps = 1.0 - frac;
            break;
        }
    }
    r.kappa = kappa;
    r.epsilon = eps;
    r.delta_threshold = kappa * half_width;
    const double gap = static_cast<double>(t_eff) + 1.0 - kappa * half_width;
    const double bound = 1.0 - std::exp(-gap * gap / static_cast<double>(n)) - eps;
    r.decode_bound = bound;
    // A code without correction capability only meets the bound's premise on a
    // noiseless channel.
    const bool applicable = gap >= 0.0 && bound > 0.0 && (t_eff > 0 || h >= 1.0);
    if (!applicable) {
        r.status = "not-applicable";
        r.pass = true;
    } else {
        r.pass = p + 4.0 * se >= bound;
        r.status = r.pass ? "pass" : "fail";
    }
    return r;
}

struct EntropyLemmaReport {
    std::size_t samples = 0;
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    std::size_t averaged_violations = 0;
    std::size_t tuples = 0;
    bool equality_points = false;
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"check", "entropy-lemma"},
                {"samples", samples},
                {"lower_violations", lower_violations},
                {"upper_violations", upper_violations},
                {"tuples", tuples},
                {"averaged_violations", averaged_violations},
                {"equality_points", equality_points},
                {"pass", pass}};
    }
};

// Pointwise 1 - 2|1/2 - q| <= H(q) <= sqrt(1 - 4|1/2 - q|^2) on uniform q, the
// equality points of the lower bound, and the averaged form on random tuples:
// mean of the lower bounds <= mean H <= sqrt(1 - 4 (mean |1/2 - q|)^2).
inline EntropyLemmaReport verify_entropy_lemma(std::size_t samples, std::uint64_t seed,
                                               std::size_t tuples = 1000, std::size_t tuple_size = 12) {
    if (samples < 1) throw InvalidArgument("samples must be positive");
    constexpr double tol = 1e-12;
    UniformStream rng(seed, 0x656e74ULL);
    EntropyLemmaReport r;
    r.samples = samples;
    for (std::size_t i = 0; i < samples; ++i) {
        const double q = rng.next_unit();
        const double d = std::abs(0.5 - q);
        const double hq = stats::entropy(q);
        if (1.0 - 2.0 * d > hq + tol) ++r.lower_violations;
        if (hq > std::sqrt(1.0 - 4.0 * d * d) + tol) ++r.upper_violations;
    }
    r.equality_points = true;
    for (double q : {0.0, 0.5, 1.0})
        if (std::abs((1.0 - 2.0 * std::abs(0.5 - q)) - stats::entropy(q)) > tol) r.equality_points = false;
    r.tuples = tuples;
    for (std::size_t t = 0; t < tuples; ++t) {
        double mean_h = 0.0, mean_d = 0.0;
        for (std::size_t j = 0; j < tuple_size; ++j) {
            const double q = rng.next_unit();
            mean_h += stats::entropy(q);
            mean_d += std::abs(0.5 - q);
        }
        mean_h /= static_cast<double>(tuple_size);
        mean_d /= static_cast<double>(tuple_size);
        if (1.0 - 2.0 * mean_d > mean_h + tol || mean_h > std::sqrt(1.0 - 4.0 * mean_d * mean_d) + tol)
            ++r.averaged_violations;
    }
    r.pass = r.lower_violations == 0 && r.upper_violations == 0 && r.averaged_violations == 0 && r.equality_points;
    return r;
}

}  // namespace rbc
