// Protocol conformance check for model bridges. Runs against a stdio command
// or a TCP endpoint and prints one PASS/FAIL line per check.
//
//   bridge_conformance --command "python -m lm_bridge ..." [--golden FILE]
//   bridge_conformance --host 127.0.0.1 --port 7000
//
// A golden file holds {"request":..., "response":...} lines replayed verbatim;
// numbers in responses must agree to 1e-12.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rbc/process.hpp"

namespace {

class Connection {
public:
    Connection(const std::string& command, const std::string& host, int port, int timeout_ms) {
        if (!command.empty()) {
            child_.emplace(command);
            fd_ = child_->fd();
        } else {
            socket_ = rbc::process::connect_tcp(host, port);
            fd_ = socket_.get();
        }
        reader_.emplace(fd_, std::chrono::milliseconds(timeout_ms));
    }

    std::optional<nlohmann::json> ask(const std::string& raw) {
        rbc::process::write_all(fd_, raw + "\n");
        const auto line = reader_->read_line();
        if (!line) return std::nullopt;
        return nlohmann::json::parse(*line);
    }

private:
    std::optional<rbc::process::Child> child_;
    rbc::process::FileDescriptor socket_;
    int fd_ = -1;
    std::optional<rbc::process::LineReader> reader_;
};

bool same_json(const nlohmann::json& a, const nlohmann::json& b) {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y));
    }
    if (a.type() != b.type()) return false;
    if (a.is_array()) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!same_json(a[i], b[i])) return false;
        return true;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) return false;
        for (auto it = a.begin(); it != a.end(); ++it)
            if (!b.contains(it.key()) || !same_json(it.value(), b[it.key()])) return false;
        return true;
    }
    return a == b;
}

struct Checker {
    int failures = 0;
    void report(const std::string& name, bool ok, const std::string& why = "") {
        std::cout << (ok ? "PASS " : "FAIL ") << name;
        if (!ok && !why.empty()) std::cout << ": " << why;
        std::cout << "\n";
        if (!ok) ++failures;
    }
};

// Empty string when the reply is a valid distribution of the given size.
std::string check_dist(const std::optional<nlohmann::json>& r, std::size_t vocab, double tol) {
    if (!r) return "connection closed";
    if (r->value("t", "") != "dist") return "reply type is not dist: " + r->dump().substr(0, 120);
    if (!r->contains("p") || !(*r)["p"].is_array()) return "no probability array";
    const auto& p = (*r)["p"];
    if (p.size() != vocab) return "length " + std::to_string(p.size()) + " != " + std::to_string(vocab);
    double sum = 0.0;
    for (const auto& v : p) {
        if (!v.is_number()) return "non-numeric entry";
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < 0.0) return "entry outside [0, inf)";
        sum += x;
    }
    if (std::abs(sum - 1.0) > tol) return "sum " + std::to_string(sum) + " not within tolerance of 1";
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bridge protocol conformance check"};
    std::string command, host = "127.0.0.1", golden;
    int port = 0;
    int timeout_ms = 120000;
    double tol = 1e-6;
    app.add_option("--command", command, "Bridge command (stdio transport)");
    app.add_option("--host", host, "TCP host");
    app.add_option("--port", port, "TCP port");
    app.add_option("--golden", golden, "Golden transcript (JSONL)");
    app.add_option("--sum-tolerance", tol, "Allowed |sum(p) - 1|");
    app.add_option("--timeout-ms", timeout_ms, "Per-reply timeout");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }
    if (command.empty() && port == 0) {
        std::cerr << "bridge_conformance: need --command or --port\n";
        return 2;
    }

    Checker c;
    try {
        Connection conn(command, host, port, timeout_ms);

        const auto meta = conn.ask(R"({"t":"meta"})");
        std::size_t vocab = 0;
        const bool meta_ok = meta && meta->value("t", "") == "meta" && meta->contains("vocab_size") &&
                             (*meta)["vocab_size"].is_number_integer() && (*meta)["vocab_size"].get<long long>() >= 2 &&
                             meta->contains("name") && (*meta)["name"].is_string();
        c.report("meta", meta_ok, meta ? meta->dump().substr(0, 120) : "connection closed");
        if (!meta_ok) return 1;
        vocab = (*meta)["vocab_size"].get<std::size_t>();

        const auto empty = conn.ask(R"({"t":"dist","ctx":[]})");
        const auto e1 = check_dist(empty, vocab, tol);
        c.report("dist-empty-context", e1.empty(), e1);

        nlohmann::json ctx = nlohmann::json::array();
        for (std::size_t i = 0; i < 5; ++i) ctx.push_back((i * 3) % vocab);
        const std::string req = nlohmann::json{{"t", "dist"}, {"ctx", ctx}}.dump();
        const auto a = conn.ask(req);
        const auto e2 = check_dist(a, vocab, tol);
        c.report("dist-context", e2.empty(), e2);
        const auto b = conn.ask(req);
        c.report("dist-deterministic", a && b && *a == *b, "repeated request gave a different vector");

        const auto bad_type = conn.ask(R"({"t":"bogus"})");
        c.report("err-unknown-type", bad_type && bad_type->value("t", "") == "err" && bad_type->contains("msg") &&
                                         (*bad_type)["msg"].is_string(),
                 bad_type ? bad_type->dump().substr(0, 120) : "connection closed");

        const auto oov = conn.ask(nlohmann::json{{"t", "dist"}, {"ctx", {vocab + 5}}}.dump());
        c.report("err-token-out-of-range", oov && oov->value("t", "") == "err",
                 oov ? oov->dump().substr(0, 120) : "connection closed");

        const auto again = conn.ask(R"({"t":"meta"})");
        c.report("usable-after-error", again && again->value("t", "") == "meta", "no meta reply after an error");

        if (!golden.empty()) {
            std::ifstream in(golden);
            if (!in) throw std::runtime_error("cannot open golden transcript " + golden);
            std::string line;
            std::size_t n = 0, bad = 0;
            std::string first_bad;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto entry = nlohmann::json::parse(line);
                const auto got = conn.ask(entry.at("request").dump());
                ++n;
                if (!got || !same_json(*got, entry.at("response"))) {
                    ++bad;
                    if (first_bad.empty()) first_bad = entry.at("request").dump();
                }
            }
            c.report("golden-transcript (" + std::to_string(n) + " exchanges)", bad == 0 && n > 0,
                     std::to_string(bad) + " mismatches, first at " + first_bad);
        }
    } catch (const std::exception& e) {
        c.report("transport", false, e.what());
    }
    return c.failures == 0 ? 0 : 1;
}
