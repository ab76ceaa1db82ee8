#pragma once

// Client for external language models speaking newline-delimited JSON:
//
//   {"t":"meta"}                 -> {"t":"meta","vocab_size":int,"name":string}
//   {"t":"dist","ctx":[int,...]} -> {"t":"dist","p":[float,...]}
//
// Failures on the server side come back as {"t":"err","msg":string}. One
// request is in flight per connection.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/converter.hpp"
#include "rbc/errors.hpp"
#include "rbc/models.hpp"
#include "rbc/process.hpp"

namespace rbc {

struct BridgeEndpoint {
    enum class Transport { stdio_subprocess, tcp };

    Transport transport = Transport::stdio_subprocess;
    std::string command;  // stdio: shell command line
    std::string host = "127.0.0.1";
    int port = 0;
    int protocol_version = 1;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);

    static BridgeEndpoint stdio(std::string command) {
        BridgeEndpoint e;
        e.command = std::move(command);
        return e;
    }
    static BridgeEndpoint tcp(std::string host, int port) {
        BridgeEndpoint e;
        e.transport = Transport::tcp;
        e.host = std::move(host);
        e.port = port;
        return e;
    }
};

namespace detail {
inline std::string excerpt(const std::string& s) {
    constexpr std::size_t kMax = 160;
    return s.size() <= kMax ? s : s.substr(0, kMax) + "...";
}
}  // namespace detail

class BridgeModel final : public LanguageModel {
public:
    // Connects and performs the meta handshake.
    explicit BridgeModel(BridgeEndpoint endpoint) : endpoint_(std::move(endpoint)) {
        if (endpoint_.protocol_version != 1) throw InvalidArgument("unsupported bridge protocol version");
        int fd = -1;
        if (endpoint_.transport == BridgeEndpoint::Transport::stdio_subprocess) {
            if (endpoint_.command.empty()) throw InvalidArgument("stdio bridge needs a command");
            child_.emplace(endpoint_.command);
            fd = child_->fd();
        } else {
            socket_ = process::connect_tcp(endpoint_.host, endpoint_.port);
            fd = socket_.get();
        }
        fd_ = fd;
        reader_ = std::make_unique<process::LineReader>(fd, endpoint_.timeout);

        const auto reply = request({{"t", "meta"}}, "meta");
        if (!reply.contains("vocab_size") || !reply["vocab_size"].is_number_integer() ||
            reply["vocab_size"].get<long long>() < 2)
            throw ProtocolError("meta reply without a usable vocab_size: " + detail::excerpt(reply.dump()));
        vocab_size_ = reply["vocab_size"].get<std::size_t>();
        if (reply.contains("name") && reply["name"].is_string()) name_ = reply["name"].get<std::string>();
    }

    std::size_t vocab_size() const override { return vocab_size_; }
    std::string name() const override { return name_; }

    // Full-vocabulary distribution; sums within 1e-3 of one are renormalized.
    TokenDistribution next(std::span<const TokenId> context) override {
        nlohmann::json ctx = nlohmann::json::array();
        for (TokenId t : context) ctx.push_back(t);
        const auto reply = request({{"t", "dist"}, {"ctx", std::move(ctx)}}, "dist");
        const auto it = reply.find("p");
        if (it == reply.end() || !it->is_array())
            throw ProtocolError("dist reply without a probability array: " + detail::excerpt(reply.dump()));
        if (it->size() != vocab_size_)
            throw ProtocolError("dist reply has " + std::to_string(it->size()) + " entries, expected " +
                                std::to_string(vocab_size_));
        std::vector<double> probs;
        probs.reserve(vocab_size_);
        for (const auto& v : *it) {
            if (!v.is_number()) throw ProtocolError("non-numeric probability: " + detail::excerpt(v.dump()));
            probs.push_back(v.get<double>());
        }
        try {
            return TokenDistribution(std::move(probs), kSumTolerance);
        } catch (const InvalidArgument& e) {
            throw ProtocolError(std::string("invalid distribution: ") + e.what());
        }
    }

    static constexpr double kSumTolerance = 1e-3;

private:
    nlohmann::json request(const nlohmann::json& msg, const char* expected_type) {
        process::write_all(fd_, msg.dump() + "\n");
        const auto line = reader_->read_line();
        if (!line) throw EndpointUnavailable("bridge closed the connection");
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(*line);
        } catch (const nlohmann::json::parse_error&) {
            throw ProtocolError("reply is not JSON: " + detail::excerpt(*line));
        }
        if (!reply.is_object() || !reply.contains("t") || !reply["t"].is_string())
            throw ProtocolError("reply without a type tag: " + detail::excerpt(*line));
        const auto type = reply["t"].get<std::string>();
        if (type == "err")
            throw ProtocolError("bridge error: " + reply.value("msg", std::string("(no message)")));
        if (type != expected_type)
            throw ProtocolError("expected a '" + std::string(expected_type) + "' reply, got: " +
                                detail::excerpt(*line));
        return reply;
    }

    BridgeEndpoint endpoint_;
    std::optional<process::Child> child_;
    process::FileDescriptor socket_;
    int fd_ = -1;
    std::unique_ptr<process::LineReader> reader_;
    std::size_t vocab_size_ = 0;
    std::string name_ = "bridge";
};

}  // namespace rbc
