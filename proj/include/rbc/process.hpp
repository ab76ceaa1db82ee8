#pragma once

// POSIX plumbing shared by the model bridge and the external-attack hook: a
// child process whose stdin/stdout is one end of a socket pair, TCP
// connections, and newline-framed I/O with timeouts.

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "rbc/errors.hpp"

namespace rbc::process {

class FileDescriptor {
public:
    FileDescriptor() = default;
    explicit FileDescriptor(int fd) : fd_(fd) {}
    FileDescriptor(FileDescriptor&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    FileDescriptor& operator=(FileDescriptor&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;
    ~FileDescriptor() { reset(); }

    int get() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void reset() noexcept {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

// Child running `/bin/sh -c command` with stdin and stdout bound to a socket.
// Destruction closes the socket, gives the child a moment to exit, then kills it.
class Child {
public:
    explicit Child(const std::string& command, bool inherit_stderr = true) {
        int sv[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
            throw EndpointUnavailable(std::string("socketpair: ") + std::strerror(errno));
        const pid_t pid = ::fork();
        if (pid < 0) {
            ::close(sv[0]);
            ::close(sv[1]);
            throw EndpointUnavailable(std::string("fork: ") + std::strerror(errno));
        }
        if (pid == 0) {
            ::dup2(sv[1], STDIN_FILENO);
            ::dup2(sv[1], STDOUT_FILENO);
            if (!inherit_stderr) {
                const int devnull = ::open("/dev/null", O_WRONLY);
                if (devnull >= 0) ::dup2(devnull, STDERR_FILENO);
            }
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(sv[1]);
        pid_ = pid;
        fd_ = FileDescriptor(sv[0]);
    }
    Child(Child&& o) noexcept : pid_(std::exchange(o.pid_, -1)), fd_(std::move(o.fd_)) {}
    Child& operator=(Child&&) = delete;
    ~Child() {
        fd_.reset();
        if (pid_ > 0) {
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    int fd() const noexcept { return fd_.get(); }
    void close_input() noexcept { ::shutdown(fd_.get(), SHUT_WR); }

    // Blocks until exit; returns the exit code, or 128 + signal.
    int wait() {
        int status = 0;
        if (::waitpid(std::exchange(pid_, -1), &status, 0) < 0) return -1;
        if (WIFEXITED(status)) return WEXITSTATUS(status);
        if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
        return -1;
    }

private:
    pid_t pid_ = -1;
    FileDescriptor fd_;
};

inline FileDescriptor connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw EndpointUnavailable("cannot resolve " + host + ": " + ::gai_strerror(rc));
    FileDescriptor fd;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        FileDescriptor s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!s.valid()) continue;
        if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
            fd = std::move(s);
            break;
        }
    }
    ::freeaddrinfo(res);
    if (!fd.valid()) throw EndpointUnavailable("cannot connect to " + host + ":" + service);
    return fd;
}

inline void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw EndpointUnavailable(std::string("write failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

// Newline-framed reader over a stream descriptor it does not own.
class LineReader {
public:
    explicit LineReader(int fd, std::chrono::milliseconds timeout = std::chrono::seconds(120))
        : fd_(fd), timeout_(timeout) {}

    // Next line without the terminator; nullopt at end of stream.
    std::optional<std::string> read_line() {
        for (;;) {
            if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (eof_) {
                if (buffer_.empty()) return std::nullopt;
                return std::exchange(buffer_, {});
            }
            fill();
        }
    }

    std::string read_all() {
        while (!eof_) fill();
        return std::exchange(buffer_, {});
    }

private:
    void fill() {
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
        if (rc == 0) throw EndpointUnavailable("timed out waiting for peer");
        if (rc < 0) {
            if (errno == EINTR) return;
            throw EndpointUnavailable(std::string("poll failed: ") + std::strerror(errno));
        }
        char chunk[65536];
        const ssize_t n = ::read(fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) return;
            throw EndpointUnavailable(std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0) eof_ = true;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }

    int fd_;
    std::chrono::milliseconds timeout_;
    std::string buffer_;
    bool eof_ = false;
};

struct FilterResult {
    int exit_code = -1;
    std::string output;
};

// Runs `command` with `input` on stdin and collects stdout. Input is written
// from a separate thread so a child that streams output early cannot deadlock.
inline FilterResult run_filter(const std::string& command, const std::string& input,
                               std::chrono::milliseconds timeout = std::chrono::seconds(300)) {
    Child child(command);
    std::string write_error;
    std::thread writer([&] {
        try {
            write_all(child.fd(), input);
        } catch (const std::exception& e) {
            write_error = e.what();
        }
        child.close_input();
    });
    FilterResult result;
    try {
        LineReader reader(child.fd(), timeout);
        result.output = reader.read_all();
    } catch (...) {
        writer.join();
        throw;
    }
    writer.join();
    result.exit_code = child.wait();
    return result;
}

}  // namespace rbc::process
