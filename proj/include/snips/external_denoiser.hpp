#ifndef SNIPS_EXTERNAL_DENOISER_HPP
#define SNIPS_EXTERNAL_DENOISER_HPP

// Client for an out-of-process denoiser speaking a fixed little-endian protocol
// over the child's stdin/stdout:
//
//   request:  "SNDQ" | u16 version=1 | u32 N | f64 sigma | N × f32 x̃
//   response: "SNDR" | u16 version=1 | u32 N | N × f32 D(x̃, sigma)
//
// The response is a denoised vector; the score is formed locally as (D - x̃)/σ².

#include "priors.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace snips {

/// Failure talking to the external denoiser. Carries whatever header bytes were received.
class TransportError : public ProtocolError {
public:
    TransportError(const std::string& what, std::vector<unsigned char> raw_header = {})
        : ProtocolError(what + describe(raw_header)), raw_header_(std::move(raw_header)) {}

    const std::vector<unsigned char>& raw_header() const noexcept { return raw_header_; }

private:
    static std::string describe(const std::vector<unsigned char>& raw) {
        if (raw.empty()) return " [no header bytes]";
        static constexpr char hex[] = "0123456789abcdef";
        std::string s = " [header:";
        for (unsigned char b : raw) {
            s += ' ';
            s += hex[b >> 4];
            s += hex[b & 0xF];
        }
        return s + "]";
    }

    std::vector<unsigned char> raw_header_;
};

namespace wire {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kRequestHeaderBytes = 4 + 2 + 4 + 8;
inline constexpr std::size_t kResponseHeaderBytes = 4 + 2 + 4;

template <typename T>
void append_le(std::vector<unsigned char>& buf, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T read_le(const unsigned char* p) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

inline std::vector<unsigned char> encode_request(const Eigen::Ref<const Vector>& x, double sigma) {
    std::vector<unsigned char> buf{'S', 'N', 'D', 'Q'};
    buf.reserve(kRequestHeaderBytes + 4 * static_cast<std::size_t>(x.size()));
    append_le<std::uint16_t>(buf, kVersion);
    append_le<std::uint32_t>(buf, static_cast<std::uint32_t>(x.size()));
    append_le<double>(buf, sigma);
    for (Index j = 0; j < x.size(); ++j) append_le<float>(buf, static_cast<float>(x[j]));
    return buf;
}

inline std::vector<unsigned char> encode_response(const Eigen::Ref<const Vector>& d) {
    std::vector<unsigned char> buf{'S', 'N', 'D', 'R'};
    buf.reserve(kResponseHeaderBytes + 4 * static_cast<std::size_t>(d.size()));
    append_le<std::uint16_t>(buf, kVersion);
    append_le<std::uint32_t>(buf, static_cast<std::uint32_t>(d.size()));
    for (Index j = 0; j < d.size(); ++j) append_le<float>(buf, static_cast<float>(d[j]));
    return buf;
}

struct Request {
    double sigma = 0.0;
    Vector x;
};

/// Validates a response header; returns the declared N.
inline std::uint32_t parse_response_header(const std::vector<unsigned char>& header) {
    if (header.size() != kResponseHeaderBytes) throw TransportError("truncated response header", header);
    if (std::memcmp(header.data(), "SNDR", 4) != 0) throw TransportError("bad response magic", header);
    if (read_le<std::uint16_t>(header.data() + 4) != kVersion)
        throw TransportError("unsupported response version", header);
    return read_le<std::uint32_t>(header.data() + 6);
}

inline std::uint32_t parse_request_header(const std::vector<unsigned char>& header, double& sigma) {
    if (header.size() != kRequestHeaderBytes) throw TransportError("truncated request header", header);
    if (std::memcmp(header.data(), "SNDQ", 4) != 0) throw TransportError("bad request magic", header);
    if (read_le<std::uint16_t>(header.data() + 4) != kVersion)
        throw TransportError("unsupported request version", header);
    sigma = read_le<double>(header.data() + 10);
    return read_le<std::uint32_t>(header.data() + 6);
}

inline Vector decode_floats(const std::vector<unsigned char>& payload, std::uint32_t n) {
    Vector v(n);
    for (std::uint32_t j = 0; j < n; ++j) v[j] = static_cast<double>(read_le<float>(payload.data() + 4 * j));
    return v;
}

} // namespace wire

/// Blocking byte I/O over a pair of file descriptors with a per-read deadline.
class FdChannel {
public:
    FdChannel(int read_fd, int write_fd, std::chrono::milliseconds timeout)
        : read_fd_(read_fd), write_fd_(write_fd), timeout_(timeout) {}

    void write_all(const std::vector<unsigned char>& bytes) const {
        std::size_t done = 0;
        while (done < bytes.size()) {
            const ssize_t n = ::write(write_fd_, bytes.data() + done, bytes.size() - done);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) throw TransportError(std::string("write to denoiser failed: ") + std::strerror(errno));
            done += static_cast<std::size_t>(n);
        }
    }

    /// Reads up to `count` bytes; stops early only on EOF. Throws on timeout.
    std::vector<unsigned char> read_up_to(std::size_t count, const std::vector<unsigned char>& context = {}) const {
        std::vector<unsigned char> out(count);
        std::size_t done = 0;
        const auto deadline = std::chrono::steady_clock::now() + timeout_;
        while (done < count) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                out.resize(done);
                throw TransportError("timed out waiting for denoiser", context.empty() ? out : context);
            }
            pollfd pfd{read_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready < 0 && errno == EINTR) continue;
            if (ready < 0) throw TransportError(std::string("poll failed: ") + std::strerror(errno));
            if (ready == 0) continue;
            const ssize_t n = ::read(read_fd_, out.data() + done, count - done);
            if (n < 0 && errno == EINTR) continue;
            if (n < 0) throw TransportError(std::string("read from denoiser failed: ") + std::strerror(errno));
            if (n == 0) break;
            done += static_cast<std::size_t>(n);
        }
        out.resize(done);
        return out;
    }

private:
    int read_fd_;
    int write_fd_;
    std::chrono::milliseconds timeout_;
};

/// Owns a child process launched via /bin/sh -c <command>, with its stdin/stdout piped.
class ChildProcess {
public:
    explicit ChildProcess(const std::string& command) {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0) throw TransportError("pipe() failed");
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw TransportError("pipe() failed");
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&actions, to_child[1]);
        posix_spawn_file_actions_addclose(&actions, from_child[0]);

        std::string shell = "/bin/sh";
        std::string flag = "-c";
        std::string cmd = command;
        char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
        // Own process group, so teardown also reaches whatever the shell started.
        posix_spawnattr_t attr;
        posix_spawnattr_init(&attr);
        posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
        posix_spawnattr_setpgroup(&attr, 0);
        const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, argv, environ);
        posix_spawnattr_destroy(&attr);
        posix_spawn_file_actions_destroy(&actions);
        ::close(to_child[0]);
        ::close(from_child[1]);
        if (rc != 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            throw TransportError("failed to launch denoiser: " + command);
        }
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (pid_ > 0) {
            int status = 0;
            ::kill(-pid_, SIGTERM);
            ::waitpid(pid_, &status, 0);
        }
    }

    int read_fd() const noexcept { return read_fd_; }
    int write_fd() const noexcept { return write_fd_; }

private:
    pid_t pid_ = -1;
    int read_fd_ = -1;
    int write_fd_ = -1;
};

/// Score model backed by an external denoiser process. One outstanding request at a time.
class ExternalDenoiserScore final : public ScoreModel {
public:
    ExternalDenoiserScore(const std::string& command, Index n,
                          std::chrono::milliseconds timeout = std::chrono::milliseconds(30000))
        : process_(std::make_unique<ChildProcess>(command)), n_(n), command_(command), timeout_(timeout) {
        if (n < 1) throw ArgumentError("external denoiser: dimension must be positive");
    }

    Index dim() const override { return n_; }
    bool thread_safe() const override { return false; }
    const std::string& command() const noexcept { return command_; }

    Vector denoise(const Eigen::Ref<const Vector>& x, double sigma) const {
        check_input(x);
        const FdChannel channel(process_->read_fd(), process_->write_fd(), timeout_);
        channel.write_all(wire::encode_request(x, sigma));
        const auto header = channel.read_up_to(wire::kResponseHeaderBytes);
        const std::uint32_t n = wire::parse_response_header(header);
        if (static_cast<Index>(n) != n_)
            throw TransportError("denoiser returned " + std::to_string(n) + " values, expected " + std::to_string(n_),
                                 header);
        const auto payload = channel.read_up_to(4 * static_cast<std::size_t>(n), header);
        if (payload.size() != 4 * static_cast<std::size_t>(n)) throw TransportError("truncated response payload", header);
        return wire::decode_floats(payload, n);
    }

    void score_into(const Eigen::Ref<const Vector>& x, double sigma, Eigen::Ref<Vector> out) const override {
        if (!(sigma > 0.0)) throw ArgumentError("external score: sigma must be positive");
        // Residual against the float32 values actually sent, so an identity denoiser gives exactly zero.
        const Vector sent = x.cast<float>().cast<double>();
        out = (denoise(x, sigma) - sent) / (sigma * sigma);
    }

private:
    std::unique_ptr<ChildProcess> process_;
    Index n_;
    std::string command_;
    std::chrono::milliseconds timeout_;
};

} // namespace snips

#endif // SNIPS_EXTERNAL_DENOISER_HPP
