#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <mutex>
#include <set>

#include "json.hpp"
#include "legalir/errors.hpp"
#include "legalir/pipeline.hpp"

namespace legalir {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct ExternalProcessScorer::Process {
    pid_t pid = -1;
    int to_child = -1;    // our write end of the child's stdin
    int from_child = -1;  // our read end of the child's stdout
    std::string read_buffer;

    ~Process() {
        if (to_child >= 0) ::close(to_child);
        if (from_child >= 0) ::close(from_child);
    }
};

namespace {

std::once_flag g_sigpipe_once;

void set_nonblocking(int fd) {
    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int remaining_ms(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return static_cast<int>(std::max<long long>(0, left.count()));
}

[[noreturn]] void throw_exit_status(pid_t pid, const std::string& context) {
    // EOF usually races the actual process exit; give it a moment to be
    // reapable before reporting, and kill it if it lingers with closed pipes.
    int status = 0;
    pid_t reaped = 0;
    for (int i = 0; i < 200 && reaped == 0; ++i) {
        reaped = ::waitpid(pid, &status, WNOHANG);
        if (reaped == 0) ::usleep(10000);
    }
    if (reaped == 0) {
        ::kill(pid, SIGKILL);
        reaped = ::waitpid(pid, &status, 0);
    }
    std::string detail = "exited";
    if (reaped == pid) {
        if (WIFEXITED(status)) {
            detail = "exited with status " + std::to_string(WEXITSTATUS(status));
        } else if (WIFSIGNALED(status)) {
            detail = "killed by signal " + std::to_string(WTERMSIG(status));
        }
    }
    throw Error("external scorer " + detail + " " + context);
}

}  // namespace

ExternalProcessScorer::ExternalProcessScorer(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {
    if (!(timeout_seconds_ > 0.0)) throw Error("external scorer: timeout must be > 0");
}

ExternalProcessScorer::~ExternalProcessScorer() { shutdown(); }

void ExternalProcessScorer::ensure_started() {
    if (proc_) return;
    // Broken-pipe writes must surface as EPIPE, not kill the process.
    std::call_once(g_sigpipe_once, []() { std::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2];   // parent -> child stdin
    int out_pipe[2];  // child stdout -> parent
    if (::pipe(in_pipe) != 0) throw Error("external scorer: pipe() failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error("external scorer: pipe() failed");
    }

    pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        throw Error("external scorer: fork() failed");
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    proc_ = std::make_unique<Process>();
    proc_->pid = pid;
    proc_->to_child = in_pipe[1];
    proc_->from_child = out_pipe[0];
    set_nonblocking(proc_->to_child);
    set_nonblocking(proc_->from_child);

    // Handshake: the child announces its protocol version on its first line.
    auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(timeout_seconds_));
    std::string line;
    while (true) {
        std::size_t nl = proc_->read_buffer.find('\n');
        if (nl != std::string::npos) {
            line = proc_->read_buffer.substr(0, nl);
            proc_->read_buffer.erase(0, nl + 1);
            break;
        }
        struct pollfd pfd{proc_->from_child, POLLIN, 0};
        int ms = remaining_ms(deadline);
        if (ms == 0 || ::poll(&pfd, 1, ms) <= 0) {
            shutdown();
            throw Error("external scorer: timeout waiting for handshake line");
        }
        char buf[4096];
        ssize_t n = ::read(proc_->from_child, buf, sizeof(buf));
        if (n > 0) {
            proc_->read_buffer.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
            pid_t dead = proc_->pid;
            proc_.reset();
            throw_exit_status(dead, "before sending a handshake");
        } else if (errno != EAGAIN && errno != EINTR) {
            shutdown();
            throw Error("external scorer: read failed during handshake");
        }
    }

    json handshake;
    try {
        handshake = json::parse(line);
    } catch (const json::exception&) {
        shutdown();
        throw Error("external scorer: malformed handshake line: " + line);
    }
    std::string protocol = handshake.value("protocol", "");
    if (protocol != kProtocol) {
        shutdown();
        throw Error("external scorer: unsupported protocol '" + protocol + "' (expected '" +
                    std::string(kProtocol) + "')");
    }
}

std::vector<ScoreResponse> ExternalProcessScorer::score(const std::vector<ScoreRequest>& requests) {
    if (requests.empty()) return {};
    {
        std::set<std::string> seen;
        for (const ScoreRequest& r : requests) {
            if (!seen.insert(r.pair_id).second) {
                throw Error("scorer: duplicate pair_id '" + r.pair_id + "' in batch");
            }
        }
    }
    ensure_started();

    std::string outgoing;
    for (const ScoreRequest& r : requests) {
        json line = {{"pair_id", r.pair_id},
                     {"question_text", r.question_text},
                     {"passage_text", r.passage_text}};
        outgoing += line.dump();
        outgoing.push_back('\n');
    }

    auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(timeout_seconds_));
    std::vector<ScoreResponse> responses;
    responses.reserve(requests.size());
    std::size_t sent = 0;

    auto expected_id = [&]() -> const std::string& { return requests[responses.size()].pair_id; };

    auto abort_with = [&](const std::string& msg) -> Error {
        shutdown();
        return Error(msg);
    };

    auto consume_line = [&](const std::string& line) {
        const std::string& expected = expected_id();
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception&) {
            throw abort_with("external scorer: malformed response line for pair_id '" + expected +
                             "': " + line);
        }
        if (!obj.is_object() || !obj.contains("pair_id") || !obj["pair_id"].is_string()) {
            throw abort_with("external scorer: malformed response line for pair_id '" + expected +
                             "': " + line);
        }
        std::string got = obj["pair_id"].get<std::string>();
        if (got != expected) {
            throw abort_with("external scorer: response pair_id '" + got + "' does not match '" +
                             expected + "' (responses must preserve request order)");
        }
        if (!obj.contains("probability") || !obj["probability"].is_number()) {
            throw abort_with("external scorer: response for pair_id '" + expected +
                             "' has no numeric 'probability'");
        }
        double p = obj["probability"].get<double>();
        if (!std::isfinite(p)) {
            throw abort_with("external scorer: non-finite probability for pair_id '" + expected + "'");
        }
        responses.push_back({got, std::clamp(p, 0.0, 1.0)});
    };

    // Interleave writes and reads so a filled stdout pipe never deadlocks a
    // child still waiting for requests.
    while (responses.size() < requests.size()) {
        std::size_t nl = proc_->read_buffer.find('\n');
        if (nl != std::string::npos) {
            std::string line = proc_->read_buffer.substr(0, nl);
            proc_->read_buffer.erase(0, nl + 1);
            consume_line(line);
            continue;
        }

        struct pollfd pfds[2];
        nfds_t nfds = 0;
        pfds[nfds++] = {proc_->from_child, POLLIN, 0};
        if (sent < outgoing.size()) pfds[nfds++] = {proc_->to_child, POLLOUT, 0};

        int ms = remaining_ms(deadline);
        int rc = ms > 0 ? ::poll(pfds, nfds, ms) : 0;
        if (rc == 0) {
            throw abort_with("external scorer: timeout after " + std::to_string(timeout_seconds_) +
                             "s waiting for response to pair_id '" + expected_id() + "'");
        }
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw abort_with("external scorer: poll failed");
        }

        if (nfds > 1 && (pfds[1].revents & (POLLOUT | POLLERR))) {
            ssize_t n = ::write(proc_->to_child, outgoing.data() + sent, outgoing.size() - sent);
            if (n > 0) {
                sent += static_cast<std::size_t>(n);
            } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
                pid_t dead = proc_->pid;
                std::string expected = expected_id();
                shutdown();
                throw_exit_status(dead, "while receiving request for pair_id '" + expected + "'");
            }
        }
        if (pfds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            char buf[65536];
            ssize_t n = ::read(proc_->from_child, buf, sizeof(buf));
            if (n > 0) {
                proc_->read_buffer.append(buf, static_cast<std::size_t>(n));
            } else if (n == 0) {
                pid_t dead = proc_->pid;
                std::string expected = expected_id();
                proc_.reset();
                throw_exit_status(dead, "before responding to pair_id '" + expected + "'");
            } else if (errno != EAGAIN && errno != EINTR) {
                throw abort_with("external scorer: read failed");
            }
        }
    }
    return responses;
}

void ExternalProcessScorer::shutdown() noexcept {
    if (!proc_) return;
    pid_t pid = proc_->pid;
    ::close(proc_->to_child);  // EOF lets a well-behaved scorer exit
    proc_->to_child = -1;

    for (int i = 0; i < 50; ++i) {  // up to ~500ms of grace
        if (::waitpid(pid, nullptr, WNOHANG) == pid) {
            proc_.reset();
            return;
        }
        ::usleep(10000);
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    proc_.reset();
}

}  // namespace legalir
