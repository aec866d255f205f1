#include "fogpipe/sink_server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace fogpipe::cloud {

namespace {

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::read(fd, buf + got, n - got);
        if (r <= 0) return false;
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, const std::uint8_t* buf, std::size_t n) {
    std::size_t sent = 0;
    while (sent < n) {
        const ssize_t w = ::write(fd, buf + sent, n - sent);
        if (w <= 0) return false;
        sent += static_cast<std::size_t>(w);
    }
    return true;
}

bool send_frame(int fd, const CloudFrame& frame) {
    const auto bytes = encode_frame(frame);
    return write_all(fd, bytes.data(), bytes.size());
}

CloudFrame error_ack(const std::string& reason) {
    CloudFrame ack;
    ack.event = "ack";
    ack.payload["error"] = reason;
    return ack;
}

int connect_to(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw StartupError("cannot resolve host '" + host + "'");
    int fd = -1;
    for (addrinfo* p = res; p; p = p->ai_next) {
        fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0)
        throw StartupError("cannot connect to " + host + ":" + std::to_string(port));
    return fd;
}

} // namespace

SinkServer::SinkServer(const std::string& host, std::uint16_t port, LongTermLog& log)
    : log_(log) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw StartupError("cannot resolve listen host '" + host + "'");

    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw StartupError("cannot create listening socket");
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 16) != 0) {
        const std::string err = std::strerror(errno);
        ::freeaddrinfo(res);
        ::close(fd);
        throw StartupError("cannot bind " + host + ":" + std::to_string(port) + ": " + err);
    }
    ::freeaddrinfo(res);

    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    listen_fd_.store(fd);
}

SinkServer::~SinkServer() { stop(); }

void SinkServer::start() {
    if (running_.exchange(true)) return;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void SinkServer::stop() {
    const bool was_running = running_.exchange(false);
    const int lfd = listen_fd_.exchange(-1);
    if (lfd >= 0) {
        ::shutdown(lfd, SHUT_RDWR);
        ::close(lfd);
    }
    if (!was_running) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard lock(fds_mutex_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : workers_)
        if (t.joinable()) t.join();
    workers_.clear();
}

void SinkServer::accept_loop() {
    while (running_.load()) {
        const int lfd = listen_fd_.load();
        if (lfd < 0) break;
        const int fd = ::accept(lfd, nullptr, nullptr);
        if (fd < 0) break; // listener closed
        std::lock_guard lock(fds_mutex_);
        open_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void SinkServer::handle_connection(int fd) {
    while (true) {
        std::uint8_t prefix[4];
        if (!read_exact(fd, prefix, 4)) break; // peer closed
        const std::uint32_t n = (static_cast<std::uint32_t>(prefix[0]) << 24) |
                                (static_cast<std::uint32_t>(prefix[1]) << 16) |
                                (static_cast<std::uint32_t>(prefix[2]) << 8) |
                                static_cast<std::uint32_t>(prefix[3]);
        if (n > kMaxFrameBytes) {
            send_frame(fd, error_ack("frame too large"));
            break;
        }
        std::vector<std::uint8_t> buf(4 + n);
        std::memcpy(buf.data(), prefix, 4);
        if (n > 0 && !read_exact(fd, buf.data() + 4, n)) break;

        CloudFrame frame;
        try {
            frame = decode_frame(buf);
        } catch (const Error& e) {
            send_frame(fd, error_ack(e.what()));
            break;
        }

        try {
            log_.persist(frame);
        } catch (const PersistError& e) {
            send_frame(fd, error_ack(e.what()));
            break;
        }

        CloudFrame ack;
        ack.event = "ack";
        ack.session = frame.session;
        ack.seq = frame.seq;
        if (!send_frame(fd, ack)) break;
        frames_acked_.fetch_add(1);
    }
    std::lock_guard lock(fds_mutex_);
    std::erase(open_fds_, fd);
    ::close(fd);
}

SinkClient::SinkClient(const std::string& host, std::uint16_t port)
    : fd_(connect_to(host, port)) {}

SinkClient::~SinkClient() { close(); }

void SinkClient::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

CloudFrame SinkClient::send(const CloudFrame& frame) {
    const auto bytes = encode_frame(frame);
    if (!write_all(fd_, bytes.data(), bytes.size()))
        throw PersistError("connection lost while sending frame");

    std::uint8_t prefix[4];
    if (!read_exact(fd_, prefix, 4))
        throw TruncatedError("connection closed before ack");
    const std::uint32_t n = (static_cast<std::uint32_t>(prefix[0]) << 24) |
                            (static_cast<std::uint32_t>(prefix[1]) << 16) |
                            (static_cast<std::uint32_t>(prefix[2]) << 8) |
                            static_cast<std::uint32_t>(prefix[3]);
    if (n > kMaxFrameBytes) throw FrameTooLargeError("oversized ack frame");
    std::vector<std::uint8_t> buf(4 + n);
    std::memcpy(buf.data(), prefix, 4);
    if (n > 0 && !read_exact(fd_, buf.data() + 4, n))
        throw TruncatedError("ack frame truncated");
    return decode_frame(buf);
}

} // namespace fogpipe::cloud
