#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fogpipe/cloud.hpp"

namespace fogpipe::cloud {

// TCP listener speaking the framed protocol: every decoded frame is persisted
// to the log and acknowledged with an ack frame echoing its seq. A malformed
// frame gets an error ack and the connection is closed; the log is untouched.
// Connections are handled concurrently; the log serializes the writes.
class SinkServer {
public:
    // Binds and listens immediately; port 0 picks an ephemeral port.
    // Throws StartupError when the endpoint cannot be bound.
    SinkServer(const std::string& host, std::uint16_t port, LongTermLog& log);
    ~SinkServer();

    SinkServer(const SinkServer&) = delete;
    SinkServer& operator=(const SinkServer&) = delete;

    void start();
    void stop();

    std::uint16_t port() const { return port_; }
    std::uint64_t frames_acked() const { return frames_acked_.load(); }

private:
    void accept_loop();
    void handle_connection(int fd);

    LongTermLog& log_;
    std::atomic<int> listen_fd_{-1};
    std::uint16_t port_ = 0;
    std::thread accept_thread_;
    std::vector<std::thread> workers_;
    std::vector<int> open_fds_;
    std::mutex fds_mutex_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> frames_acked_{0};
};

// Blocking client for the same protocol: send() writes one frame and waits
// for the ack frame.
class SinkClient {
public:
    SinkClient(const std::string& host, std::uint16_t port); // StartupError on failure
    ~SinkClient();

    SinkClient(const SinkClient&) = delete;
    SinkClient& operator=(const SinkClient&) = delete;

    CloudFrame send(const CloudFrame& frame);
    void close();

private:
    int fd_ = -1;
};

} // namespace fogpipe::cloud
