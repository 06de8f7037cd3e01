#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adapedit/wire.hpp"

namespace adapedit {

/// Blocking, ordered byte stream.
class ByteStream {
public:
    virtual ~ByteStream() = default;
    virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
    virtual void read_exact(std::span<std::uint8_t> out) = 0;
};

class TcpStream final : public ByteStream {
public:
    // "host:port"; throws BackendUnavailable when the connection fails.
    static std::unique_ptr<TcpStream> connect(const std::string& endpoint);
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream() override;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    void write_all(std::span<const std::uint8_t> bytes) override;
    void read_exact(std::span<std::uint8_t> out) override;

private:
    int fd_ = -1;
};

/// Splits "host:port"; throws ConfigError when malformed.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

namespace wire {

void send_frame(ByteStream& s, MsgType type, std::span<const std::uint8_t> payload);
Frame receive_frame(ByteStream& s);

/// Strict request/response client. ERR replies are raised as BackendError
/// carrying the host's code and message.
class Client {
public:
    explicit Client(std::unique_ptr<ByteStream> stream) : stream_(std::move(stream)) {}

    Frame call(MsgType request, std::span<const std::uint8_t> payload, MsgType expected_reply, int step = 0);

private:
    std::unique_ptr<ByteStream> stream_;
};

}  // namespace wire
}  // namespace adapedit
