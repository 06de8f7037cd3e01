#include "adapedit/transport.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "adapedit/errors.hpp"

namespace adapedit {

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
        throw ConfigError("endpoint '" + endpoint + "' is not host:port");
    }
    unsigned port = 0;
    const char* first = endpoint.data() + colon + 1;
    const char* last = endpoint.data() + endpoint.size();
    auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc() || ptr != last || port == 0 || port > 65535) {
        throw ConfigError("endpoint '" + endpoint + "' has an invalid port");
    }
    return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::unique_ptr<TcpStream> TcpStream::connect(const std::string& endpoint) {
    const auto [host, port] = parse_endpoint(endpoint);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        throw BackendUnavailable("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw BackendUnavailable("cannot connect to " + endpoint + ": " + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpStream>(fd);
}

TcpStream::~TcpStream() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpStream::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw BackendUnavailable(std::string("send failed: ") + std::strerror(errno));
        done += static_cast<std::size_t>(n);
    }
}

void TcpStream::read_exact(std::span<std::uint8_t> out) {
    std::size_t done = 0;
    while (done < out.size()) {
        const ssize_t n = ::recv(fd_, out.data() + done, out.size() - done, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n == 0) throw BackendUnavailable("connection closed by host");
        if (n < 0) throw BackendUnavailable(std::string("recv failed: ") + std::strerror(errno));
        done += static_cast<std::size_t>(n);
    }
}

namespace wire {

void send_frame(ByteStream& s, MsgType type, std::span<const std::uint8_t> payload) {
    s.write_all(encode_frame(type, payload));
}

Frame receive_frame(ByteStream& s) {
    std::uint8_t header[kHeaderSize];
    s.read_exact(header);
    const FrameHeader h = decode_header(header);
    Frame f{h.type, std::vector<std::uint8_t>(h.payload_len)};
    s.read_exact(f.payload);
    return f;
}

Frame Client::call(MsgType request, std::span<const std::uint8_t> payload, MsgType expected_reply, int step) {
    send_frame(*stream_, request, payload);
    Frame reply = receive_frame(*stream_);
    if (reply.type == MsgType::Error) {
        const ErrorReply err = decode_error(reply.payload);
        throw BackendError(step, "host error " + std::to_string(err.code) + ": " + err.message);
    }
    if (reply.type != expected_reply) {
        throw ProtocolError("unexpected reply type " + std::to_string(static_cast<int>(reply.type)));
    }
    return reply;
}

}  // namespace wire
}  // namespace adapedit
