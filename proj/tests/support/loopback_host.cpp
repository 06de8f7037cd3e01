#include "loopback_host.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <stdexcept>

#include "adapedit/errors.hpp"
#include "adapedit/toy_backend.hpp"
#include "adapedit/transport.hpp"

namespace adapedit::testing {

LoopbackHost::LoopbackHost() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 4) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("bind/listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
}

LoopbackHost::~LoopbackHost() {
    stop_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    thread_.join();
    ::close(listen_fd_);
}

void LoopbackHost::serve() {
    while (!stop_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) return;
        ++sessions_;
        session(fd);
    }
}

void LoopbackHost::session(int fd) {
    TcpStream stream(fd);
    ToyBackend toy;
    std::vector<LayerInfo> layers;
    auto fail = [&](wire::ErrorCode code, const std::string& msg) {
        ++errors_;
        wire::send_frame(stream, wire::MsgType::Error, wire::encode(wire::ErrorReply{static_cast<std::uint16_t>(code), msg}));
    };
    try {
        for (;;) {
            wire::Frame f;
            try {
                f = wire::receive_frame(stream);
            } catch (const ProtocolError& e) {
                fail(wire::ErrorCode::MalformedFrame, e.what());
                return;
            }
            try {
                switch (f.type) {
                    case wire::MsgType::Init: {
                        const wire::InitRequest r = wire::decode_init(f.payload);
                        layers = toy.init({r.steps, r.guidance, r.seed, r.prompt, r.edit, r.null_prompt}).layers;
                        wire::send_frame(stream, wire::MsgType::InitOk, wire::encode(wire::InitOk{layers, {}, {}}));
                        break;
                    }
                    case wire::MsgType::Step: {
                        const wire::StepRequest r = wire::decode_step(f.payload);
                        bool known = true;
                        for (const auto& m : r.injected) {
                            known = known && std::any_of(layers.begin(), layers.end(),
                                                         [&](const LayerInfo& l) { return l.id == m.layer; });
                        }
                        if (!known) {
                            fail(wire::ErrorCode::UnknownLayer, "unknown layer id");
                            break;
                        }
                        const StepOutput out = toy.step(r.t, r.branch, r.injected);
                        wire::send_frame(stream, wire::MsgType::StepOut, wire::encode(out));
                        break;
                    }
                    case wire::MsgType::Decode: {
                        const wire::DecodeRequest r = wire::decode_decode(f.payload);
                        wire::send_frame(stream, wire::MsgType::Image, encode_png(toy.decode(r.branch)));
                        break;
                    }
                    case wire::MsgType::Close:
                        wire::send_frame(stream, wire::MsgType::Closed, {});
                        return;
                    default:
                        fail(wire::ErrorCode::MalformedFrame, "unexpected request type");
                        return;
                }
            } catch (const ProtocolError& e) {
                fail(wire::ErrorCode::MalformedFrame, e.what());
                return;
            } catch (const StateError& e) {
                fail(wire::ErrorCode::OutOfOrder, e.what());
            }
        }
    } catch (const BackendUnavailable&) {
        // Client hung up.
    }
}

}  // namespace adapedit::testing
