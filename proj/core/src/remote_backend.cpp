#include "adapedit/remote_backend.hpp"

#include "adapedit/errors.hpp"

namespace adapedit {

RemoteBackend::RemoteBackend(std::string endpoint)
    : connector_([endpoint = std::move(endpoint)]() -> std::unique_ptr<ByteStream> {
          return TcpStream::connect(endpoint);
      }) {}

RemoteBackend::RemoteBackend(Connector connector) : connector_(std::move(connector)) {}

RemoteBackend::~RemoteBackend() {
    try {
        close();
    } catch (const std::exception&) {
        // Host already gone; nothing left to release.
    }
}

Vocabulary RemoteBackend::vocabulary() const { return chunked_hash_vocabulary; }

wire::Client& RemoteBackend::client() {
    if (!client_) throw StateError("remote backend has no open session");
    return *client_;
}

SessionInfo RemoteBackend::init(const SessionParams& params) {
    close();
    client_.emplace(connector_());
    last_step_ = {0, 0};
    wire::InitRequest req{params.steps, params.guidance, params.seed, params.prompt, params.edit, params.null_prompt};
    try {
        const wire::Frame reply = client().call(wire::MsgType::Init, wire::encode(req), wire::MsgType::InitOk);
        wire::InitOk ok = wire::decode_init_ok(reply.payload);
        if (ok.layers.empty()) throw ProtocolError("host reported an empty layer catalog");
        return {std::move(ok.layers), std::move(ok.source_word_tokens), std::move(ok.edit_word_tokens)};
    } catch (...) {
        client_.reset();
        throw;
    }
}

StepOutput RemoteBackend::step(int t, Branch branch, std::span<const LayerMaps> injected) {
    if (t < 1 || t > 0xFFFF) throw ContractError("step index out of range");
    wire::StepRequest req{static_cast<std::uint16_t>(t), branch, {injected.begin(), injected.end()}};
    const wire::Frame reply = client().call(wire::MsgType::Step, wire::encode(req), wire::MsgType::StepOut, t);
    last_step_[static_cast<std::size_t>(branch)] = t;
    return wire::decode_step_out(reply.payload);
}

Image RemoteBackend::decode(Branch branch) {
    if (last_step_[static_cast<std::size_t>(branch)] != 1) {
        throw StateError(std::string("decode before the ") + branch_name(branch) + " branch finished sampling");
    }
    const wire::Frame reply =
        client().call(wire::MsgType::Decode, wire::encode(wire::DecodeRequest{branch}), wire::MsgType::Image);
    if (!is_png(reply.payload)) throw ProtocolError("IMAGE payload is not a PNG");
    last_png_ = reply.payload;
    return decode_png(last_png_);
}

void RemoteBackend::close() {
    if (!client_) return;
    std::optional<wire::Client> c = std::move(client_);
    client_.reset();
    c->call(wire::MsgType::Close, {}, wire::MsgType::Closed);
}

}  // namespace adapedit
