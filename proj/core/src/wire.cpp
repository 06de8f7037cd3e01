#include "adapedit/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

#include "adapedit/errors.hpp"

namespace adapedit::wire {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> b) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
    return v;
}

Branch to_branch(std::uint8_t v) {
    if (v > 1) throw ProtocolError("branch byte " + std::to_string(v) + " is neither 0 nor 1");
    return static_cast<Branch>(v);
}

void put_maps(Writer& w, const std::vector<LayerMaps>& maps) {
    if (maps.size() > std::numeric_limits<std::uint16_t>::max()) throw ProtocolError("too many layer maps");
    w.u16(static_cast<std::uint16_t>(maps.size()));
    for (const auto& lm : maps) {
        w.u16(lm.layer);
        w.tensor(stack(lm.heads));
    }
}

std::vector<LayerMaps> get_maps(Reader& r) {
    const std::uint16_t n = r.u16();
    std::vector<LayerMaps> out;
    out.reserve(n);
    for (std::uint16_t i = 0; i < n; ++i) {
        LayerMaps lm;
        lm.layer = r.u16();
        const Tensor t = r.tensor();
        if (t.rank() != 3 && t.rank() != 2) throw ProtocolError("attention map tensor must be rank 2 or 3");
        if (t.data.empty()) throw ProtocolError("empty attention map tensor");
        lm.heads = unstack(t);
        out.push_back(std::move(lm));
    }
    return out;
}

void put_counts(Writer& w, const std::vector<std::uint16_t>& counts) {
    w.u16(static_cast<std::uint16_t>(counts.size()));
    for (auto c : counts) w.u16(c);
}

std::vector<std::uint16_t> get_counts(Reader& r) {
    std::vector<std::uint16_t> out(r.u16());
    for (auto& c : out) c = r.u16();
    return out;
}

}  // namespace

bool is_known(MsgType t) noexcept {
    switch (t) {
        case MsgType::Init:
        case MsgType::Step:
        case MsgType::Decode:
        case MsgType::Close:
        case MsgType::Error:
        case MsgType::InitOk:
        case MsgType::StepOut:
        case MsgType::Image:
        case MsgType::Closed:
            return true;
    }
    return false;
}

void Writer::u8(std::uint8_t v) { buf_.push_back(v); }
void Writer::u16(std::uint16_t v) { put_le(buf_, v); }
void Writer::u32(std::uint32_t v) { put_le(buf_, v); }
void Writer::u64(std::uint64_t v) { put_le(buf_, v); }
void Writer::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }

void Writer::str(std::string_view s) {
    if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw ProtocolError("string too long");
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void Writer::bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

void Writer::tensor(const Tensor& t) {
    if (t.rank() > kMaxTensorRank) throw ProtocolError("tensor rank " + std::to_string(t.rank()) + " exceeds 8");
    if (t.data.size() != t.element_count()) throw DimensionError("tensor data does not match its dims");
    u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.dims) u32(d);
    buf_.reserve(buf_.size() + 4 * t.data.size());
    for (float v : t.data) f32(v);
}

void Writer::layer(const LayerInfo& l) {
    u16(l.id);
    u16(static_cast<std::uint16_t>(l.grid.height));
    u16(static_cast<std::uint16_t>(l.grid.width));
    u16(l.heads);
}

std::span<const std::uint8_t> Reader::take(std::size_t n) {
    if (n > remaining()) {
        throw ProtocolError("truncated payload: need " + std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()));
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }
std::uint16_t Reader::u16() { return get_le<std::uint16_t>(take(2)); }
std::uint32_t Reader::u32() { return get_le<std::uint32_t>(take(4)); }
std::uint64_t Reader::u64() { return get_le<std::uint64_t>(take(8)); }
float Reader::f32() { return std::bit_cast<float>(get_le<std::uint32_t>(take(4))); }

std::string Reader::str() {
    const std::uint32_t n = u32();
    const auto b = take(n);
    return {b.begin(), b.end()};
}

Tensor Reader::tensor() {
    Tensor t;
    const std::uint8_t rank = u8();
    if (rank > kMaxTensorRank) throw ProtocolError("tensor rank " + std::to_string(rank) + " exceeds 8");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = u32();
    std::uint64_t count = std::find(t.dims.begin(), t.dims.end(), 0u) == t.dims.end() ? 1 : 0;
    for (auto d : t.dims) {
        if (count == 0) break;
        count *= d;
        if (count > remaining() / 4) throw ProtocolError("tensor larger than its payload");
    }
    const auto raw = take(count * 4);
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(raw.subspan(4 * i, 4)));
    return t;
}

LayerInfo Reader::layer() {
    LayerInfo l;
    l.id = u16();
    l.grid.height = u16();
    l.grid.width = u16();
    l.heads = u16();
    return l;
}

std::vector<std::uint8_t> Reader::rest() {
    const auto b = take(remaining());
    return {b.begin(), b.end()};
}

void Reader::expect_end() const {
    if (!at_end()) throw ProtocolError(std::to_string(remaining()) + " trailing bytes in payload");
}

std::vector<std::uint8_t> encode_frame(MsgType type, std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayload) throw ProtocolError("payload exceeds the frame size limit");
    std::vector<std::uint8_t> out(kHeaderSize + payload.size());
    std::copy(kMagic.begin(), kMagic.end(), out.begin());
    out[4] = kVersion;
    out[5] = static_cast<std::uint8_t>(type);
    const auto len = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) out[6 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    std::copy(payload.begin(), payload.end(), out.begin() + kHeaderSize);
    return out;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) { return encode_frame(frame.type, frame.payload); }

FrameHeader decode_header(std::span<const std::uint8_t> header) {
    if (header.size() < kHeaderSize) throw ProtocolError("frame header truncated");
    if (!std::equal(kMagic.begin(), kMagic.end(), header.begin())) throw ProtocolError("bad frame magic");
    if (header[4] != kVersion) throw ProtocolError("unsupported protocol version " + std::to_string(header[4]));
    const auto type = static_cast<MsgType>(header[5]);
    if (!is_known(type)) throw ProtocolError("unknown message type " + std::to_string(header[5]));
    const auto len = get_le<std::uint32_t>(header.subspan(6, 4));
    if (len > kMaxPayload) throw ProtocolError("payload length " + std::to_string(len) + " exceeds limit");
    return {type, len};
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
    if (bytes.size() < kHeaderSize) return std::nullopt;
    const FrameHeader h = decode_header(bytes.first(kHeaderSize));
    if (bytes.size() - kHeaderSize < h.payload_len) return std::nullopt;
    Frame f{h.type, {bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + h.payload_len}};
    consumed = kHeaderSize + h.payload_len;
    return f;
}

std::vector<std::uint8_t> encode(const InitRequest& m) {
    Writer w;
    w.u16(m.steps);
    w.f32(m.guidance);
    w.u64(m.seed);
    w.str(m.prompt);
    w.str(m.edit);
    w.str(m.null_prompt);
    return w.take();
}

std::vector<std::uint8_t> encode(const InitOk& m) {
    Writer w;
    w.u16(static_cast<std::uint16_t>(m.layers.size()));
    for (const auto& l : m.layers) w.layer(l);
    if (m.source_word_tokens.has_value() != m.edit_word_tokens.has_value()) {
        throw ProtocolError("INIT_OK token counts must be given for both prompts or neither");
    }
    if (m.source_word_tokens) {
        put_counts(w, *m.source_word_tokens);
        put_counts(w, *m.edit_word_tokens);
    }
    return w.take();
}

std::vector<std::uint8_t> encode(const StepRequest& m) {
    Writer w;
    w.u16(m.t);
    w.u8(static_cast<std::uint8_t>(m.branch));
    put_maps(w, m.injected);
    return w.take();
}

std::vector<std::uint8_t> encode(const StepOutput& m) {
    Writer w;
    w.tensor(m.noise_pred);
    put_maps(w, m.maps);
    w.u16(static_cast<std::uint16_t>(m.features.size()));
    for (const auto& f : m.features) {
        w.u16(f.layer);
        w.tensor(to_tensor(f.features));
    }
    return w.take();
}

std::vector<std::uint8_t> encode(const DecodeRequest& m) { return {static_cast<std::uint8_t>(m.branch)}; }

std::vector<std::uint8_t> encode(const ErrorReply& m) {
    Writer w;
    w.u16(m.code);
    w.bytes({reinterpret_cast<const std::uint8_t*>(m.message.data()), m.message.size()});
    return w.take();
}

InitRequest decode_init(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    InitRequest m;
    m.steps = r.u16();
    m.guidance = r.f32();
    m.seed = r.u64();
    m.prompt = r.str();
    m.edit = r.str();
    m.null_prompt = r.str();
    r.expect_end();
    return m;
}

InitOk decode_init_ok(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    InitOk m;
    const std::uint16_t n = r.u16();
    for (std::uint16_t i = 0; i < n; ++i) m.layers.push_back(r.layer());
    if (!r.at_end()) {
        m.source_word_tokens = get_counts(r);
        m.edit_word_tokens = get_counts(r);
    }
    r.expect_end();
    return m;
}

StepRequest decode_step(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    StepRequest m;
    m.t = r.u16();
    m.branch = to_branch(r.u8());
    m.injected = get_maps(r);
    r.expect_end();
    return m;
}

StepOutput decode_step_out(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    StepOutput m;
    m.noise_pred = r.tensor();
    m.maps = get_maps(r);
    const std::uint16_t nf = r.u16();
    for (std::uint16_t i = 0; i < nf; ++i) {
        LayerFeatures f;
        f.layer = r.u16();
        const Tensor t = r.tensor();
        if (t.rank() != 2) throw ProtocolError("feature tensor must be rank 2");
        f.features = to_matrix(t);
        m.features.push_back(std::move(f));
    }
    r.expect_end();
    return m;
}

DecodeRequest decode_decode(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    DecodeRequest m{to_branch(r.u8())};
    r.expect_end();
    return m;
}

ErrorReply decode_error(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    ErrorReply m;
    m.code = r.u16();
    const auto msg = r.rest();
    m.message.assign(msg.begin(), msg.end());
    return m;
}

}  // namespace adapedit::wire
