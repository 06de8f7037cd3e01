#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adapedit/backend.hpp"
#include "adapedit/tensor.hpp"

/// Binary protocol between the edit controller and an external diffusion
/// host. All integers and floats are little-endian.
///
///   frame   := "ADPE" | version:u8 (=1) | msg_type:u8 | payload_len:u32 | payload
///   tensor  := rank:u8 | dims:u32 x rank | float32 x prod(dims), row-major
///   string  := len:u32 | UTF-8 bytes
///   layer   := id:u16 | height:u16 | width:u16 | heads:u16
namespace adapedit::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'A', 'D', 'P', 'E'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = 1u << 28;
inline constexpr std::uint8_t kMaxTensorRank = 8;

enum class MsgType : std::uint8_t {
    Init = 0x01,
    Step = 0x02,
    Decode = 0x03,
    Close = 0x0F,
    Error = 0x7F,
    InitOk = 0x81,
    StepOut = 0x82,
    Image = 0x83,
    Closed = 0x8F,
};

enum class ErrorCode : std::uint16_t {
    MalformedFrame = 0x0001,
    UnknownLayer = 0x0002,
    AtCapacity = 0x0003,
    OutOfOrder = 0x0004,
};

bool is_known(MsgType t) noexcept;

struct Frame {
    MsgType type = MsgType::Error;
    std::vector<std::uint8_t> payload;
    friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameHeader {
    MsgType type;
    std::uint32_t payload_len;
};

class Writer {
public:
    void u8(std::uint8_t v);
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void str(std::string_view s);
    void bytes(std::span<const std::uint8_t> b);
    void tensor(const Tensor& t);
    void layer(const LayerInfo& l);

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor; every read past the end throws ProtocolError.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string str();
    Tensor tensor();
    LayerInfo layer();
    std::vector<std::uint8_t> rest();

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == bytes_.size(); }
    void expect_end() const;

private:
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_frame(MsgType type, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Validates magic, version, type and length bound.
FrameHeader decode_header(std::span<const std::uint8_t> header);

// Decodes one frame from the front of `bytes`. Returns nullopt if more bytes
// are needed; sets `consumed` on success. Throws ProtocolError when malformed.
std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed);

struct InitRequest {
    std::uint16_t steps = 50;
    float guidance = 7.5f;
    std::uint64_t seed = 0;
    std::string prompt;
    std::string edit;
    std::string null_prompt;
    friend bool operator==(const InitRequest&, const InitRequest&) = default;
};

/// INIT_OK carries the layer catalog, optionally followed by the host's
/// per-word token counts for the prompt and then the edit
/// (count:u16 | tokens:u16 x count, twice).
struct InitOk {
    std::vector<LayerInfo> layers;
    std::optional<std::vector<std::uint16_t>> source_word_tokens;
    std::optional<std::vector<std::uint16_t>> edit_word_tokens;
    friend bool operator==(const InitOk&, const InitOk&) = default;
};

/// Injected maps travel as rank-3 tensors (heads, tokens, pixels).
struct StepRequest {
    std::uint16_t t = 0;
    Branch branch = Branch::Source;
    std::vector<LayerMaps> injected;
    friend bool operator==(const StepRequest&, const StepRequest&) = default;
};

struct DecodeRequest {
    Branch branch = Branch::Source;
};

struct ErrorReply {
    std::uint16_t code = 0;
    std::string message;
    friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

std::vector<std::uint8_t> encode(const InitRequest& m);
std::vector<std::uint8_t> encode(const InitOk& m);
std::vector<std::uint8_t> encode(const StepRequest& m);
// STEP_OUT: noise tensor | map count:u16 | (layer:u16 | tensor(h,tok,pix)) x n
//           | feature count:u16 | (layer:u16 | tensor(pix,d)) x n
std::vector<std::uint8_t> encode(const StepOutput& m);
std::vector<std::uint8_t> encode(const DecodeRequest& m);
std::vector<std::uint8_t> encode(const ErrorReply& m);

InitRequest decode_init(std::span<const std::uint8_t> payload);
InitOk decode_init_ok(std::span<const std::uint8_t> payload);
StepRequest decode_step(std::span<const std::uint8_t> payload);
StepOutput decode_step_out(std::span<const std::uint8_t> payload);
DecodeRequest decode_decode(std::span<const std::uint8_t> payload);
ErrorReply decode_error(std::span<const std::uint8_t> payload);

}  // namespace adapedit::wire
