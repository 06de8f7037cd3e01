#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "adapedit/errors.hpp"
#include "adapedit/transport.hpp"

namespace adapedit::testing {

/// One recorded conversation: frames in socket order, tagged by sender.
struct Transcript {
    struct Record {
        char from;  // 'C' client, 'H' host
        std::vector<std::uint8_t> bytes;
    };
    std::vector<Record> records;
};

inline Transcript load_transcript(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open transcript " + path);
    const std::vector<std::uint8_t> raw{std::istreambuf_iterator<char>(in), {}};
    Transcript t;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        if (raw.size() - pos < 5) throw std::runtime_error("truncated transcript " + path);
        const char from = static_cast<char>(raw[pos]);
        const std::uint32_t len = raw[pos + 1] | raw[pos + 2] << 8 | raw[pos + 3] << 16 | std::uint32_t{raw[pos + 4]} << 24;
        pos += 5;
        if (raw.size() - pos < len) throw std::runtime_error("truncated transcript " + path);
        t.records.push_back({from, {raw.begin() + pos, raw.begin() + pos + len}});
        pos += len;
    }
    return t;
}

/// Plays the host side of a transcript and checks every client write
/// against the recorded client frames, byte for byte.
class ReplayStream final : public ByteStream {
public:
    struct State {
        Transcript transcript;
        std::size_t next = 0;
        std::size_t offset = 0;
        std::vector<std::string> mismatches;
        bool overrun = false;

        bool finished() const { return next == transcript.records.size(); }
    };

    explicit ReplayStream(std::shared_ptr<State> state) : s_(std::move(state)) {}

    void write_all(std::span<const std::uint8_t> bytes) override {
        if (s_->finished()) {
            s_->overrun = true;
            throw BackendUnavailable("transcript ended");
        }
        const auto& rec = s_->transcript.records[s_->next];
        if (rec.from != 'C') {
            s_->mismatches.push_back("client wrote while the host was due to reply (record " +
                                     std::to_string(s_->next) + ")");
            throw BackendUnavailable("out of turn");
        }
        if (!std::equal(bytes.begin(), bytes.end(), rec.bytes.begin(), rec.bytes.end())) {
            s_->mismatches.push_back("client frame " + std::to_string(s_->next) + " differs from the recording");
        }
        ++s_->next;
    }

    void read_exact(std::span<std::uint8_t> out) override {
        std::size_t done = 0;
        while (done < out.size()) {
            if (s_->finished() || s_->transcript.records[s_->next].from != 'H') {
                s_->overrun = true;
                throw BackendUnavailable("connection closed by host");
            }
            const auto& rec = s_->transcript.records[s_->next].bytes;
            const std::size_t n = std::min(out.size() - done, rec.size() - s_->offset);
            std::copy_n(rec.begin() + static_cast<std::ptrdiff_t>(s_->offset), n, out.begin() + done);
            done += n;
            s_->offset += n;
            if (s_->offset == rec.size()) ++s_->next, s_->offset = 0;
        }
    }

private:
    std::shared_ptr<State> s_;
};

inline std::shared_ptr<ReplayStream::State> replay_state(const std::string& path) {
    auto s = std::make_shared<ReplayStream::State>();
    s->transcript = load_transcript(path);
    return s;
}

}  // namespace adapedit::testing
