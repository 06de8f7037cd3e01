#include "adapedit/record.hpp"

#include <algorithm>

#include "adapedit/errors.hpp"
#include "adapedit/image.hpp"
#include "adapedit/wire.hpp"

namespace adapedit {

namespace {

constexpr std::uint8_t kRecordMagic[4] = {'A', 'D', 'P', 'R'};
constexpr std::uint8_t kRecordVersion = 1;

void put_prompt(wire::Writer& w, const TokenizedPrompt& p) {
    w.u16(static_cast<std::uint16_t>(p.words.size()));
    for (std::size_t i = 0; i < p.words.size(); ++i) {
        w.str(p.words[i]);
        w.str(p.keys[i]);
        w.u16(static_cast<std::uint16_t>(p.word_spans[i].begin));
        w.u16(static_cast<std::uint16_t>(p.word_spans[i].end));
    }
    w.u16(static_cast<std::uint16_t>(p.token_ids.size()));
    for (auto id : p.token_ids) w.u32(static_cast<std::uint32_t>(id));
}

TokenizedPrompt get_prompt(wire::Reader& r) {
    TokenizedPrompt p;
    const std::uint16_t n = r.u16();
    for (std::uint16_t i = 0; i < n; ++i) {
        p.words.push_back(r.str());
        p.keys.push_back(r.str());
        const std::size_t b = r.u16();
        const std::size_t e = r.u16();
        p.word_spans.push_back({b, e});
    }
    p.token_ids.resize(r.u16());
    for (auto& id : p.token_ids) id = static_cast<std::int32_t>(r.u32());
    return p;
}

void put_maps(wire::Writer& w, const std::vector<LayerMaps>& maps) {
    w.u16(static_cast<std::uint16_t>(maps.size()));
    for (const auto& lm : maps) {
        w.u16(lm.layer);
        w.tensor(stack(lm.heads));
    }
}

std::vector<LayerMaps> get_maps(wire::Reader& r) {
    std::vector<LayerMaps> out(r.u16());
    for (auto& lm : out) {
        lm.layer = r.u16();
        lm.heads = unstack(r.tensor());
    }
    return out;
}

void put_features(wire::Writer& w, const std::vector<LayerFeatures>& fs) {
    w.u16(static_cast<std::uint16_t>(fs.size()));
    for (const auto& f : fs) {
        w.u16(f.layer);
        w.tensor(to_tensor(f.features));
    }
}

std::vector<LayerFeatures> get_features(wire::Reader& r) {
    std::vector<LayerFeatures> out(r.u16());
    for (auto& f : out) {
        f.layer = r.u16();
        f.features = to_matrix(r.tensor());
    }
    return out;
}

}  // namespace

AttnRecord::AttnRecord(int steps, std::vector<LayerInfo> layers, TokenizedPrompt source, TokenizedPrompt edit)
    : steps_(steps), layers_(std::move(layers)), source_(std::move(source)), edit_(std::move(edit)) {}

void AttnRecord::append(StepRecord step) {
    const int expected = steps_ - static_cast<int>(entries_.size());
    if (step.t != expected) {
        throw StateError("attention record expected step " + std::to_string(expected) + ", got " +
                         std::to_string(step.t));
    }
    entries_.push_back(std::move(step));
}

const LayerInfo& AttnRecord::layer(std::uint16_t id) const {
    for (const auto& l : layers_)
        if (l.id == id) return l;
    throw DimensionError("unknown layer id " + std::to_string(id));
}

bool AttnRecord::has(int t) const noexcept {
    const int idx = steps_ - t;
    return t >= 1 && idx >= 0 && idx < static_cast<int>(entries_.size());
}

const StepRecord& AttnRecord::at(int t) const {
    if (!has(t)) throw StateError("attention record has no entry for step " + std::to_string(t));
    return entries_[static_cast<std::size_t>(steps_ - t)];
}

std::vector<std::uint8_t> serialize_record(const AttnRecord& record, bool all_features) {
    wire::Writer w;
    w.bytes(kRecordMagic);
    w.u8(kRecordVersion);
    w.u32(static_cast<std::uint32_t>(record.steps()));
    w.u16(static_cast<std::uint16_t>(record.layers().size()));
    for (const auto& l : record.layers()) w.layer(l);
    put_prompt(w, record.source_prompt());
    put_prompt(w, record.edit_prompt());
    w.u32(static_cast<std::uint32_t>(record.entries().size()));
    for (const auto& e : record.entries()) {
        w.u16(static_cast<std::uint16_t>(e.t));
        put_maps(w, e.source_maps);
        put_maps(w, e.edit_maps);
        const bool keep = all_features || e.t == 1;
        put_features(w, keep ? e.source_features : std::vector<LayerFeatures>{});
        put_features(w, keep ? e.edit_features : std::vector<LayerFeatures>{});
    }
    return w.take();
}

AttnRecord deserialize_record(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 5 || !std::equal(std::begin(kRecordMagic), std::end(kRecordMagic), bytes.begin())) {
        throw ProtocolError("not an attention record file");
    }
    if (bytes[4] != kRecordVersion) throw ProtocolError("unsupported attention record version");
    wire::Reader r(bytes.subspan(5));
    const int steps = static_cast<int>(r.u32());
    std::vector<LayerInfo> layers(r.u16());
    for (auto& l : layers) l = r.layer();
    TokenizedPrompt source = get_prompt(r);
    TokenizedPrompt edit = get_prompt(r);
    AttnRecord rec(steps, std::move(layers), std::move(source), std::move(edit));
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        StepRecord s;
        s.t = r.u16();
        s.source_maps = get_maps(r);
        s.edit_maps = get_maps(r);
        s.source_features = get_features(r);
        s.edit_features = get_features(r);
        rec.append(std::move(s));
    }
    r.expect_end();
    return rec;
}

void save_record(const AttnRecord& record, const std::filesystem::path& path) {
    write_file(path, serialize_record(record, false));
}

AttnRecord load_record(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw StateError("no attention record at " + path.string());
    return deserialize_record(read_file(path));
}

}  // namespace adapedit
