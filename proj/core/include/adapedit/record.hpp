#pragma once

#include <filesystem>
#include <vector>

#include "adapedit/backend.hpp"
#include "adapedit/prompt_align.hpp"

namespace adapedit {

/// Everything one step of a collection pass produced for both branches.
struct StepRecord {
    int t = 0;
    std::vector<LayerMaps> source_maps;
    std::vector<LayerMaps> edit_maps;
    std::vector<LayerFeatures> source_features;
    std::vector<LayerFeatures> edit_features;

    const std::vector<LayerMaps>& maps(Branch b) const { return b == Branch::Source ? source_maps : edit_maps; }
    const std::vector<LayerFeatures>& features(Branch b) const {
        return b == Branch::Source ? source_features : edit_features;
    }
    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Append-only record of a no-injection pass, steps stored in the order they
/// ran (t = T first).
class AttnRecord {
public:
    AttnRecord() = default;
    AttnRecord(int steps, std::vector<LayerInfo> layers, TokenizedPrompt source, TokenizedPrompt edit);

    void append(StepRecord step);

    int steps() const noexcept { return steps_; }
    const std::vector<LayerInfo>& layers() const noexcept { return layers_; }
    const LayerInfo& layer(std::uint16_t id) const;
    const TokenizedPrompt& source_prompt() const noexcept { return source_; }
    const TokenizedPrompt& edit_prompt() const noexcept { return edit_; }
    const std::vector<StepRecord>& entries() const noexcept { return entries_; }

    bool has(int t) const noexcept;
    const StepRecord& at(int t) const;  // throws StateError when missing
    bool complete() const noexcept { return static_cast<int>(entries_.size()) == steps_; }

    friend bool operator==(const AttnRecord&, const AttnRecord&) = default;

private:
    int steps_ = 0;
    std::vector<LayerInfo> layers_;
    TokenizedPrompt source_;
    TokenizedPrompt edit_;
    std::vector<StepRecord> entries_;
};

// Binary record file: "ADPR" magic, version byte, then prompts, layer
// catalog and per-step tensors in the wire tensor encoding. With
// `all_features` false, visual features are kept for the final step only.
std::vector<std::uint8_t> serialize_record(const AttnRecord& record, bool all_features = true);
AttnRecord deserialize_record(std::span<const std::uint8_t> bytes);

// Saves the compact form (final-step features only).
void save_record(const AttnRecord& record, const std::filesystem::path& path);
AttnRecord load_record(const std::filesystem::path& path);

}  // namespace adapedit
