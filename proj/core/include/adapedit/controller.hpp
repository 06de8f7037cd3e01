#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adapedit/backend.hpp"
#include "adapedit/config.hpp"
#include "adapedit/dps.hpp"
#include "adapedit/fwt.hpp"
#include "adapedit/record.hpp"

namespace adapedit {

enum class Gate : std::uint8_t { Preserve, Blend };

/// Per-word injection gate over the denoising steps. Word i blends while
/// t > k_i and keeps the original map once t <= k_i, with k_i = round(tau_i T).
/// Key words have tau = 0 and blend at every step.
class GateSchedule {
public:
    GateSchedule() = default;
    GateSchedule(std::vector<int> thresholds, int steps);

    Gate at(std::size_t word, int t) const;
    int threshold(std::size_t word) const { return thresholds_.at(word); }
    int preserve_steps(std::size_t word) const;
    int total_preserve_steps() const;
    std::size_t word_count() const noexcept { return thresholds_.size(); }
    int steps() const noexcept { return steps_; }

private:
    std::vector<int> thresholds_;
    int steps_ = 0;
};

GateSchedule build_schedule(const TemporalScales& scales, int steps);

/// Output of the no-injection pass: the original image and the record of
/// both branches.
struct CollectResult {
    Image x;
    Image x_star_unguided;  // edit branch without any injection
    AttnRecord record;
};

// Tokenizes both prompts with the backend's vocabulary, starts a session and
// runs both branches for t = T..1 without injection.
CollectResult collect_pass(const EditConfig& cfg, DiffusionBackend& backend);

// Called once per injected layer with the map sent to the backend and the
// original-prompt map it replaces, projected onto the edited token rows.
using InjectionObserver = std::function<void(int t, const LayerMaps& injected, const LayerMaps& projected_source)>;

struct EditResult {
    Image x;
    Image x_star;
    AttnRecord record;
    AlignmentMap alignment;
    std::optional<FwtResult> fwt;  // empty when the edit is a no-op
    std::optional<SpatialScales> spatial;
    GateSchedule schedule;
    double map_divergence = 0.0;  // sum of ||injected - original|| over steps, layers, heads
    bool no_op = false;
    std::vector<std::string> warnings;
};

// Full edit: collection pass, temporal and spatial scales, then a second pass
// where the edit branch runs with injected maps.
EditResult run_edit(const EditConfig& cfg, DiffusionBackend& backend, const InjectionObserver& observer = {});

// Same as run_edit, reusing an earlier collection pass for the same prompts,
// seed, steps and guidance.
EditResult run_edit(const EditConfig& cfg, DiffusionBackend& backend, const CollectResult& pass1,
                    const InjectionObserver& observer = {});

// Rows of a source-prompt map rearranged onto the edited prompt's token rows.
// Rows without a counterpart (inserted words) come from `fallback`.
Matrix project_source_map(const Matrix& source, const Matrix& fallback,
                          const std::vector<std::optional<std::size_t>>& correspondence);

// "toy" or "remote:<host:port>".
std::unique_ptr<DiffusionBackend> make_backend(const EditConfig& cfg);

}  // namespace adapedit
