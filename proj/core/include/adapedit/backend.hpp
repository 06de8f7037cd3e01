#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adapedit/image.hpp"
#include "adapedit/matrix.hpp"
#include "adapedit/prompt_align.hpp"
#include "adapedit/tensor.hpp"

namespace adapedit {

/// Which prompt a denoising branch follows: the original prompt or the edit.
enum class Branch : std::uint8_t { Source = 0, Edit = 1 };

const char* branch_name(Branch b) noexcept;

/// One cross-attention layer of the denoiser.
struct LayerInfo {
    std::uint16_t id = 0;
    Grid grid;
    std::uint16_t heads = 1;
    friend bool operator==(const LayerInfo&, const LayerInfo&) = default;
};

/// Cross-attention probabilities of one layer, one tokens x pixels matrix per
/// head. Each pixel's column is a distribution over the prompt tokens.
struct LayerMaps {
    std::uint16_t layer = 0;
    std::vector<Matrix> heads;
    friend bool operator==(const LayerMaps&, const LayerMaps&) = default;
};

/// Query-side features of one layer, pixels x d.
struct LayerFeatures {
    std::uint16_t layer = 0;
    Matrix features;
    friend bool operator==(const LayerFeatures&, const LayerFeatures&) = default;
};

struct StepOutput {
    Tensor noise_pred;
    std::vector<LayerMaps> maps;
    std::vector<LayerFeatures> features;
};

struct SessionParams {
    std::uint16_t steps = 50;
    float guidance = 7.5f;
    std::uint64_t seed = 0;
    std::string prompt;
    std::string edit;
    std::string null_prompt;
};

struct SessionInfo {
    std::vector<LayerInfo> layers;
    // Per-word token counts when the backend tokenizes prompts itself.
    std::optional<std::vector<std::uint16_t>> source_word_tokens;
    std::optional<std::vector<std::uint16_t>> edit_word_tokens;
};

/// Denoiser contract driven by the edit controller. A session denoises the
/// two branches from one shared initial latent; `step(t, ...)` advances one
/// branch from z_t to z_{t-1}, with t running T..1.
class DiffusionBackend {
public:
    virtual ~DiffusionBackend() = default;

    virtual Vocabulary vocabulary() const = 0;
    // Starts (or restarts) a session; replaying the same params replays the
    // same noise trajectory.
    virtual SessionInfo init(const SessionParams& params) = 0;
    // Injected maps replace the computed cross-attention of the named layers
    // before the value product.
    virtual StepOutput step(int t, Branch branch, std::span<const LayerMaps> injected) = 0;
    // Decodes the final latent of a branch; throws StateError before t = 1 ran.
    virtual Image decode(Branch branch) = 0;
    virtual void close() = 0;
};

/// Accumulated noise schedule alpha_bar(t) for t = 0..T; alpha_bar(0) = 1.
class NoiseSchedule {
public:
    // alpha_bar(t) = 1 - t / (T + 1).
    static NoiseSchedule linear(int steps);
    explicit NoiseSchedule(std::vector<double> alpha_bar);

    int steps() const noexcept { return static_cast<int>(alpha_bar_.size()) - 1; }
    double alpha_bar(int t) const;
    bool strictly_decreasing() const noexcept;

private:
    std::vector<double> alpha_bar_;
};

// z_t = sqrt(a_t) z0 + sqrt(1 - a_t) eps.
Matrix forward_noise(const Matrix& z0, int t, const Matrix& eps, const NoiseSchedule& schedule);

// Classifier-free guidance: w * eps_c + (1 - w) * eps_null.
Matrix cfg_combine(const Matrix& eps_c, const Matrix& eps_null, float w);

// Deterministic update: predict z0 from (z_t, eps), then re-noise to t - 1.
Matrix reverse_step(const Matrix& z_t, const Matrix& noise_pred, int t, const NoiseSchedule& schedule);

}  // namespace adapedit
