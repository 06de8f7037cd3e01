#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "adapedit/backend.hpp"

namespace adapedit {

/// Fixed-weight surrogate of a text-conditioned latent denoiser at desk
/// scale: 32x32x4 latent, width-32 token embeddings, two single-head
/// cross-attention layers at 32x32 and 16x16.
///
/// Per layer: features = 3x3 latent patches projected to width 32 plus a
/// positional term; attention = softmax(Q K^T / sqrt(32)) over tokens;
/// value mix = attention-weighted token values (4 channels). The x0
/// prediction is a fixed linear map of the summed value mixes plus a
/// latent-carry term, and the noise prediction follows from it.
class ToyModel {
public:
    static constexpr std::size_t kLatentChannels = 4;
    static constexpr std::size_t kWidth = 32;
    static constexpr Grid kLatentGrid{32, 32};
    static constexpr std::uint64_t kModelSeed = 0xADA9ED17ULL;

    explicit ToyModel(std::uint64_t model_seed = kModelSeed);

    const std::vector<LayerInfo>& layers() const noexcept { return layers_; }

    // tokens x 32. An empty id list yields the null (all-zero) context.
    Matrix context(const std::vector<std::int32_t>& token_ids) const;
    // pixels_l x 32 features of the latent (1024 x 4) at layer `l`.
    Matrix features(std::size_t l, const Matrix& latent) const;
    // tokens x pixels_l attention; each pixel's column sums to one.
    Matrix attention(std::size_t l, const Matrix& features, const Matrix& context) const;
    // tokens x 4 value rows.
    Matrix values(std::size_t l, const Matrix& context) const;
    // pixels_l x 4: every pixel mixes value rows by its attention column.
    static Matrix value_mix(const Matrix& attention, const Matrix& values);
    // 1024 x 4 x0 prediction from per-layer value mixes.
    Matrix predict_x0(const std::vector<Matrix>& mixes, const Matrix& latent, double alpha_bar) const;

    // Latent (1024 x 4) to RGB 32x32 image: 0.5 + (latent / 4) x fixed 4x3 map, clamped.
    static Image decode_rgb(const Matrix& latent);

private:
    struct LayerWeights {
        Matrix patch;    // 36 x 32
        Matrix pos;      // pixels x 32
        Matrix query;    // 32 x 32
        Matrix key;      // 32 x 32
        Matrix value;    // 32 x 4
        Matrix out;      // 4 x 4
    };

    std::uint64_t seed_;
    std::vector<LayerInfo> layers_;
    std::vector<LayerWeights> weights_;
};

/// Standard-normal matrix from a seed; identical on every platform.
Matrix gaussian_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols, double stddev = 1.0);

class ToyBackend final : public DiffusionBackend {
public:
    ToyBackend() = default;

    Vocabulary vocabulary() const override;
    SessionInfo init(const SessionParams& params) override;
    StepOutput step(int t, Branch branch, std::span<const LayerMaps> injected) override;
    Image decode(Branch branch) override;
    void close() override;

    const Matrix& latent(Branch branch) const;
    const ToyModel& model() const noexcept { return model_; }

private:
    struct BranchState {
        Matrix context;
        Matrix latent;
        int next_t = 0;
    };

    ToyModel model_;
    std::optional<NoiseSchedule> schedule_;
    float guidance_ = 7.5f;
    Matrix null_context_;
    std::array<BranchState, 2> branches_;
};

}  // namespace adapedit
