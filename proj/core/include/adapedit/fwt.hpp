#pragma once

#include <span>
#include <vector>

#include "adapedit/matrix.hpp"
#include "adapedit/prompt_align.hpp"
#include "adapedit/record.hpp"

namespace adapedit {

/// Word-level temporal guidance.
///
/// From the edit branch's cross-attention at one step, each edited-prompt
/// word gets an attention-weighted visual embedding. Words whose embedding
/// correlates weakly with the pooled key-word embedding receive a larger
/// temporal scale tau, i.e. they keep the original attention for longer.
///
///   E_c*      = normalize_rows(mask(M)) x E_V
///   E_key     = l2(mean of key-token rows of E_c*)
///   A[i]      = clamp(<l2(E_word[i]), E_key>, 0, 1)
///   tau[i]    = 0 for key words, else lambda_tau * (1 - exp(A[i] - 1))

inline constexpr Grid kAggregateGrid{32, 32};

/// Mean cross-attention over layers and heads, resampled to 32x32.
/// Values keep the attention-probability scale (token share of each pixel).
struct AggregatedMap {
    Matrix map;  // tokens x 1024
    int source_step = 0;
};

AggregatedMap aggregate_maps(std::span<const LayerMaps> maps, std::span<const LayerInfo> layers, int step,
                             Grid target = kAggregateGrid);

// Aggregates the edit branch at the final step (t = 1). Throws StateError
// when the record has no final-step maps.
AggregatedMap aggregate_last_step(const AttnRecord& record, Branch branch = Branch::Edit);

// Visual features E_V (1024 x d): mean over the layers whose grid is closest
// to 32x32, resampled to 32x32 when needed.
Matrix visual_features(std::span<const LayerFeatures> features, std::span<const LayerInfo> layers,
                       Grid target = kAggregateGrid);

// Token rows masked by alpha_m, then rescaled to sum to one.
Matrix masked_word_weights(const AggregatedMap& m, MaskThreshold alpha);

// E_c* = weights x E_V. A fully masked (all-zero) row falls back to the
// unweighted mean of E_V.
Matrix text_embed_from_attn(const Matrix& weights, const Matrix& visual_features);

// Per-word mean of the token rows in each word span.
Matrix word_embeddings(const Matrix& token_embeddings, const TokenizedPrompt& prompt);

struct KeyEmbedding {
    Matrix vec;  // 1 x d, unit norm or all zero
};

// Mean of the key-token rows, then L2-normalized. Throws ContractError when
// no key positions are given (the edit is a no-op).
KeyEmbedding pool_key_embedding(const Matrix& e_cstar, std::span<const std::size_t> key_positions);

// Cosine of each (already normalized) row with the key, clamped to [0, 1].
std::vector<float> correlation(const Matrix& normalized_rows, const KeyEmbedding& key);

struct TemporalScales {
    std::vector<float> tau;  // per edited-prompt word
    float lambda_tau = 1.0f;
};

TemporalScales temporal_scales(std::span<const float> a, std::span<const std::size_t> key_words, float lambda_tau);

struct FwtResult {
    AggregatedMap aggregated;
    Matrix visual_features;   // E_V, 1024 x d
    Matrix token_embeddings;  // E_c*, tokens x d
    KeyEmbedding key;
    std::vector<float> correlation;  // per word
    TemporalScales scales;
};

FwtResult run_fwt(const AttnRecord& record, const AlignmentMap& alignment, MaskThreshold alpha, float lambda_tau);

}  // namespace adapedit
