#include "adapedit/fwt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "adapedit/errors.hpp"

namespace adapedit {

namespace {

const LayerInfo& find_layer(std::span<const LayerInfo> layers, std::uint16_t id) {
    for (const auto& l : layers)
        if (l.id == id) return l;
    throw DimensionError("no layer with id " + std::to_string(id) + " in the catalog");
}

}  // namespace

AggregatedMap aggregate_maps(std::span<const LayerMaps> maps, std::span<const LayerInfo> layers, int step, Grid target) {
    if (maps.empty()) throw StateError("no attention maps to aggregate at step " + std::to_string(step));
    Matrix sum;
    std::size_t count = 0;
    for (const auto& lm : maps) {
        const LayerInfo& info = find_layer(layers, lm.layer);
        for (const auto& head : lm.heads) {
            const Matrix m = resample_bilinear(head, info.grid, target);
            if (count == 0) {
                sum = Matrix(m.rows(), m.cols());
            } else if (!m.same_shape(sum)) {
                throw DimensionError("layers disagree on the token count");
            }
            auto sd = sum.data();
            const auto md = m.data();
            for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += md[i];
            ++count;
        }
    }
    return {scale(sum, 1.0f / static_cast<float>(count)), step};
}

AggregatedMap aggregate_last_step(const AttnRecord& record, Branch branch) {
    if (!record.has(1)) throw StateError("attention record has no maps for the final step");
    return aggregate_maps(record.at(1).maps(branch), record.layers(), 1);
}

Matrix visual_features(std::span<const LayerFeatures> features, std::span<const LayerInfo> layers, Grid target) {
    if (features.empty()) throw StateError("no visual features recorded");
    long best = std::numeric_limits<long>::max();
    for (const auto& f : features) {
        const long d = std::labs(static_cast<long>(find_layer(layers, f.layer).grid.pixels()) -
                                 static_cast<long>(target.pixels()));
        best = std::min(best, d);
    }
    Matrix sum;
    std::size_t count = 0;
    for (const auto& f : features) {
        const LayerInfo& info = find_layer(layers, f.layer);
        if (std::labs(static_cast<long>(info.grid.pixels()) - static_cast<long>(target.pixels())) != best) continue;
        if (f.features.rows() != info.grid.pixels()) throw DimensionError("feature rows do not match the layer grid");
        Matrix m = info.grid == target ? f.features
                                       : resample_bilinear(f.features.transposed(), info.grid, target).transposed();
        if (count == 0) {
            sum = std::move(m);
        } else {
            if (!m.same_shape(sum)) throw DimensionError("feature widths differ between layers");
            auto sd = sum.data();
            const auto md = m.data();
            for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += md[i];
        }
        ++count;
    }
    return count == 1 ? sum : scale(sum, 1.0f / static_cast<float>(count));
}

Matrix masked_word_weights(const AggregatedMap& m, MaskThreshold alpha) {
    return normalize_row_sums(mask_below(m.map, alpha));
}

Matrix text_embed_from_attn(const Matrix& weights, const Matrix& visual_features) {
    if (weights.cols() != visual_features.rows()) {
        throw DimensionError("text_embed_from_attn: map has " + std::to_string(weights.cols()) + " pixels, features " +
                             std::to_string(visual_features.rows()));
    }
    Matrix e = matmul(weights, visual_features);
    Matrix fallback;
    for (std::size_t r = 0; r < weights.rows(); ++r) {
        const auto w = weights.row(r);
        bool all_zero = true;
        for (float v : w) all_zero = all_zero && v == 0.0f;
        if (!all_zero) continue;
        if (fallback.empty()) fallback = mean_of_all_rows(visual_features);
        std::copy(fallback.data().begin(), fallback.data().end(), e.row(r).begin());
    }
    return e;
}

Matrix word_embeddings(const Matrix& token_embeddings, const TokenizedPrompt& prompt) {
    Matrix out(prompt.word_count(), token_embeddings.cols());
    std::vector<std::size_t> rows;
    for (std::size_t w = 0; w < prompt.word_count(); ++w) {
        const TokenSpan s = prompt.word_spans[w];
        if (s.end > token_embeddings.rows()) throw DimensionError("word span beyond the embedding rows");
        rows.clear();
        for (std::size_t p = s.begin; p < s.end; ++p) rows.push_back(p);
        const Matrix mean = mean_rows(token_embeddings, rows);
        std::copy(mean.data().begin(), mean.data().end(), out.row(w).begin());
    }
    return out;
}

KeyEmbedding pool_key_embedding(const Matrix& e_cstar, std::span<const std::size_t> key_positions) {
    if (key_positions.empty()) throw ContractError("no key words: the edit is a no-op");
    return {l2_normalize_rows(mean_rows(e_cstar, key_positions))};
}

std::vector<float> correlation(const Matrix& normalized_rows, const KeyEmbedding& key) {
    const Matrix dots = matmul_transposed(normalized_rows, key.vec);
    std::vector<float> a(dots.rows());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(dots(i, 0), 0.0f, 1.0f);
    return a;
}

TemporalScales temporal_scales(std::span<const float> a, std::span<const std::size_t> key_words, float lambda_tau) {
    if (!(lambda_tau >= 0.0f) || !std::isfinite(lambda_tau)) {
        throw ConfigError("lambda_tau must be a finite non-negative number");
    }
    TemporalScales s{std::vector<float>(a.size()), lambda_tau};
    for (std::size_t i = 0; i < a.size(); ++i) {
        s.tau[i] = static_cast<float>(lambda_tau * (1.0 - std::exp(static_cast<double>(a[i]) - 1.0)));
    }
    for (std::size_t k : key_words) {
        if (k >= s.tau.size()) throw DimensionError("key word index out of range");
        s.tau[k] = 0.0f;
    }
    return s;
}

FwtResult run_fwt(const AttnRecord& record, const AlignmentMap& alignment, MaskThreshold alpha, float lambda_tau) {
    const TokenizedPrompt& edit = record.edit_prompt();
    FwtResult r;
    r.aggregated = aggregate_last_step(record, Branch::Edit);
    if (r.aggregated.map.rows() < edit.length()) {
        throw DimensionError("attention maps have fewer token rows than the edited prompt");
    }
    r.visual_features = visual_features(record.at(1).features(Branch::Edit), record.layers());
    r.token_embeddings = text_embed_from_attn(masked_word_weights(r.aggregated, alpha), r.visual_features);
    const auto key_positions = key_word_token_positions(alignment, edit);
    r.key = pool_key_embedding(r.token_embeddings, key_positions);
    r.correlation = correlation(l2_normalize_rows(word_embeddings(r.token_embeddings, edit)), r.key);
    r.scales = temporal_scales(r.correlation, alignment.key_set, lambda_tau);
    return r;
}

}  // namespace adapedit
