#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adapedit/errors.hpp"
#include "adapedit/fwt.hpp"
#include "oracles.hpp"

using namespace adapedit;
using adapedit::testing::naive_matmul;
using adapedit::testing::random_matrix;
using adapedit::testing::random_row_stochastic;
using adapedit::testing::relative_frobenius_error;
using adapedit::testing::row_sum;

namespace {

const std::vector<LayerInfo> kLayers = {{0, {32, 32}, 1}, {1, {16, 16}, 1}};

std::vector<std::size_t> none() { return {}; }

}  // namespace

TEST(AggregateTest, SingleLayerAtTargetGridIsUnchanged) {
    std::mt19937_64 rng(20);
    const Matrix m = random_row_stochastic(rng, 5, 1024);
    const std::vector<LayerMaps> maps = {{0, {m}}};
    const AggregatedMap agg = aggregate_maps(maps, kLayers, 1);
    EXPECT_EQ(agg.map, m);
    EXPECT_EQ(agg.source_step, 1);
}

TEST(AggregateTest, TwoLayersAverageThenNormalize) {
    std::mt19937_64 rng(21);
    const Matrix m = random_matrix(rng, 3, 1024, 0.0f, 1.0f);
    const std::vector<LayerInfo> layers = {{0, {32, 32}, 1}, {5, {32, 32}, 1}};
    const std::vector<LayerMaps> maps = {{0, {m}}, {5, {scale(m, 3.0f)}}};
    const AggregatedMap agg = aggregate_maps(maps, layers, 1);
    // Mean of m and 3m is 2m; row normalization removes the factor.
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_FLOAT_EQ(agg.map.data()[i], 2.0f * m.data()[i]);
    const Matrix n = normalize_row_sums(agg.map), want = normalize_row_sums(m);
    for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(n.data()[i], want.data()[i], 1e-7);
    for (std::size_t r = 0; r < n.rows(); ++r) EXPECT_NEAR(row_sum(n, r), 1.0, 1e-5);
}

TEST(AggregateTest, SixteenGridConstantUpsamplesToConstant) {
    const std::vector<LayerMaps> maps = {{1, {Matrix(2, 256, 0.125f)}}};
    const AggregatedMap agg = aggregate_maps(maps, kLayers, 1);
    ASSERT_EQ(agg.map.cols(), 1024u);
    for (float v : agg.map.data()) EXPECT_FLOAT_EQ(v, 0.125f);
}

TEST(AggregateTest, MissingFinalStepIsAStateError) {
    AttnRecord rec(2, kLayers, tokenize("a", chunked_hash_vocabulary), tokenize("a", chunked_hash_vocabulary));
    EXPECT_THROW(aggregate_last_step(rec), StateError);
}

TEST(TextEmbedTest, OneHotSelectsAndUniformAverages) {
    const Matrix ev{{1, 2}, {3, 4}, {5, 6}};
    const Matrix e = text_embed_from_attn(Matrix{{0, 0, 1}, {0.5f, 0.5f, 0}}, ev);
    EXPECT_EQ(e(0, 0), 5.0f);
    EXPECT_EQ(e(0, 1), 6.0f);
    EXPECT_FLOAT_EQ(e(1, 0), 2.0f);
    EXPECT_FLOAT_EQ(e(1, 1), 3.0f);
}

TEST(TextEmbedTest, FullyMaskedRowFallsBackToMeanFeature) {
    const Matrix ev{{1, 2}, {3, 4}};
    const Matrix e = text_embed_from_attn(Matrix{{0, 0}}, ev);
    EXPECT_FLOAT_EQ(e(0, 0), 2.0f);
    EXPECT_FLOAT_EQ(e(0, 1), 3.0f);
}

TEST(TextEmbedTest, ShapeMismatchThrows) {
    EXPECT_THROW(text_embed_from_attn(Matrix(1, 3), Matrix(4, 2)), DimensionError);
}

TEST(TextEmbedTest, RandomMaskedMapMatchesOracleAndStaysInEnvelope) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const AggregatedMap agg{random_row_stochastic(rng, 8, 1024), 1};
        const Matrix ev = random_matrix(rng, 1024, 16);
        const Matrix w = masked_word_weights(agg, MaskThreshold());
        const Matrix e = text_embed_from_attn(w, ev);
        bool any_masked_row = false;
        for (std::size_t r = 0; r < w.rows(); ++r) any_masked_row |= row_sum(w, r) == 0.0;
        if (!any_masked_row) EXPECT_LE(relative_frobenius_error(e, naive_matmul(w, ev)), 1e-5);
        for (std::size_t d = 0; d < ev.cols(); ++d) {
            float lo = ev(0, d), hi = ev(0, d);
            for (std::size_t p = 0; p < ev.rows(); ++p) lo = std::min(lo, ev(p, d)), hi = std::max(hi, ev(p, d));
            for (std::size_t r = 0; r < e.rows(); ++r) {
                EXPECT_GE(e(r, d), lo - 1e-5f);
                EXPECT_LE(e(r, d), hi + 1e-5f);
            }
        }
    }
}

TEST(MaskedWeightsTest, SparseNormalizedMapIsUnchanged) {
    Matrix m(2, 1024);
    m(0, 3) = 0.25f, m(0, 9) = 0.75f;
    m(1, 0) = 0.5f, m(1, 1023) = 0.5f;
    EXPECT_EQ(masked_word_weights({m, 1}, MaskThreshold()), m);
}

TEST(PoolKeyTest, Examples) {
    const std::vector<std::size_t> one = {0}, two = {0, 1};
    const KeyEmbedding single = pool_key_embedding(Matrix{{3, 4}}, one);
    EXPECT_FLOAT_EQ(single.vec(0, 0), 0.6f);
    EXPECT_FLOAT_EQ(single.vec(0, 1), 0.8f);

    const KeyEmbedding same = pool_key_embedding(Matrix{{1, 1}, {1, 1}}, two);
    EXPECT_FLOAT_EQ(same.vec(0, 0), same.vec(0, 1));

    const KeyEmbedding mixed = pool_key_embedding(Matrix{{1, 0}, {0, 1}}, two);
    EXPECT_NEAR(mixed.vec(0, 0), 1.0 / std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(mixed.vec(0, 1), 1.0 / std::sqrt(2.0), 1e-6);

    EXPECT_THROW(pool_key_embedding(Matrix{{1, 0}}, none()), ContractError);
}

TEST(CorrelationTest, SelfOrthogonalAndSixtyDegrees) {
    const KeyEmbedding k{Matrix{{1, 0}}};
    const double c60 = std::cos(M_PI / 3), s60 = std::sin(M_PI / 3);
    const Matrix rows{{1, 0}, {0, 1}, {static_cast<float>(c60), static_cast<float>(s60)}, {-1, 0}};
    const auto a = correlation(rows, k);
    EXPECT_EQ(a[0], 1.0f);
    EXPECT_EQ(a[1], 0.0f);
    EXPECT_NEAR(a[2], 0.5, 1e-5);
    EXPECT_EQ(a[3], 0.0f);  // clamped
}

TEST(TemporalScalesTest, CurvePointsAgainstDirectEvaluation) {
    const std::vector<float> a = {0.0f, 0.5f, 1.0f};
    const TemporalScales s = temporal_scales(a, none(), 1.0f);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(s.tau[i], 1.0 - std::exp(a[i] - 1.0), 1e-6);
    EXPECT_NEAR(s.tau[0], 0.632121, 1e-5);
    EXPECT_NEAR(s.tau[1], 0.393469, 1e-5);
    EXPECT_EQ(s.tau[2], 0.0f);
}

TEST(TemporalScalesTest, KeyWordsAreExactlyZero) {
    const std::vector<float> a = {0.0f, 0.2f, 0.9f};
    const std::vector<std::size_t> keys = {0, 2};
    const TemporalScales s = temporal_scales(a, keys, 1.5f);
    EXPECT_EQ(s.tau[0], 0.0f);
    EXPECT_GT(s.tau[1], 0.0f);
    EXPECT_EQ(s.tau[2], 0.0f);
}

TEST(TemporalScalesTest, NegativeOrNonFiniteLambdaIsAConfigError) {
    const std::vector<float> a = {0.5f};
    EXPECT_THROW(temporal_scales(a, none(), -0.1f), ConfigError);
    EXPECT_THROW(temporal_scales(a, none(), std::nanf("")), ConfigError);
}

TEST(TemporalScalesTest, MonotoneBoundedAndLinearInLambda) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<float> a(16);
        for (float& x : a) x = u(rng);
        std::sort(a.begin(), a.end());
        const float lambda = 4.0f * u(rng);
        const TemporalScales s = temporal_scales(a, none(), lambda);
        const TemporalScales d = temporal_scales(a, none(), 2.0f * lambda);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i > 0) EXPECT_LE(s.tau[i], s.tau[i - 1]);
            EXPECT_GE(s.tau[i], 0.0f);
            EXPECT_LE(s.tau[i], lambda * (1.0 - std::exp(-1.0)) + 1e-6);
            EXPECT_EQ(d.tau[i], 2.0f * s.tau[i]);
        }
    }
}
