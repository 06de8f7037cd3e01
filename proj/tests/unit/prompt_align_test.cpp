#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "adapedit/errors.hpp"
#include "adapedit/prompt_align.hpp"

using namespace adapedit;

namespace {

TokenizedPrompt tok(std::string_view s) { return tokenize(s, chunked_hash_vocabulary); }

std::vector<std::size_t> v(std::initializer_list<std::size_t> xs) { return xs; }

}  // namespace

TEST(TokenizeTest, DogSittingLayout) {
    const TokenizedPrompt p = tok("a dog sitting on the grass");
    EXPECT_EQ(p.word_count(), 6u);
    EXPECT_GE(p.length(), 8u);
    EXPECT_EQ(p.token_ids.front(), kStartToken);
    EXPECT_EQ(p.token_ids.back(), kEndToken);
    EXPECT_EQ(p.word_spans[2], (TokenSpan{3, 4}));
}

TEST(TokenizeTest, EmptyPromptIsALengthError) {
    EXPECT_THROW(tok(""), LengthError);
    EXPECT_THROW(tok("   "), LengthError);
    EXPECT_THROW(tok(" , . "), LengthError);
}

TEST(TokenizeTest, CakeAndChocolateCake) {
    const TokenizedPrompt a = tok("cake");
    const TokenizedPrompt b = tok("chocolate cake");
    EXPECT_EQ(a.word_count(), 1u);
    EXPECT_EQ(b.word_count(), 2u);
    EXPECT_EQ(b.word_spans[0].size(), 2u);  // nine letters: two chunks
}

TEST(TokenizeTest, PunctuationStrippedAndKeysLowerCased) {
    const TokenizedPrompt p = tok("A Dog, \"sitting\".");
    EXPECT_EQ(p.words, (std::vector<std::string>{"A", "Dog", "sitting"}));
    EXPECT_EQ(p.keys, (std::vector<std::string>{"a", "dog", "sitting"}));
}

TEST(TokenizeTest, SpansAreDisjointOrderedAndCoverWordPositions) {
    const TokenizedPrompt p = tok("a photo of a chocolate birthday cake with candles");
    std::size_t next = 1;
    for (const auto& s : p.word_spans) {
        EXPECT_EQ(s.begin, next);
        EXPECT_GT(s.end, s.begin);
        next = s.end;
    }
    EXPECT_EQ(next, p.length() - 1);
    EXPECT_FALSE(p.word_at(0).has_value());
    EXPECT_FALSE(p.word_at(p.length() - 1).has_value());
}

TEST(TokenizeTest, SeventySevenTokenLimit) {
    std::string ok;
    for (int i = 0; i < 75; ++i) ok += "w ";
    EXPECT_EQ(tok(ok).length(), 77u);
    EXPECT_THROW(tok(ok + "w"), LengthError);
}

TEST(TokenizeTest, HostTokenCountsRebuildSpans) {
    const TokenizedPrompt p = with_token_counts(tok("a chocolate cake"), {1, 3, 1});
    EXPECT_EQ(p.length(), 7u);
    EXPECT_EQ(p.word_spans[1], (TokenSpan{2, 5}));
    EXPECT_THROW(with_token_counts(tok("a cake"), {1}), ProtocolError);
    EXPECT_THROW(with_token_counts(tok("a cake"), {1, 0}), ProtocolError);
}

TEST(AlignTest, StandingToSitting) {
    const AlignmentMap a = align(tok("a dog standing on the grass"), tok("a dog sitting on the grass"));
    EXPECT_EQ(a.key_set, v({2}));
    EXPECT_EQ(a.substitutions, v({2}));
    EXPECT_TRUE(a.insertions.empty());
    EXPECT_TRUE(a.dropped.empty());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a.source_of[i], i);
}

TEST(AlignTest, IdenticalPromptsAreANoOp) {
    const TokenizedPrompt p = tok("a cat on a mat");
    const AlignmentMap a = align(p, p);
    EXPECT_TRUE(a.no_op());
    for (std::size_t i = 0; i < p.word_count(); ++i) EXPECT_EQ(a.source_of[i], i);
}

TEST(AlignTest, CaseInsensitive) { EXPECT_TRUE(align(tok("A Cat"), tok("a cat")).no_op()); }

TEST(AlignTest, ChocolateInsertion) {
    const AlignmentMap a = align(tok("a photo of a cake"), tok("a photo of a chocolate cake"));
    EXPECT_EQ(a.key_set, v({4}));
    EXPECT_EQ(a.insertions, v({4}));
    EXPECT_EQ(a.source_of[5], 4u);
    EXPECT_FALSE(a.source_of[4].has_value());
}

TEST(AlignTest, DeletionKeepsOtherWordsMatched) {
    const AlignmentMap a = align(tok("a big red car"), tok("a red car"));
    EXPECT_TRUE(a.key_set.empty());
    EXPECT_EQ(a.dropped, v({1}));
    EXPECT_EQ(a.source_of[1], 2u);
}

TEST(KeyPositionsTest, SingleAndMultiTokenWords) {
    const TokenizedPrompt c = tok("a dog standing on the grass");
    const TokenizedPrompt cs = tok("a dog sitting on the grass");
    EXPECT_EQ(key_word_token_positions(align(c, cs), cs), v({3}));
    EXPECT_TRUE(key_word_token_positions(align(c, c), c).empty());

    const TokenizedPrompt cake = tok("a photo of a cake");
    const TokenizedPrompt choc = tok("a photo of a chocolate cake");
    EXPECT_EQ(key_word_token_positions(align(cake, choc), choc), v({5, 6}));
}

TEST(CorrespondenceTest, SpecialTokensAndInsertedWords) {
    const TokenizedPrompt cake = tok("a photo of a cake");
    const TokenizedPrompt choc = tok("a photo of a chocolate cake");
    const auto corr = token_correspondence(align(cake, choc), cake, choc);
    ASSERT_EQ(corr.size(), choc.length());
    EXPECT_EQ(corr.front(), 0u);
    EXPECT_EQ(corr.back(), cake.length() - 1);
    EXPECT_FALSE(corr[5].has_value());
    EXPECT_FALSE(corr[6].has_value());
    EXPECT_EQ(corr[7], 5u);  // "cake"
}

TEST(CorrespondenceTest, SubTokensMapProportionally) {
    const TokenizedPrompt c = with_token_counts(tok("a cat"), {1, 2});
    const TokenizedPrompt cs = with_token_counts(tok("a dog"), {1, 4});
    const auto corr = token_correspondence(align(c, cs), c, cs);
    EXPECT_EQ(corr[2], 2u);
    EXPECT_EQ(corr[3], 2u);
    EXPECT_EQ(corr[4], 3u);
    EXPECT_EQ(corr[5], 3u);
}

TEST(AlignPropertyTest, InvariantsAndSwapSymmetryOnRandomPrompts) {
    const std::vector<std::string> vocab = {"a", "dog", "cat", "on", "the", "grass", "red", "sitting"};
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> len(1, 7), word(0, vocab.size() - 1);
    auto random_prompt = [&] {
        std::string s;
        for (std::size_t i = 0, n = len(rng); i < n; ++i) s += vocab[word(rng)] + " ";
        return tok(s);
    };
    for (int trial = 0; trial < 500; ++trial) {
        const TokenizedPrompt c = random_prompt(), cs = random_prompt();
        const AlignmentMap a = align(c, cs);
        const AlignmentMap b = align(cs, c);

        // Order-preserving pairs; key set = unmatched plus changed matches.
        std::optional<std::size_t> last;
        std::vector<std::size_t> expected_keys;
        for (std::size_t t = 0; t < cs.word_count(); ++t) {
            if (const auto s = a.source_of[t]) {
                if (last) EXPECT_GT(*s, *last);
                last = s;
                if (c.keys[*s] != cs.keys[t]) expected_keys.push_back(t);
            } else {
                expected_keys.push_back(t);
            }
        }
        EXPECT_EQ(a.key_set, expected_keys);
        // Only pure deletions leave the key set empty.
        if (c.keys != cs.keys && c.word_count() <= cs.word_count()) EXPECT_FALSE(a.no_op());

        // Swapping arguments swaps insertions and deletions.
        EXPECT_EQ(a.insertions, b.dropped);
        EXPECT_EQ(a.dropped, b.insertions);
        for (std::size_t t = 0; t < cs.word_count(); ++t) {
            if (const auto s = a.source_of[t]) EXPECT_EQ(b.source_of[*s], t);
        }
    }
}
