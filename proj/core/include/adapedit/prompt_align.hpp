#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adapedit {

inline constexpr std::size_t kMaxPromptTokens = 77;

/// Maps one (punctuation-stripped) word to its sub-token ids.
using Vocabulary = std::function<std::vector<std::int32_t>(std::string_view word)>;

/// Half-open range of token positions.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Token layout follows CLIP conventions: position 0 is the start token,
/// the words follow, then one end token. Start and end are not word tokens.
struct TokenizedPrompt {
    std::vector<std::string> words;       // as written, punctuation stripped
    std::vector<std::string> keys;        // lower-cased words used for comparison
    std::vector<std::int32_t> token_ids;  // includes start and end tokens
    std::vector<TokenSpan> word_spans;

    std::size_t length() const noexcept { return token_ids.size(); }
    std::size_t word_count() const noexcept { return words.size(); }
    // Word index owning a token position, or nullopt for start/end tokens.
    std::optional<std::size_t> word_at(std::size_t position) const;
    friend bool operator==(const TokenizedPrompt&, const TokenizedPrompt&) = default;
};

inline constexpr std::int32_t kStartToken = 49406;
inline constexpr std::int32_t kEndToken = 49407;

/// Deterministic stand-in for a BPE vocabulary: words are cut into chunks of
/// at most 8 characters and each chunk is hashed to an id below 49406.
std::vector<std::int32_t> chunked_hash_vocabulary(std::string_view word);

// Splits on whitespace, strips leading/trailing punctuation from each word,
// and drops words that are pure punctuation. Throws LengthError for an
// empty prompt or one that needs more than 77 positions.
TokenizedPrompt tokenize(std::string_view prompt, const Vocabulary& vocab);

// Rebuilds a prompt's token layout from per-word token counts reported by a
// backend. Token ids are unknown and left as zero.
TokenizedPrompt with_token_counts(const TokenizedPrompt& prompt, const std::vector<std::uint16_t>& counts);

struct AlignmentMap {
    // For each target word: the aligned source word, if any.
    std::vector<std::optional<std::size_t>> source_of;
    std::vector<std::size_t> key_set;        // sorted target word indices
    std::vector<std::size_t> insertions;     // target words with no source
    std::vector<std::size_t> substitutions;  // target words paired with a different source word
    std::vector<std::size_t> dropped;        // source words with no target

    bool is_key(std::size_t target_word) const;
    bool no_op() const noexcept { return key_set.empty(); }
};

/// Word-level alignment of the original prompt `c` to the edited prompt
/// `c_star`. Longest common subsequence over lower-cased words; gaps of
/// equal length between anchors are paired positionally as substitutions.
/// Ties in the LCS are broken by dropping the lexicographically larger
/// word, which keeps the result mirror-symmetric under argument swap.
AlignmentMap align(const TokenizedPrompt& c, const TokenizedPrompt& c_star);

std::vector<std::size_t> key_word_token_positions(const AlignmentMap& a, const TokenizedPrompt& c_star);

/// Token-level counterpart of the alignment: for each edited-prompt token
/// position, the source-prompt position whose map it inherits. Start/end
/// tokens map to their counterparts; sub-tokens of a paired word map
/// proportionally; inserted words map to nullopt.
std::vector<std::optional<std::size_t>> token_correspondence(const AlignmentMap& a, const TokenizedPrompt& c,
                                                             const TokenizedPrompt& c_star);

}  // namespace adapedit
