#include "adapedit/prompt_align.hpp"

#include <algorithm>
#include <cctype>

#include "adapedit/errors.hpp"

namespace adapedit {

namespace {

bool is_word_char(unsigned char ch) {
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept.
    return std::isalnum(ch) || ch >= 0x80;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::optional<std::size_t> TokenizedPrompt::word_at(std::size_t position) const {
    for (std::size_t w = 0; w < word_spans.size(); ++w) {
        if (position >= word_spans[w].begin && position < word_spans[w].end) return w;
    }
    return std::nullopt;
}

std::vector<std::int32_t> chunked_hash_vocabulary(std::string_view word) {
    constexpr std::size_t kChunk = 8;
    const std::string key = lower(word);
    std::vector<std::int32_t> ids;
    for (std::size_t pos = 0; pos < key.size(); pos += kChunk) {
        const auto piece = std::string_view(key).substr(pos, kChunk);
        // Continuation pieces hash differently from word-initial ones.
        const std::uint64_t h = fnv1a(piece) ^ (pos == 0 ? 0 : 0x9e3779b97f4a7c15ULL);
        ids.push_back(static_cast<std::int32_t>(h % static_cast<std::uint64_t>(kStartToken)));
    }
    return ids;
}

TokenizedPrompt tokenize(std::string_view prompt, const Vocabulary& vocab) {
    TokenizedPrompt out;
    std::size_t i = 0;
    while (i < prompt.size()) {
        while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
        std::size_t j = i;
        while (j < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[j]))) ++j;
        std::string_view raw = prompt.substr(i, j - i);
        std::size_t b = 0, e = raw.size();
        while (b < e && !is_word_char(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && !is_word_char(static_cast<unsigned char>(raw[e - 1]))) --e;
        if (e > b) {
            out.words.emplace_back(raw.substr(b, e - b));
            out.keys.push_back(lower(out.words.back()));
        }
        i = j;
    }
    if (out.words.empty()) throw LengthError("prompt is empty");

    out.token_ids.push_back(kStartToken);
    for (const auto& w : out.words) {
        auto ids = vocab(w);
        if (ids.empty()) throw LengthError("vocabulary produced no tokens for word '" + w + "'");
        const std::size_t begin = out.token_ids.size();
        out.token_ids.insert(out.token_ids.end(), ids.begin(), ids.end());
        out.word_spans.push_back({begin, out.token_ids.size()});
    }
    out.token_ids.push_back(kEndToken);
    if (out.token_ids.size() > kMaxPromptTokens) {
        throw LengthError("prompt needs " + std::to_string(out.token_ids.size()) + " tokens; limit is " +
                          std::to_string(kMaxPromptTokens));
    }
    return out;
}

TokenizedPrompt with_token_counts(const TokenizedPrompt& prompt, const std::vector<std::uint16_t>& counts) {
    if (counts.size() != prompt.word_count()) {
        throw ProtocolError("host reported " + std::to_string(counts.size()) + " words, expected " +
                            std::to_string(prompt.word_count()));
    }
    TokenizedPrompt out;
    out.words = prompt.words;
    out.keys = prompt.keys;
    out.token_ids.push_back(kStartToken);
    for (std::uint16_t n : counts) {
        if (n == 0) throw ProtocolError("host reported a word with zero tokens");
        const std::size_t begin = out.token_ids.size();
        out.token_ids.insert(out.token_ids.end(), n, 0);
        out.word_spans.push_back({begin, out.token_ids.size()});
    }
    out.token_ids.push_back(kEndToken);
    if (out.token_ids.size() > kMaxPromptTokens) throw LengthError("host token layout exceeds 77 positions");
    return out;
}

bool AlignmentMap::is_key(std::size_t target_word) const {
    return std::binary_search(key_set.begin(), key_set.end(), target_word);
}

AlignmentMap align(const TokenizedPrompt& c, const TokenizedPrompt& c_star) {
    const auto& src = c.keys;
    const auto& tgt = c_star.keys;
    const std::size_t n = src.size(), m = tgt.size();

    std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            lcs[i][j] = src[i - 1] == tgt[j - 1] ? lcs[i - 1][j - 1] + 1 : std::max(lcs[i - 1][j], lcs[i][j - 1]);

    // Anchors as (source, target) pairs in increasing order.
    std::vector<std::pair<std::size_t, std::size_t>> anchors;
    for (std::size_t i = n, j = m; i > 0 && j > 0;) {
        if (src[i - 1] == tgt[j - 1]) {
            anchors.emplace_back(i - 1, j - 1);
            --i, --j;
        } else if (lcs[i - 1][j] > lcs[i][j - 1]) {
            --i;
        } else if (lcs[i - 1][j] < lcs[i][j - 1]) {
            --j;
        } else if (src[i - 1] > tgt[j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(anchors.begin(), anchors.end());

    AlignmentMap a;
    a.source_of.assign(m, std::nullopt);
    std::size_t ps = 0, ts = 0;
    auto close_gap = [&](std::size_t pe, std::size_t te) {
        if (pe - ps == te - ts) {
            for (std::size_t k = 0; k < pe - ps; ++k) {
                a.source_of[ts + k] = ps + k;
                if (src[ps + k] != tgt[ts + k]) a.substitutions.push_back(ts + k);
            }
        } else {
            for (std::size_t t = ts; t < te; ++t) a.insertions.push_back(t);
            for (std::size_t s = ps; s < pe; ++s) a.dropped.push_back(s);
        }
    };
    for (const auto& [s, t] : anchors) {
        close_gap(s, t);
        a.source_of[t] = s;
        ps = s + 1;
        ts = t + 1;
    }
    close_gap(n, m);

    a.key_set = a.insertions;
    a.key_set.insert(a.key_set.end(), a.substitutions.begin(), a.substitutions.end());
    std::sort(a.key_set.begin(), a.key_set.end());
    return a;
}

std::vector<std::size_t> key_word_token_positions(const AlignmentMap& a, const TokenizedPrompt& c_star) {
    std::vector<std::size_t> positions;
    for (std::size_t w : a.key_set) {
        if (w >= c_star.word_spans.size()) throw DimensionError("key word index outside the edited prompt");
        const TokenSpan span = c_star.word_spans[w];
        for (std::size_t p = span.begin; p < span.end; ++p) positions.push_back(p);
    }
    return positions;
}

std::vector<std::optional<std::size_t>> token_correspondence(const AlignmentMap& a, const TokenizedPrompt& c,
                                                             const TokenizedPrompt& c_star) {
    std::vector<std::optional<std::size_t>> out(c_star.length());
    if (out.empty()) return out;
    out.front() = 0;
    out.back() = c.length() - 1;
    for (std::size_t w = 0; w < c_star.word_count(); ++w) {
        const auto src_word = a.source_of[w];
        if (!src_word) continue;
        const TokenSpan ts = c_star.word_spans[w];
        const TokenSpan ss = c.word_spans[*src_word];
        for (std::size_t k = 0; k < ts.size(); ++k) {
            out[ts.begin + k] = ss.begin + (k * ss.size()) / ts.size();
        }
    }
    return out;
}

}  // namespace adapedit
