#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toxtrace/chains.hpp"

namespace toxtrace {

// Lowercased maximal runs of letters/digits with internal apostrophes kept;
// punctuation discarded. Bytes >= 0x80 are treated as word characters so
// UTF-8 words survive intact. Deterministic; empty text yields an empty list.
std::vector<std::string> tokenize(std::string_view text);

// Unique-token count divided by token count. Throws UndefinedStatError on an
// empty token list.
double ttr(const std::vector<std::string>& tokens);

// Shannon entropy in bits of the maximum-likelihood unigram distribution fit
// on the same token list.
double unigram_entropy(const std::vector<std::string>& tokens);

// Per-token normalized perplexity Pr(w1..wn)^(-1/n) under the text's own
// maximum-likelihood unigram model. Equals 2^entropy.
double unigram_perplexity(const std::vector<std::string>& tokens);

// The unnormalized quantity Pr(w1..wn)^(-1). Grows with length; provided as a
// secondary output only.
double unigram_perplexity_raw(const std::vector<std::string>& tokens);

// Per-segment measures at a chain position. position is relative to the
// anchor (anchor = 0, preceding negative). ttr/entropy/perplexity are absent
// when the segment text has no tokens.
struct SegmentStats {
    std::string chain_id;
    int position = 0;
    double duration = 0.0;
    std::size_t token_count = 0;
    std::optional<double> ttr;
    std::optional<double> entropy;
    std::optional<double> perplexity;
};

std::vector<SegmentStats> chain_segment_stats(const ConversationChain& chain);

enum class Measure { duration, token_count, ttr, entropy, perplexity };

const char* measure_name(Measure measure);
Measure measure_from_name(const std::string& name);
std::optional<double> measure_value(const SegmentStats& stats, Measure measure);

struct PositionAggregate {
    int position = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;
};

// Mean and normal-approximation 95% CI (mean +/- 1.96*s/sqrt(n), s the sample
// standard deviation) per chain position, ascending. Positions with fewer
// than 2 observations are omitted and reported through skipped_positions.
std::vector<PositionAggregate> aggregate_by_position(
    const std::vector<SegmentStats>& rows, Measure measure,
    std::vector<int>* skipped_positions = nullptr);

struct KeywordCount {
    std::string token;
    std::size_t count = 0;
};

const std::set<std::string, std::less<>>& english_stopwords();

// Stopword-filtered token frequencies per chain window. Keys are "preceding",
// "anchor" and "following"; rows sorted by count descending then token. top_k
// of 0 keeps everything.
std::map<std::string, std::vector<KeywordCount>> keyword_frequencies(
    const std::vector<ConversationChain>& chains, std::size_t top_k = 0);

}  // namespace toxtrace
