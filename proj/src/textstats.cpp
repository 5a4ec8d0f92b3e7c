#include "toxtrace/textstats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "toxtrace/error.hpp"

namespace toxtrace {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c >= 0x80;
}

char lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32)
                                  : static_cast<char>(c);
}

// Token counts with deterministic iteration order.
std::map<std::string_view, std::size_t> type_counts(
    const std::vector<std::string>& tokens) {
    std::map<std::string_view, std::size_t> counts;
    for (const std::string& token : tokens) {
        ++counts[token];
    }
    return counts;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_word_byte(c)) {
            cur.push_back(lower_ascii(c));
        } else if (c == '\'' && !cur.empty() && i + 1 < text.size() &&
                   is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
            cur.push_back('\'');
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

double ttr(const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw UndefinedStatError("type-token ratio of an empty token list");
    }
    const auto counts = type_counts(tokens);
    return static_cast<double>(counts.size()) / static_cast<double>(tokens.size());
}

double unigram_entropy(const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw UndefinedStatError("entropy of an empty token list");
    }
    const auto counts = type_counts(tokens);
    const double n = static_cast<double>(tokens.size());
    double bits = 0.0;
    for (const auto& [token, count] : counts) {
        const double p = static_cast<double>(count) / n;
        bits -= p * std::log2(p);
    }
    return std::max(bits, 0.0);
}

double unigram_perplexity(const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw UndefinedStatError("perplexity of an empty token list");
    }
    const auto counts = type_counts(tokens);
    const double n = static_cast<double>(tokens.size());
    // Sum of per-token log probabilities, accumulated per type.
    double log_prob = 0.0;
    for (const auto& [token, count] : counts) {
        log_prob += static_cast<double>(count) *
                    std::log(static_cast<double>(count) / n);
    }
    return std::exp(-log_prob / n);
}

double unigram_perplexity_raw(const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw UndefinedStatError("perplexity of an empty token list");
    }
    const auto counts = type_counts(tokens);
    const double n = static_cast<double>(tokens.size());
    double log_prob = 0.0;
    for (const auto& [token, count] : counts) {
        log_prob += static_cast<double>(count) *
                    std::log(static_cast<double>(count) / n);
    }
    return std::exp(-log_prob);
}

std::vector<SegmentStats> chain_segment_stats(const ConversationChain& chain) {
    std::vector<SegmentStats> rows;
    rows.reserve(chain.segments.size());
    for (std::size_t i = 0; i < chain.segments.size(); ++i) {
        const Segment& seg = chain.segments[i];
        SegmentStats row;
        row.chain_id = chain.chain_id;
        row.position = static_cast<int>(i) - static_cast<int>(chain.anchor_offset);
        row.duration = seg.duration();
        const std::vector<std::string> tokens = tokenize(seg.text);
        row.token_count = tokens.size();
        if (!tokens.empty()) {
            row.ttr = ttr(tokens);
            row.entropy = unigram_entropy(tokens);
            row.perplexity = unigram_perplexity(tokens);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

const char* measure_name(Measure measure) {
    switch (measure) {
        case Measure::duration: return "duration";
        case Measure::token_count: return "token_count";
        case Measure::ttr: return "ttr";
        case Measure::entropy: return "entropy";
        case Measure::perplexity: return "perplexity";
    }
    return "unknown";
}

Measure measure_from_name(const std::string& name) {
    if (name == "duration") return Measure::duration;
    if (name == "token_count") return Measure::token_count;
    if (name == "ttr") return Measure::ttr;
    if (name == "entropy") return Measure::entropy;
    if (name == "perplexity") return Measure::perplexity;
    throw ConfigError("unknown measure: " + name);
}

std::optional<double> measure_value(const SegmentStats& stats, Measure measure) {
    switch (measure) {
        case Measure::duration: return stats.duration;
        case Measure::token_count: return static_cast<double>(stats.token_count);
        case Measure::ttr: return stats.ttr;
        case Measure::entropy: return stats.entropy;
        case Measure::perplexity: return stats.perplexity;
    }
    return std::nullopt;
}

std::vector<PositionAggregate> aggregate_by_position(
    const std::vector<SegmentStats>& rows, Measure measure,
    std::vector<int>* skipped_positions) {
    std::map<int, std::vector<double>> by_position;
    for (const SegmentStats& row : rows) {
        if (const auto value = measure_value(row, measure)) {
            by_position[row.position].push_back(*value);
        }
    }

    std::vector<PositionAggregate> aggregates;
    for (const auto& [position, values] : by_position) {
        if (values.size() < 2) {
            if (skipped_positions != nullptr) {
                skipped_positions->push_back(position);
            }
            continue;
        }
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        const double half_width = 1.96 * sd / std::sqrt(n);
        aggregates.push_back({position, mean, mean - half_width,
                              mean + half_width, values.size()});
    }
    return aggregates;
}

const std::set<std::string, std::less<>>& english_stopwords() {
    static const std::set<std::string, std::less<>> words = {
        "a",       "about",  "above",   "after",  "again",   "against", "all",
        "am",      "an",     "and",     "any",    "are",     "aren't",  "as",
        "at",      "be",     "because", "been",   "before",  "being",   "below",
        "between", "both",   "but",     "by",     "can",     "can't",   "cannot",
        "could",   "couldn't", "did",   "didn't", "do",      "does",    "doesn't",
        "doing",   "don't",  "down",    "during", "each",    "few",     "for",
        "from",    "further", "had",    "hadn't", "has",     "hasn't",  "have",
        "haven't", "having", "he",      "he'd",   "he'll",   "he's",    "her",
        "here",    "here's", "hers",    "herself", "him",    "himself", "his",
        "how",     "how's",  "i",       "i'd",    "i'll",    "i'm",     "i've",
        "if",      "in",     "into",    "is",     "isn't",   "it",      "it's",
        "its",     "itself", "let's",   "me",     "more",    "most",    "mustn't",
        "my",      "myself", "no",      "nor",    "not",     "of",      "off",
        "on",      "once",   "only",    "or",     "other",   "ought",   "our",
        "ours",    "ourselves", "out",  "over",   "own",     "same",    "shan't",
        "she",     "she'd",  "she'll",  "she's",  "should",  "shouldn't", "so",
        "some",    "such",   "than",    "that",   "that's",  "the",     "their",
        "theirs",  "them",   "themselves", "then", "there",  "there's", "these",
        "they",    "they'd", "they'll", "they're", "they've", "this",   "those",
        "through", "to",     "too",     "under",  "until",   "up",      "very",
        "was",     "wasn't", "we",      "we'd",   "we'll",   "we're",   "we've",
        "were",    "weren't", "what",   "what's", "when",    "when's",  "where",
        "where's", "which",  "while",   "who",    "who's",   "whom",    "why",
        "why's",   "with",   "won't",   "would",  "wouldn't", "you",    "you'd",
        "you'll",  "you're", "you've",  "your",   "yours",   "yourself",
        "yourselves",
    };
    return words;
}

std::map<std::string, std::vector<KeywordCount>> keyword_frequencies(
    const std::vector<ConversationChain>& chains, std::size_t top_k) {
    const auto& stopwords = english_stopwords();
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const ConversationChain& chain : chains) {
        for (std::size_t i = 0; i < chain.segments.size(); ++i) {
            const char* window = i < chain.anchor_offset  ? "preceding"
                                 : i == chain.anchor_offset ? "anchor"
                                                            : "following";
            for (std::string& token : tokenize(chain.segments[i].text)) {
                if (stopwords.count(token) == 0) {
                    ++counts[window][std::move(token)];
                }
            }
        }
    }

    std::map<std::string, std::vector<KeywordCount>> result;
    for (auto& [window, token_counts] : counts) {
        std::vector<KeywordCount> rows;
        rows.reserve(token_counts.size());
        for (auto& [token, count] : token_counts) {
            rows.push_back({token, count});
        }
        std::sort(rows.begin(), rows.end(),
                  [](const KeywordCount& a, const KeywordCount& b) {
                      if (a.count != b.count) return a.count > b.count;
                      return a.token < b.token;
                  });
        if (top_k > 0 && rows.size() > top_k) {
            rows.resize(top_k);
        }
        result[window] = std::move(rows);
    }
    return result;
}

}  // namespace toxtrace
