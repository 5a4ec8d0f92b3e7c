#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxtrace {

struct ToxicityScore {
    double value = 0.0;  // [0, 1]
    std::string scorer_id;
    std::string text_hash;
};

// FNV-1a 64-bit of the exact text bytes, as 16 lowercase hex digits.
std::string text_hash(std::string_view text);

// Persistent (scorer_id, text_hash) -> value map. Inserts append one record
// to the backing file so re-runs never re-score; an empty path keeps the
// cache in memory only. Concurrent lookups are safe; writes are serialized.
class ScoreCache {
public:
    ScoreCache() = default;
    explicit ScoreCache(std::filesystem::path file);

    std::optional<double> lookup(const std::string& scorer_id,
                                 const std::string& hash) const;
    void insert(const std::string& scorer_id, const std::string& hash,
                double value);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, double> entries_;
    std::filesystem::path file_;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string id() const = 0;
    // Score non-empty text; result in [0, 1]. Throws ScorerError on failure.
    virtual double score(const std::string& text) = 0;
    // Longest text this scorer accepts, in bytes; 0 means unlimited.
    virtual std::size_t max_text_bytes() const { return 0; }
};

using Lexicon = std::map<std::string, double>;  // term -> weight in (0, 1]

// One "term,weight" pair per line; blank lines and lines starting with '#'
// are skipped. Terms are lowercased. Throws ParseError on malformed lines or
// weights outside (0, 1].
Lexicon load_lexicon(std::istream& input);
Lexicon load_lexicon_file(const std::filesystem::path& path);

// Noisy-OR combination over matched token occurrences:
//   score = 1 - prod(1 - weight)   (0 when nothing matches)
// Tokens come from the textstats tokenizer, so matching is case-insensitive
// and punctuation-blind.
double lexicon_score(const std::string& text, const Lexicon& lexicon);

// Deterministic offline scorer; the scorer id hashes the lexicon content so
// cache entries invalidate when the lexicon changes.
class LexiconScorer : public Scorer {
public:
    explicit LexiconScorer(Lexicon lexicon);
    std::string id() const override { return id_; }
    double score(const std::string& text) override;

private:
    Lexicon lexicon_;
    std::string id_;
};

struct RemoteScorerConfig {
    std::string endpoint;  // e.g. https://host/v1alpha1/comments:analyze
    std::string api_key;   // sent as ?key=...; empty sends none
    std::string attribute = "TOXICITY";
    bool do_not_store = true;
    double qps = 1.0;  // max request starts per second; <= 0 disables pacing
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{250};  // doubled per retry
    std::size_t max_text_bytes = 20000;
    std::string id = "perspective-v1alpha1";
};

// Client for a Perspective-style scoring service. POSTs the text with the
// requested attribute and reads back the summary score. Rate-limit responses
// are retried with exponential backoff; other 4xx are permanent failures.
class RemoteScorer : public Scorer {
public:
    explicit RemoteScorer(RemoteScorerConfig config);
    ~RemoteScorer() override;

    std::string id() const override { return config_.id; }
    std::size_t max_text_bytes() const override { return config_.max_text_bytes; }
    double score(const std::string& text) override;

    // Total HTTP requests issued, retries included.
    int requests_sent() const;

private:
    struct Impl;
    RemoteScorerConfig config_;
    std::unique_ptr<Impl> impl_;
};

// Cache-through scoring of one text. Identical text re-scored with the same
// scorer returns the cached value without touching the scorer.
ToxicityScore score_text(const std::string& text, Scorer& scorer,
                         ScoreCache& cache);

struct ScoreOutcome {
    std::optional<ToxicityScore> score;
    std::string error;  // empty on success

    bool ok() const { return score.has_value(); }
};

// Score texts in order, capturing per-item failures so one bad text does not
// lose the rest of the batch.
std::vector<ScoreOutcome> score_batch(const std::vector<std::string>& texts,
                                      Scorer& scorer, ScoreCache& cache);

}  // namespace toxtrace
