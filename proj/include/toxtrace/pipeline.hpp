#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "toxtrace/chains.hpp"
#include "toxtrace/segmentation.hpp"

namespace toxtrace {

// Stage implementations behind the CLI subcommands. Each stage reads its
// declared inputs, writes its declared outputs atomically and returns a
// summary; printing is left to the caller.

struct TranscriptEntry {
    std::filesystem::path path;
    std::string episode_id;
    std::string channel_id;
};

// One JSON object per line: {"path", "episode_id", "channel_id"}. Relative
// paths resolve against the manifest's directory.
std::vector<TranscriptEntry> read_manifest(const std::filesystem::path& path);

struct IngestOptions {
    std::filesystem::path manifest;            // or explicit transcripts
    std::vector<TranscriptEntry> transcripts;
    std::filesystem::path out;
    double chunk_duration = kDefaultChunkSeconds;
    std::size_t max_chunks_per_segment = kDefaultMaxChunksPerSegment;
};

struct IngestSummary {
    std::size_t episodes = 0;
    std::size_t turns = 0;
    std::size_t trimmed = 0;
    std::size_t dropped = 0;
    std::size_t chunks = 0;
    std::size_t segments = 0;
    bool empty_manifest = false;  // nothing listed; no output written
};

IngestSummary run_ingest(const IngestOptions& options);

struct ScoreOptions {
    std::filesystem::path segments;
    std::filesystem::path out;
    std::string scorer = "lexicon";  // "lexicon" or "remote"
    std::filesystem::path lexicon;
    std::filesystem::path cache;  // empty keeps the cache in memory
    // Remote scorer settings; endpoint falls back to $PERSPECTIVE_API_URL and
    // the key is read from the named environment variable.
    std::string endpoint;
    std::string api_key_env = "PERSPECTIVE_API_KEY";
    std::string attribute = "TOXICITY";
    bool do_not_store = true;
    double qps = 1.0;
    int max_retries = 3;
};

struct ScoreSummary {
    std::size_t chunks = 0;
    std::size_t scored = 0;      // scorer invocations
    std::size_t cache_hits = 0;  // served from the persistent cache
    std::size_t reused = 0;      // already scored in the input store
    std::size_t empty_chunks = 0;
    std::size_t segments = 0;
};

ScoreSummary run_score(const ScoreOptions& options);

struct ChainsOptions {
    std::filesystem::path segments;  // scored store
    std::filesystem::path out;
    double anchor_threshold = kDefaultAnchorThreshold;
    std::size_t window = kDefaultChainWindow;
};

struct ChainsSummary {
    std::size_t episodes = 0;
    std::size_t chains = 0;
    std::size_t truncated = 0;  // chains clipped by an episode boundary
};

ChainsSummary run_chains(const ChainsOptions& options);

struct StatsOptions {
    std::filesystem::path chains;
    std::filesystem::path out_stats;
    std::filesystem::path out_keywords;
    std::size_t keyword_top_k = 50;
};

struct StatsSummary {
    std::size_t chains = 0;
    std::size_t segment_rows = 0;
    std::size_t skipped_positions = 0;  // fewer than 2 observations
};

StatsSummary run_stats(const StatsOptions& options);

struct CpdOptions {
    std::filesystem::path chains;
    std::filesystem::path signal_csv;  // standalone mode: one raw signal
    std::filesystem::path out;
    std::vector<std::string> methods{"kernelcpd"};  // pelt|kernelcpd|binseg|bottomup
    std::string cost = "rbf";
    std::optional<double> penalty;       // default: BIC-style per signal
    std::optional<std::size_t> n_bkps;   // fixed-count mode where supported
    std::size_t min_size = 2;
    std::optional<double> bandwidth;
};

struct CpdSummary {
    std::size_t chains = 0;
    std::size_t records = 0;
    std::size_t skipped_short = 0;
};

CpdSummary run_cpd(const CpdOptions& options);

struct EvalOptions {
    std::filesystem::path cpd;
    std::filesystem::path annotations;
    std::filesystem::path out;
    std::optional<std::size_t> quorum;  // default: majority of annotators
    std::vector<std::size_t> margins{1, 2, 4};
};

struct EvalSummary {
    std::size_t evaluated = 0;
    std::size_t missing_annotations = 0;
    std::size_t length_mismatches = 0;
};

EvalSummary run_eval(const EvalOptions& options);

struct ReportOptions {
    std::filesystem::path segments;  // scored store
    std::filesystem::path out;
    double anchor_threshold = kDefaultAnchorThreshold;
};

struct ReportSummary {
    std::size_t channels = 0;
    std::size_t episodes = 0;
    std::size_t chains = 0;
};

ReportSummary run_report(const ReportOptions& options);

}  // namespace toxtrace
