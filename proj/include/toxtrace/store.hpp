#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toxtrace/chains.hpp"
#include "toxtrace/cpd.hpp"
#include "toxtrace/evaluation.hpp"
#include "toxtrace/segmentation.hpp"
#include "toxtrace/textstats.hpp"

namespace toxtrace {
namespace store {

// All line-delimited stores use one JSON object per line; writers are
// deterministic so identical inputs produce byte-identical files.

// Segment store: episode_id, channel_id, segment_index, speaker, start, end,
// text, toxicity (null until scored) plus the chunk list needed for scoring.
void write_segments(std::ostream& out, const std::vector<EpisodeSegments>& corpus);
std::vector<EpisodeSegments> read_segments(std::istream& in);

// Chain store: chain_id, episode_id, channel_id, anchor offset, truncation
// counts and the per-segment rows (index, speaker, start, end, toxicity, text).
void write_chains(std::ostream& out, const std::vector<ConversationChain>& chains);
std::vector<ConversationChain> read_chains(std::istream& in);

struct CpdRecord {
    std::string chain_id;
    std::string method;
    std::string cost;
    std::map<std::string, double> params;
    std::vector<std::size_t> breakpoints;  // includes the end sentinel
};

void write_cpd(std::ostream& out, const std::vector<CpdRecord>& records);
std::vector<CpdRecord> read_cpd(std::istream& in);

// Annotation records: chain_id, annotator_id, indices, n. Records for the
// same chain are merged into one AnnotationSet; mismatched n is an error.
std::vector<AnnotationSet> read_annotations(std::istream& in);
void write_annotations(std::ostream& out, const std::vector<AnnotationSet>& sets);

// Standalone signal input: one sample per line, comma-separated coordinates,
// no header. Every row must have the same width.
Signal read_signal_csv(std::istream& in);

// CSV reports (header row first, RFC 4180 quoting where needed).
void write_position_stats_csv(
    std::ostream& out,
    const std::map<std::string, std::vector<PositionAggregate>>& by_measure);
void write_keywords_csv(
    std::ostream& out,
    const std::map<std::string, std::vector<KeywordCount>>& by_window);
void write_corpus_stats_csv(std::ostream& out, const CorpusStats& stats);
// Table layout: one row per (metric, aggregation), one column per method.
void write_eval_report_csv(std::ostream& out, const EvalReport& report,
                           const std::vector<std::size_t>& margins);

// File helpers; reading a missing path raises StageOrderError naming the
// pipeline stage that produces it (empty hint falls back to a plain error).
std::string read_file_checked(const std::filesystem::path& path,
                              const std::string& producing_stage);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

std::string format_double(double value);

}  // namespace store
}  // namespace toxtrace
