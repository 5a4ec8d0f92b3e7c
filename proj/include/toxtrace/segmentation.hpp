#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "toxtrace/ingest.hpp"

namespace toxtrace {

inline constexpr double kDefaultChunkSeconds = 17.0;
inline constexpr std::size_t kDefaultMaxChunksPerSegment = 4;

// A slice of one speaker turn, at most chunk_duration seconds long. The unit
// sent to the toxicity scorer.
struct Chunk {
    std::string speaker_id;
    double start = 0.0;
    double end = 0.0;
    std::string text;  // whitespace-normalized share of the turn's tokens
    std::optional<double> toxicity;
};

// 1-4 consecutive same-speaker chunks, roughly one minute of speech. The unit
// of all chain analysis.
struct Segment {
    std::size_t segment_index = 0;  // position within the episode
    std::string speaker_id;
    std::vector<Chunk> chunks;
    double start = 0.0;
    double end = 0.0;
    std::string text;  // chunk texts joined with single spaces
    std::optional<double> toxicity;

    double duration() const { return end - start; }
};

// Split a turn into ceil(duration / chunk_duration) equal-duration chunks
// covering [start, end). The turn text is split on whitespace and the tokens
// are allocated to chunks proportionally; when the count does not divide
// evenly the leading chunks receive one extra token each.
std::vector<Chunk> chunk_turn(const SpeakerTurn& turn, double chunk_duration);

// Group consecutive same-speaker chunks greedily left-to-right into segments
// of at most max_chunks_per_segment chunks. A speaker change always starts a
// new segment. segment_index is assigned 0..n-1 in time order.
std::vector<Segment> build_segments(std::vector<Chunk> chunks,
                                    std::size_t max_chunks_per_segment);

// Max over chunk toxicities; stores the result on the segment and returns it.
// Throws MissingScoreError naming the first unscored chunk.
double aggregate_segment_toxicity(Segment& segment);

// chunk_turn over every turn of the episode, then build_segments.
std::vector<Segment> segment_episode(const Episode& episode,
                                     double chunk_duration = kDefaultChunkSeconds,
                                     std::size_t max_chunks_per_segment =
                                         kDefaultMaxChunksPerSegment);

// Split on whitespace runs; the shared definition of "token" for chunk text
// allocation (distinct from the textstats tokenizer, which also lowercases
// and strips punctuation).
std::vector<std::string> whitespace_tokens(const std::string& text);

// Join non-empty pieces with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens,
                        std::size_t first, std::size_t count);

}  // namespace toxtrace
