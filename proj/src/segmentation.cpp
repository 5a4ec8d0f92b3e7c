#include "toxtrace/segmentation.hpp"

#include <cctype>
#include <cmath>
#include <utility>

#include "toxtrace/error.hpp"

namespace toxtrace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens,
                        std::size_t first, std::size_t count) {
    std::string out;
    for (std::size_t i = first; i < first + count && i < tokens.size(); ++i) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

std::vector<Chunk> chunk_turn(const SpeakerTurn& turn, double chunk_duration) {
    if (!(chunk_duration > 0.0)) {
        throw ConfigError("chunk_duration must be positive");
    }
    const double duration = turn.end - turn.start;
    std::size_t count =
        static_cast<std::size_t>(std::ceil(duration / chunk_duration));
    if (count == 0) {
        count = 1;
    }
    // Guard against ceil rounding down across a representability edge.
    while (duration / static_cast<double>(count) > chunk_duration) {
        ++count;
    }

    const std::vector<std::string> tokens = whitespace_tokens(turn.text);
    const std::size_t base = tokens.size() / count;
    const std::size_t extra = tokens.size() % count;

    std::vector<Chunk> chunks;
    chunks.reserve(count);
    std::size_t next_token = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t take = base + (i < extra ? 1 : 0);
        Chunk chunk;
        chunk.speaker_id = turn.speaker_id;
        chunk.start = turn.start + duration * static_cast<double>(i) /
                                       static_cast<double>(count);
        chunk.end = (i + 1 == count)
                        ? turn.end
                        : turn.start + duration * static_cast<double>(i + 1) /
                                           static_cast<double>(count);
        chunk.text = join_tokens(tokens, next_token, take);
        next_token += take;
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<Segment> build_segments(std::vector<Chunk> chunks,
                                    std::size_t max_chunks_per_segment) {
    if (max_chunks_per_segment == 0) {
        throw ConfigError("max_chunks_per_segment must be positive");
    }
    std::vector<Segment> segments;
    for (Chunk& chunk : chunks) {
        const bool open_new = segments.empty() ||
                              segments.back().speaker_id != chunk.speaker_id ||
                              segments.back().chunks.size() >= max_chunks_per_segment;
        if (open_new) {
            Segment seg;
            seg.segment_index = segments.size();
            seg.speaker_id = chunk.speaker_id;
            seg.start = chunk.start;
            segments.push_back(std::move(seg));
        }
        Segment& seg = segments.back();
        seg.end = chunk.end;
        if (!chunk.text.empty()) {
            if (!seg.text.empty()) {
                seg.text.push_back(' ');
            }
            seg.text += chunk.text;
        }
        seg.chunks.push_back(std::move(chunk));
    }
    return segments;
}

double aggregate_segment_toxicity(Segment& segment) {
    if (segment.chunks.empty()) {
        throw MissingScoreError("segment " + std::to_string(segment.segment_index) +
                                " has no chunks");
    }
    double max_score = 0.0;
    for (std::size_t i = 0; i < segment.chunks.size(); ++i) {
        const Chunk& chunk = segment.chunks[i];
        if (!chunk.toxicity.has_value()) {
            throw MissingScoreError(
                "unscored chunk " + std::to_string(i) + " [" +
                std::to_string(chunk.start) + ", " + std::to_string(chunk.end) +
                ") in segment " + std::to_string(segment.segment_index));
        }
        max_score = std::max(max_score, *chunk.toxicity);
    }
    segment.toxicity = max_score;
    return max_score;
}

std::vector<Segment> segment_episode(const Episode& episode,
                                     double chunk_duration,
                                     std::size_t max_chunks_per_segment) {
    std::vector<Chunk> chunks;
    for (const SpeakerTurn& turn : episode.turns) {
        std::vector<Chunk> turn_chunks = chunk_turn(turn, chunk_duration);
        chunks.insert(chunks.end(), std::make_move_iterator(turn_chunks.begin()),
                      std::make_move_iterator(turn_chunks.end()));
    }
    return build_segments(std::move(chunks), max_chunks_per_segment);
}

}  // namespace toxtrace
