#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace toxtrace {

// One diarized utterance.
struct SpeakerTurn {
    std::string speaker_id;
    double start = 0.0;  // seconds
    double end = 0.0;    // seconds
    std::string text;    // verbatim; downstream modules normalize as needed
};

struct Episode {
    std::string episode_id;
    std::string channel_id;
    std::vector<SpeakerTurn> turns;  // ascending by start
};

struct NormalizeReport {
    std::size_t trimmed = 0;
    std::size_t dropped = 0;
};

// Parse line-delimited transcript records, one JSON object per line with keys
// "speaker" (string), "start"/"end" (seconds), "text" (string). Output turns
// are sorted ascending by start. Malformed records (missing field, non-numeric
// time, start >= end, empty text) raise ParseError naming the line; an empty
// stream raises ParseError as well.
Episode parse_transcript(std::istream& input, std::string episode_id,
                         std::string channel_id);

// Make turn intervals pairwise non-overlapping. A turn starting before the
// previous kept turn ends has its start trimmed to that end; a turn that
// becomes empty (trimmed start >= its end) is dropped. Idempotent; total
// speech duration never increases.
Episode normalize_overlaps(Episode episode, NormalizeReport* report = nullptr);

double total_speech_seconds(const Episode& episode);

}  // namespace toxtrace
