#include "toxtrace/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <utility>

#include <json.hpp>

#include "toxtrace/error.hpp"

namespace toxtrace {

namespace {

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

double require_number(const nlohmann::json& rec, const char* key, std::size_t line) {
    if (!rec.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", line);
    }
    if (!rec[key].is_number()) {
        throw ParseError(std::string("field \"") + key + "\" is not numeric", line);
    }
    return rec[key].get<double>();
}

std::string require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
    if (!rec.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", line);
    }
    if (!rec[key].is_string()) {
        throw ParseError(std::string("field \"") + key + "\" is not a string", line);
    }
    return rec[key].get<std::string>();
}

}  // namespace

Episode parse_transcript(std::istream& input, std::string episode_id,
                         std::string channel_id) {
    Episode ep;
    ep.episode_id = std::move(episode_id);
    ep.channel_id = std::move(channel_id);

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(input, line)) {
        ++lineno;
        if (is_blank(line)) {
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON record: ") + e.what(), lineno);
        }
        if (!rec.is_object()) {
            throw ParseError("record is not a JSON object", lineno);
        }

        SpeakerTurn turn;
        turn.speaker_id = require_string(rec, "speaker", lineno);
        turn.start = require_number(rec, "start", lineno);
        turn.end = require_number(rec, "end", lineno);
        turn.text = require_string(rec, "text", lineno);

        if (turn.start < 0.0) {
            throw ParseError("start time is negative", lineno);
        }
        if (!(turn.start < turn.end)) {
            throw ParseError("start >= end", lineno);
        }
        if (is_blank(turn.text)) {
            throw ParseError("empty text", lineno);
        }
        ep.turns.push_back(std::move(turn));
    }

    if (ep.turns.empty()) {
        throw ParseError("empty transcript: no records found");
    }

    std::stable_sort(ep.turns.begin(), ep.turns.end(),
                     [](const SpeakerTurn& a, const SpeakerTurn& b) {
                         if (a.start != b.start) return a.start < b.start;
                         return a.end < b.end;
                     });
    return ep;
}

Episode normalize_overlaps(Episode episode, NormalizeReport* report) {
    std::stable_sort(episode.turns.begin(), episode.turns.end(),
                     [](const SpeakerTurn& a, const SpeakerTurn& b) {
                         if (a.start != b.start) return a.start < b.start;
                         return a.end < b.end;
                     });

    NormalizeReport local;
    std::vector<SpeakerTurn> kept;
    kept.reserve(episode.turns.size());
    for (SpeakerTurn& turn : episode.turns) {
        if (!kept.empty() && turn.start < kept.back().end) {
            if (kept.back().end >= turn.end) {
                ++local.dropped;
                continue;
            }
            turn.start = kept.back().end;
            ++local.trimmed;
        }
        kept.push_back(std::move(turn));
    }
    episode.turns = std::move(kept);
    if (report != nullptr) {
        *report = local;
    }
    return episode;
}

double total_speech_seconds(const Episode& episode) {
    double total = 0.0;
    for (const SpeakerTurn& turn : episode.turns) {
        total += turn.end - turn.start;
    }
    return total;
}

}  // namespace toxtrace
