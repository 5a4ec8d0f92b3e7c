#include "toxtrace/store.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toxtrace/error.hpp"

namespace toxtrace {
namespace store {

using nlohmann::json;

namespace {

json parse_record(const std::string& line, std::size_t lineno) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON record: ") + e.what(), lineno);
    }
    if (!rec.is_object()) {
        throw ParseError("record is not a JSON object", lineno);
    }
    return rec;
}

template <typename T>
T field(const json& rec, const char* key, std::size_t lineno) {
    if (!rec.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", lineno);
    }
    try {
        return rec[key].get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("field \"") + key + "\" has the wrong type",
                         lineno);
    }
}

json toxicity_to_json(const std::optional<double>& value) {
    return value.has_value() ? json(*value) : json(nullptr);
}

std::optional<double> toxicity_from_json(const json& rec, const char* key,
                                         std::size_t lineno) {
    if (!rec.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", lineno);
    }
    if (rec[key].is_null()) {
        return std::nullopt;
    }
    if (!rec[key].is_number()) {
        throw ParseError(std::string("field \"") + key + "\" must be a number or null",
                         lineno);
    }
    return rec[key].get<double>();
}

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

// --- segment store -----------------------------------------------------------

void write_segments(std::ostream& out, const std::vector<EpisodeSegments>& corpus) {
    for (const EpisodeSegments& episode : corpus) {
        for (const Segment& seg : episode.segments) {
            json chunks = json::array();
            for (const Chunk& chunk : seg.chunks) {
                chunks.push_back({{"start", chunk.start},
                                  {"end", chunk.end},
                                  {"text", chunk.text},
                                  {"toxicity", toxicity_to_json(chunk.toxicity)}});
            }
            json rec{{"episode_id", episode.episode_id},
                     {"channel_id", episode.channel_id},
                     {"segment_index", seg.segment_index},
                     {"speaker", seg.speaker_id},
                     {"start", seg.start},
                     {"end", seg.end},
                     {"text", seg.text},
                     {"toxicity", toxicity_to_json(seg.toxicity)},
                     {"chunks", std::move(chunks)}};
            out << rec.dump() << '\n';
        }
    }
}

std::vector<EpisodeSegments> read_segments(std::istream& in) {
    std::vector<EpisodeSegments> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_record(line, lineno);

        const auto episode_id = field<std::string>(rec, "episode_id", lineno);
        const auto channel_id = field<std::string>(rec, "channel_id", lineno);
        if (corpus.empty() || corpus.back().episode_id != episode_id) {
            corpus.push_back({episode_id, channel_id, {}});
        }

        Segment seg;
        seg.segment_index = field<std::size_t>(rec, "segment_index", lineno);
        seg.speaker_id = field<std::string>(rec, "speaker", lineno);
        seg.start = field<double>(rec, "start", lineno);
        seg.end = field<double>(rec, "end", lineno);
        seg.text = field<std::string>(rec, "text", lineno);
        seg.toxicity = toxicity_from_json(rec, "toxicity", lineno);
        if (rec.contains("chunks")) {
            for (const json& c : rec["chunks"]) {
                Chunk chunk;
                chunk.speaker_id = seg.speaker_id;
                chunk.start = field<double>(c, "start", lineno);
                chunk.end = field<double>(c, "end", lineno);
                chunk.text = field<std::string>(c, "text", lineno);
                chunk.toxicity = toxicity_from_json(c, "toxicity", lineno);
                seg.chunks.push_back(std::move(chunk));
            }
        }
        corpus.back().segments.push_back(std::move(seg));
    }
    return corpus;
}

// --- chain store ---------------------------------------------------------------

void write_chains(std::ostream& out, const std::vector<ConversationChain>& chains) {
    for (const ConversationChain& chain : chains) {
        json segments = json::array();
        for (const Segment& seg : chain.segments) {
            segments.push_back({{"index", seg.segment_index},
                                {"speaker", seg.speaker_id},
                                {"start", seg.start},
                                {"end", seg.end},
                                {"toxicity", toxicity_to_json(seg.toxicity)},
                                {"text", seg.text}});
        }
        json rec{{"chain_id", chain.chain_id},
                 {"episode_id", chain.episode_id},
                 {"channel_id", chain.channel_id},
                 {"anchor_offset", chain.anchor_offset},
                 {"truncated_head", chain.truncated_head},
                 {"truncated_tail", chain.truncated_tail},
                 {"segments", std::move(segments)}};
        out << rec.dump() << '\n';
    }
}

std::vector<ConversationChain> read_chains(std::istream& in) {
    std::vector<ConversationChain> chains;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_record(line, lineno);

        ConversationChain chain;
        chain.chain_id = field<std::string>(rec, "chain_id", lineno);
        chain.episode_id = field<std::string>(rec, "episode_id", lineno);
        chain.channel_id = field<std::string>(rec, "channel_id", lineno);
        chain.anchor_offset = field<std::size_t>(rec, "anchor_offset", lineno);
        chain.truncated_head = field<std::size_t>(rec, "truncated_head", lineno);
        chain.truncated_tail = field<std::size_t>(rec, "truncated_tail", lineno);
        if (!rec.contains("segments") || !rec["segments"].is_array() ||
            rec["segments"].empty()) {
            throw ParseError("chain record lacks segments", lineno);
        }
        for (const json& s : rec["segments"]) {
            Segment seg;
            seg.segment_index = field<std::size_t>(s, "index", lineno);
            seg.speaker_id = field<std::string>(s, "speaker", lineno);
            seg.start = field<double>(s, "start", lineno);
            seg.end = field<double>(s, "end", lineno);
            seg.toxicity = toxicity_from_json(s, "toxicity", lineno);
            seg.text = field<std::string>(s, "text", lineno);
            chain.segments.push_back(std::move(seg));
        }
        if (chain.anchor_offset >= chain.segments.size()) {
            throw ParseError("anchor_offset out of range", lineno);
        }
        chains.push_back(std::move(chain));
    }
    return chains;
}

// --- cpd store -----------------------------------------------------------------

void write_cpd(std::ostream& out, const std::vector<CpdRecord>& records) {
    for (const CpdRecord& rec : records) {
        json params = json::object();
        for (const auto& [key, value] : rec.params) {
            params[key] = value;
        }
        json j{{"chain_id", rec.chain_id},
               {"method", rec.method},
               {"cost", rec.cost},
               {"params", std::move(params)},
               {"breakpoints", rec.breakpoints}};
        out << j.dump() << '\n';
    }
}

std::vector<CpdRecord> read_cpd(std::istream& in) {
    std::vector<CpdRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_record(line, lineno);
        CpdRecord r;
        r.chain_id = field<std::string>(rec, "chain_id", lineno);
        r.method = field<std::string>(rec, "method", lineno);
        r.cost = field<std::string>(rec, "cost", lineno);
        if (rec.contains("params") && rec["params"].is_object()) {
            for (const auto& [key, value] : rec["params"].items()) {
                if (value.is_number()) {
                    r.params[key] = value.get<double>();
                }
            }
        }
        r.breakpoints = field<std::vector<std::size_t>>(rec, "breakpoints", lineno);
        if (r.breakpoints.empty()) {
            throw ParseError("breakpoints must at least contain the end sentinel",
                             lineno);
        }
        records.push_back(std::move(r));
    }
    return records;
}

// --- annotations -----------------------------------------------------------------

std::vector<AnnotationSet> read_annotations(std::istream& in) {
    std::vector<AnnotationSet> sets;
    std::map<std::string, std::size_t> index_of;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_record(line, lineno);
        const auto chain_id = field<std::string>(rec, "chain_id", lineno);
        const auto annotator = field<std::string>(rec, "annotator_id", lineno);
        const auto indices = field<std::vector<std::size_t>>(rec, "indices", lineno);
        const auto n = field<std::size_t>(rec, "n", lineno);

        auto [it, inserted] = index_of.try_emplace(chain_id, sets.size());
        if (inserted) {
            sets.push_back({chain_id, {}, n});
        }
        AnnotationSet& set = sets[it->second];
        if (set.series_length != n) {
            throw ParseError("series length disagrees with an earlier record for "
                             "chain " + chain_id, lineno);
        }
        if (!set.annotators.emplace(annotator, indices).second) {
            throw ParseError("duplicate annotator " + annotator + " for chain " +
                             chain_id, lineno);
        }
    }
    return sets;
}

void write_annotations(std::ostream& out, const std::vector<AnnotationSet>& sets) {
    for (const AnnotationSet& set : sets) {
        for (const auto& [annotator, indices] : set.annotators) {
            json rec{{"chain_id", set.chain_id},
                     {"annotator_id", annotator},
                     {"indices", indices},
                     {"n", set.series_length}};
            out << rec.dump() << '\n';
        }
    }
}

Signal read_signal_csv(std::istream& in) {
    std::vector<double> flat;
    std::size_t dim = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell =
                line.substr(pos, comma == std::string::npos ? std::string::npos
                                                            : comma - pos);
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                while (used < cell.size() &&
                       std::isspace(static_cast<unsigned char>(cell[used]))) {
                    ++used;
                }
                if (used != cell.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError("not a number: \"" + cell + "\"", lineno);
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (dim == 0) {
            dim = row.size();
        } else if (row.size() != dim) {
            throw ParseError("row has " + std::to_string(row.size()) +
                                 " columns, expected " + std::to_string(dim),
                             lineno);
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    if (flat.empty()) {
        throw ParseError("signal file contains no rows");
    }
    return Signal(std::move(flat), dim);
}

// --- CSV reports -----------------------------------------------------------------

void write_position_stats_csv(
    std::ostream& out,
    const std::map<std::string, std::vector<PositionAggregate>>& by_measure) {
    out << "measure,position,mean,ci_low,ci_high,n\n";
    for (const auto& [measure, aggregates] : by_measure) {
        for (const PositionAggregate& agg : aggregates) {
            out << csv_escape(measure) << ',' << agg.position << ','
                << format_double(agg.mean) << ',' << format_double(agg.ci_low)
                << ',' << format_double(agg.ci_high) << ',' << agg.n << '\n';
        }
    }
}

void write_keywords_csv(
    std::ostream& out,
    const std::map<std::string, std::vector<KeywordCount>>& by_window) {
    out << "window,token,count\n";
    // Chain order: preceding, anchor, following.
    static const char* order[] = {"preceding", "anchor", "following"};
    for (const char* window : order) {
        const auto it = by_window.find(window);
        if (it == by_window.end()) continue;
        for (const KeywordCount& row : it->second) {
            out << window << ',' << csv_escape(row.token) << ',' << row.count
                << '\n';
        }
    }
}

void write_corpus_stats_csv(std::ostream& out, const CorpusStats& stats) {
    out << "channel,episodes,avg_minutes,avg_tokens,toxic_episodes,"
           "pct_toxic_episodes,chains,chain_share_pct\n";
    for (const ChannelStats& ch : stats.channels) {
        char minutes[32], tokens[32], pct[32], share[32];
        std::snprintf(minutes, sizeof(minutes), "%.1f", ch.avg_episode_minutes);
        std::snprintf(tokens, sizeof(tokens), "%.0f", ch.avg_episode_tokens);
        std::snprintf(pct, sizeof(pct), "%.0f", ch.pct_toxic_episodes);
        std::snprintf(share, sizeof(share), "%.1f", ch.chain_share_pct);
        out << csv_escape(ch.channel_id) << ',' << ch.episodes << ',' << minutes
            << ',' << tokens << ',' << ch.toxic_episodes << ',' << pct << ','
            << ch.chains << ',' << share << '\n';
    }
}

void write_eval_report_csv(std::ostream& out, const EvalReport& report,
                           const std::vector<std::size_t>& margins) {
    std::vector<std::string> methods;
    for (const auto& [method, metrics] : report.by_method) {
        methods.push_back(method);
    }
    out << "metric,aggregation";
    for (const std::string& method : methods) {
        out << ',' << csv_escape(method);
    }
    out << '\n';

    std::vector<std::string> metric_names{"hausdorff", "rand_index"};
    for (std::size_t margin : margins) {
        metric_names.push_back("precision@" + std::to_string(margin));
    }
    for (std::size_t margin : margins) {
        metric_names.push_back("recall@" + std::to_string(margin));
    }

    for (const std::string& metric : metric_names) {
        for (const char* agg : {"avg", "med"}) {
            out << csv_escape(metric) << ',' << agg;
            for (const std::string& method : methods) {
                out << ',';
                const auto& metrics = report.by_method.at(method);
                const auto it = metrics.find(metric);
                if (it != metrics.end()) {
                    const bool mean = std::string(agg) == "avg";
                    out << format_double(mean ? it->second.mean : it->second.median);
                }
            }
            out << '\n';
        }
    }
}

// --- file helpers -----------------------------------------------------------------

std::string read_file_checked(const std::filesystem::path& path,
                              const std::string& producing_stage) {
    if (!std::filesystem::exists(path)) {
        if (!producing_stage.empty()) {
            throw StageOrderError("input artifact " + path.string() +
                                  " does not exist; run `toxtrace " +
                                  producing_stage + "` first");
        }
        throw Error("file does not exist: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write file: " + tmp.string());
        }
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace store
}  // namespace toxtrace
