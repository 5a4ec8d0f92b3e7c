#include "toxtrace/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "toxtrace/cpd.hpp"
#include "toxtrace/error.hpp"
#include "toxtrace/evaluation.hpp"
#include "toxtrace/ingest.hpp"
#include "toxtrace/store.hpp"
#include "toxtrace/textstats.hpp"
#include "toxtrace/toxicity.hpp"

namespace toxtrace {

namespace {

std::vector<EpisodeSegments> load_segment_store(const std::filesystem::path& path,
                                                const char* producing_stage) {
    std::istringstream in(store::read_file_checked(path, producing_stage));
    try {
        return store::read_segments(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<ConversationChain> load_chain_store(const std::filesystem::path& path) {
    std::istringstream in(store::read_file_checked(path, "chains"));
    try {
        return store::read_chains(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace

std::vector<TranscriptEntry> read_manifest(const std::filesystem::path& path) {
    const std::string content = store::read_file_checked(path, "");
    std::istringstream in(content);
    std::vector<TranscriptEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": invalid manifest record: " +
                                 e.what(),
                             lineno);
        }
        if (!rec.is_object() || !rec.contains("path") ||
            !rec.contains("episode_id") || !rec.contains("channel_id")) {
            throw ParseError(path.string() +
                                 ": manifest record needs path/episode_id/channel_id",
                             lineno);
        }
        TranscriptEntry entry;
        entry.path = rec["path"].get<std::string>();
        if (entry.path.is_relative() && path.has_parent_path()) {
            entry.path = path.parent_path() / entry.path;
        }
        entry.episode_id = rec["episode_id"].get<std::string>();
        entry.channel_id = rec["channel_id"].get<std::string>();
        entries.push_back(std::move(entry));
    }
    return entries;
}

IngestSummary run_ingest(const IngestOptions& options) {
    std::vector<TranscriptEntry> entries = options.transcripts;
    if (!options.manifest.empty()) {
        const auto manifest_entries = read_manifest(options.manifest);
        entries.insert(entries.end(), manifest_entries.begin(),
                       manifest_entries.end());
    }

    IngestSummary summary;
    if (entries.empty()) {
        summary.empty_manifest = true;
        return summary;
    }

    std::vector<EpisodeSegments> corpus;
    for (const TranscriptEntry& entry : entries) {
        if (!std::filesystem::exists(entry.path)) {
            throw Error("transcript file does not exist: " + entry.path.string());
        }
        std::ifstream in(entry.path);
        if (!in) {
            throw Error("cannot open transcript: " + entry.path.string());
        }
        Episode episode;
        try {
            episode = parse_transcript(in, entry.episode_id, entry.channel_id);
        } catch (const ParseError& e) {
            throw ParseError(entry.path.string() + ": " + e.what());
        }
        NormalizeReport report;
        episode = normalize_overlaps(std::move(episode), &report);

        EpisodeSegments scored;
        scored.episode_id = episode.episode_id;
        scored.channel_id = episode.channel_id;
        scored.segments = segment_episode(episode, options.chunk_duration,
                                          options.max_chunks_per_segment);

        summary.episodes += 1;
        summary.turns += episode.turns.size();
        summary.trimmed += report.trimmed;
        summary.dropped += report.dropped;
        for (const Segment& seg : scored.segments) {
            summary.chunks += seg.chunks.size();
        }
        summary.segments += scored.segments.size();
        corpus.push_back(std::move(scored));
    }

    std::ostringstream out;
    store::write_segments(out, corpus);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

namespace {

std::unique_ptr<Scorer> build_scorer(const ScoreOptions& options) {
    if (options.scorer == "lexicon") {
        if (options.lexicon.empty()) {
            throw ConfigError("lexicon scorer requires --lexicon");
        }
        return std::make_unique<LexiconScorer>(load_lexicon_file(options.lexicon));
    }
    if (options.scorer == "remote") {
        RemoteScorerConfig config;
        config.endpoint = options.endpoint;
        if (config.endpoint.empty()) {
            if (const char* env = std::getenv("PERSPECTIVE_API_URL")) {
                config.endpoint = env;
            }
        }
        if (config.endpoint.empty()) {
            throw ConfigError(
                "remote scorer requires --endpoint or $PERSPECTIVE_API_URL");
        }
        if (!options.api_key_env.empty()) {
            if (const char* key = std::getenv(options.api_key_env.c_str())) {
                config.api_key = key;
            }
        }
        config.attribute = options.attribute;
        config.do_not_store = options.do_not_store;
        config.qps = options.qps;
        config.max_retries = options.max_retries;
        return std::make_unique<RemoteScorer>(std::move(config));
    }
    throw ConfigError("unknown scorer \"" + options.scorer +
                      "\" (expected lexicon or remote)");
}

}  // namespace

ScoreSummary run_score(const ScoreOptions& options) {
    std::vector<EpisodeSegments> corpus =
        load_segment_store(options.segments, "ingest");
    const std::unique_ptr<Scorer> scorer = build_scorer(options);
    ScoreCache cache = options.cache.empty() ? ScoreCache() : ScoreCache(options.cache);

    ScoreSummary summary;
    for (EpisodeSegments& episode : corpus) {
        for (Segment& segment : episode.segments) {
            for (std::size_t c = 0; c < segment.chunks.size(); ++c) {
                Chunk& chunk = segment.chunks[c];
                summary.chunks += 1;
                if (chunk.toxicity.has_value()) {
                    summary.reused += 1;
                    continue;
                }
                if (chunk.text.empty()) {
                    // Nothing to score; silence carries no toxicity.
                    chunk.toxicity = 0.0;
                    summary.empty_chunks += 1;
                    continue;
                }
                const bool hit =
                    cache.lookup(scorer->id(), text_hash(chunk.text)).has_value();
                try {
                    chunk.toxicity = score_text(chunk.text, *scorer, cache).value;
                } catch (const Error& e) {
                    throw Error("scoring failed at episode " + episode.episode_id +
                                " segment " + std::to_string(segment.segment_index) +
                                " chunk " + std::to_string(c) + ": " + e.what());
                }
                if (hit) {
                    summary.cache_hits += 1;
                } else {
                    summary.scored += 1;
                }
            }
            aggregate_segment_toxicity(segment);
            summary.segments += 1;
        }
    }

    std::ostringstream out;
    store::write_segments(out, corpus);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

ChainsSummary run_chains(const ChainsOptions& options) {
    const std::vector<EpisodeSegments> corpus =
        load_segment_store(options.segments, "score");

    ChainsSummary summary;
    std::vector<ConversationChain> all;
    for (const EpisodeSegments& episode : corpus) {
        summary.episodes += 1;
        std::vector<ConversationChain> chains;
        try {
            chains = extract_all_chains(episode, options.anchor_threshold,
                                        options.window);
        } catch (const MissingScoreError& e) {
            throw MissingScoreError("episode " + episode.episode_id + ": " +
                                    e.what() + " (run `toxtrace score` first)");
        }
        for (ConversationChain& chain : chains) {
            if (chain.truncated_head > 0 || chain.truncated_tail > 0) {
                summary.truncated += 1;
            }
            all.push_back(std::move(chain));
        }
    }
    summary.chains = all.size();

    std::ostringstream out;
    store::write_chains(out, all);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

StatsSummary run_stats(const StatsOptions& options) {
    const std::vector<ConversationChain> chains = load_chain_store(options.chains);

    StatsSummary summary;
    summary.chains = chains.size();
    std::vector<SegmentStats> rows;
    for (const ConversationChain& chain : chains) {
        std::vector<SegmentStats> chain_rows = chain_segment_stats(chain);
        rows.insert(rows.end(), chain_rows.begin(), chain_rows.end());
    }
    summary.segment_rows = rows.size();

    std::map<std::string, std::vector<PositionAggregate>> by_measure;
    for (Measure measure : {Measure::duration, Measure::token_count, Measure::ttr,
                            Measure::entropy, Measure::perplexity}) {
        std::vector<int> skipped;
        by_measure[measure_name(measure)] =
            aggregate_by_position(rows, measure, &skipped);
        summary.skipped_positions += skipped.size();
    }

    std::ostringstream stats_out;
    store::write_position_stats_csv(stats_out, by_measure);
    store::write_file_atomic(options.out_stats, stats_out.str());

    std::ostringstream keywords_out;
    store::write_keywords_csv(keywords_out,
                              keyword_frequencies(chains, options.keyword_top_k));
    store::write_file_atomic(options.out_keywords, keywords_out.str());
    return summary;
}

CpdSummary run_cpd(const CpdOptions& options) {
    if (options.methods.empty()) {
        throw ConfigError("at least one detection method is required");
    }
    if (options.n_bkps.has_value() && options.penalty.has_value()) {
        throw ConfigError("--n-bkps and --penalty are mutually exclusive");
    }
    if (options.chains.empty() == options.signal_csv.empty()) {
        throw ConfigError("provide either a chain store or a signal CSV");
    }

    CpdSummary summary;

    // Detection inputs: one toxicity series per chain, or a single raw
    // signal in standalone mode.
    struct SeriesEntry {
        std::string id;
        Signal signal;
    };
    std::vector<SeriesEntry> entries;
    if (!options.signal_csv.empty()) {
        std::istringstream in(store::read_file_checked(options.signal_csv, ""));
        try {
            entries.push_back(
                {options.signal_csv.stem().string(), store::read_signal_csv(in)});
        } catch (const ParseError& e) {
            throw ParseError(options.signal_csv.string() + ": " + e.what());
        }
    } else {
        for (const ConversationChain& chain : load_chain_store(options.chains)) {
            std::vector<double> series;
            series.reserve(chain.segments.size());
            for (const Segment& seg : chain.segments) {
                if (!seg.toxicity.has_value()) {
                    throw MissingScoreError("chain " + chain.chain_id +
                                            " contains an unscored segment");
                }
                series.push_back(*seg.toxicity);
            }
            if (series.size() < 2 * options.min_size) {
                summary.skipped_short += 1;
                continue;
            }
            entries.push_back({chain.chain_id, Signal::univariate(std::move(series))});
        }
    }
    summary.chains = entries.size() + summary.skipped_short;

    std::vector<store::CpdRecord> records;
    for (const SeriesEntry& entry : entries) {
        const Signal& signal = entry.signal;
        // A constant series has zero variance; keep the penalty positive so
        // penalized detectors stay well-defined (they return no change points).
        const double auto_penalty = std::max(default_penalty(signal), 1e-9);

        // Costs are built once per chain and shared across methods. For rbf
        // and cosine the kernel view is the same object as the sum-of-costs
        // view; l2 and linear mean different things to kernelcpd.
        std::unique_ptr<Cost> model_cost;
        std::unique_ptr<Cost> kernel_cost;
        auto sum_cost = [&]() -> const Cost& {
            if (!model_cost) {
                model_cost = make_cost(signal, cost_model_from_name(options.cost),
                                       options.bandwidth);
            }
            return *model_cost;
        };
        auto kernelcpd_cost = [&]() -> const Cost& {
            if (options.cost == "rbf" || options.cost == "cosine") {
                return sum_cost();
            }
            if (!kernel_cost) {
                kernel_cost = make_kernel_cost(
                    signal, kernel_model_from_name(options.cost), options.bandwidth);
            }
            return *kernel_cost;
        };

        for (const std::string& method : options.methods) {
            store::CpdRecord record;
            record.chain_id = entry.id;
            record.method = method;
            record.cost = options.cost;
            record.params["min_size"] = static_cast<double>(options.min_size);
            if (options.bandwidth.has_value()) {
                record.params["bandwidth"] = *options.bandwidth;
            }

            ChangePointSet result;
            if (method == "kernelcpd") {
                record.cost = kernel_model_name(kernel_model_from_name(options.cost));
                if (options.n_bkps.has_value()) {
                    record.params["n_bkps"] = static_cast<double>(*options.n_bkps);
                    result = detect_kernelcpd(signal, kernelcpd_cost(),
                                              options.n_bkps, std::nullopt,
                                              options.min_size);
                } else {
                    const double penalty = options.penalty.value_or(auto_penalty);
                    record.params["penalty"] = penalty;
                    result = detect_kernelcpd(signal, kernelcpd_cost(), std::nullopt,
                                              penalty, options.min_size);
                }
            } else if (method == "pelt") {
                if (options.n_bkps.has_value()) {
                    throw ConfigError("pelt is penalized only; use --penalty");
                }
                const double penalty = options.penalty.value_or(auto_penalty);
                record.params["penalty"] = penalty;
                result = detect_pelt(signal, sum_cost(), penalty, options.min_size);
            } else if (method == "binseg" || method == "bottomup") {
                std::optional<double> penalty;
                if (options.n_bkps.has_value()) {
                    record.params["n_bkps"] = static_cast<double>(*options.n_bkps);
                } else {
                    penalty = options.penalty.value_or(auto_penalty);
                    record.params["penalty"] = *penalty;
                }
                result = method == "binseg"
                             ? detect_binseg(signal, sum_cost(), options.n_bkps,
                                             penalty, options.min_size)
                             : detect_bottomup(signal, sum_cost(), options.n_bkps,
                                               penalty, options.min_size);
            } else {
                throw ConfigError("unknown method \"" + method +
                                  "\" (expected pelt, kernelcpd, binseg or "
                                  "bottomup)");
            }
            record.breakpoints = result.breakpoints;
            records.push_back(std::move(record));
            summary.records += 1;
        }
    }

    std::ostringstream out;
    store::write_cpd(out, records);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

EvalSummary run_eval(const EvalOptions& options) {
    std::istringstream cpd_in(store::read_file_checked(options.cpd, "cpd"));
    const std::vector<store::CpdRecord> records = store::read_cpd(cpd_in);
    std::istringstream ann_in(store::read_file_checked(options.annotations, ""));
    const std::vector<AnnotationSet> annotation_sets =
        store::read_annotations(ann_in);

    std::map<std::string, const AnnotationSet*> by_chain;
    for (const AnnotationSet& set : annotation_sets) {
        by_chain[set.chain_id] = &set;
    }

    EvalSummary summary;
    std::vector<ChainMetrics> rows;
    for (const store::CpdRecord& record : records) {
        const auto it = by_chain.find(record.chain_id);
        if (it == by_chain.end()) {
            summary.missing_annotations += 1;
            continue;
        }
        const AnnotationSet& annotations = *it->second;
        const std::size_t n = record.breakpoints.back();
        if (annotations.series_length != n) {
            summary.length_mismatches += 1;
            continue;
        }
        const std::size_t quorum = options.quorum.value_or(
            default_quorum(annotations.annotators.size()));
        const std::vector<std::size_t> truth = majority_vote(annotations, quorum);
        std::vector<std::size_t> pred = record.breakpoints;
        pred.pop_back();  // drop the sentinel
        rows.push_back(evaluate_chain(record.chain_id, record.method, pred, truth,
                                      n, options.margins));
        summary.evaluated += 1;
    }

    const EvalReport report = aggregate_report(std::move(rows), options.margins);
    std::ostringstream out;
    store::write_eval_report_csv(out, report, options.margins);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

ReportSummary run_report(const ReportOptions& options) {
    const std::vector<EpisodeSegments> corpus =
        load_segment_store(options.segments, "score");
    const CorpusStats stats = corpus_stats(corpus, options.anchor_threshold);

    ReportSummary summary;
    summary.channels = stats.channels.size();
    summary.episodes = stats.total_episodes;
    summary.chains = stats.total_chains;

    std::ostringstream out;
    store::write_corpus_stats_csv(out, stats);
    store::write_file_atomic(options.out, out.str());
    return summary;
}

}  // namespace toxtrace
