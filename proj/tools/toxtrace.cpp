#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toxtrace/error.hpp"
#include "toxtrace/pipeline.hpp"
#include "toxtrace/toxicity.hpp"
#include "toxtrace/version.hpp"

namespace {

using toxtrace::text_hash;

// Reproducibility header: tool version plus a hash of the effective config.
void print_header(const std::string& command, const nlohmann::json& config) {
    std::cout << "# toxtrace " << toxtrace::kVersion << " " << command
              << " config=" << text_hash(config.dump()) << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"toxtrace: toxicity timelines, conversation chains and change "
                 "points for diarized transcripts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("toxtrace ") + toxtrace::kVersion);
    app.set_config("--config", "", "Read defaults from an INI/TOML file; flags win");

    // --- ingest ---------------------------------------------------------
    toxtrace::IngestOptions ingest;
    std::string single_path, single_episode, single_channel;
    auto* cmd_ingest = app.add_subcommand(
        "ingest", "Parse, normalize and segment diarized transcripts");
    cmd_ingest->add_option("--manifest", ingest.manifest,
                           "JSONL manifest of transcripts (path, episode_id, "
                           "channel_id)");
    cmd_ingest->add_option("--transcript", single_path,
                           "Single transcript file (with --episode-id/--channel-id)");
    cmd_ingest->add_option("--episode-id", single_episode, "Episode id for --transcript");
    cmd_ingest->add_option("--channel-id", single_channel, "Channel id for --transcript");
    cmd_ingest->add_option("--out", ingest.out, "Segment store to write")->required();
    cmd_ingest->add_option("--chunk-duration", ingest.chunk_duration,
                           "Chunk duration in seconds")
        ->capture_default_str();
    cmd_ingest->add_option("--max-chunks", ingest.max_chunks_per_segment,
                           "Maximum chunks per segment")
        ->capture_default_str();

    // --- score ----------------------------------------------------------
    toxtrace::ScoreOptions score;
    auto* cmd_score =
        app.add_subcommand("score", "Score every chunk and aggregate per segment");
    cmd_score->add_option("--segments", score.segments, "Segment store from ingest")
        ->required();
    cmd_score->add_option("--out", score.out, "Scored segment store")->required();
    cmd_score->add_option("--scorer", score.scorer, "lexicon or remote")
        ->capture_default_str();
    cmd_score->add_option("--lexicon", score.lexicon, "term,weight file for the "
                          "lexicon scorer");
    cmd_score->add_option("--cache", score.cache, "Persistent score cache file");
    cmd_score->add_option("--endpoint", score.endpoint,
                          "Remote scoring endpoint URL (or $PERSPECTIVE_API_URL)");
    cmd_score->add_option("--api-key-env", score.api_key_env,
                          "Environment variable holding the API key")
        ->capture_default_str();
    cmd_score->add_option("--attribute", score.attribute, "Requested attribute")
        ->capture_default_str();
    cmd_score->add_flag("--store-comments{false}", score.do_not_store,
                        "Allow the remote service to store request text");
    cmd_score->add_option("--qps", score.qps, "Max requests per second")
        ->capture_default_str();
    cmd_score->add_option("--max-retries", score.max_retries,
                          "Retries after rate-limit or server errors")
        ->capture_default_str();

    // --- chains ---------------------------------------------------------
    toxtrace::ChainsOptions chains;
    auto* cmd_chains = app.add_subcommand(
        "chains", "Extract anchor-centered toxic conversation chains");
    cmd_chains->add_option("--segments", chains.segments, "Scored segment store")
        ->required();
    cmd_chains->add_option("--out", chains.out, "Chain store to write")->required();
    cmd_chains->add_option("--threshold", chains.anchor_threshold,
                           "Anchor toxicity threshold")
        ->capture_default_str();
    cmd_chains->add_option("--window", chains.window,
                           "Segments of context on each side")
        ->capture_default_str();

    // --- stats ----------------------------------------------------------
    toxtrace::StatsOptions stats;
    auto* cmd_stats = app.add_subcommand(
        "stats", "Per-position textual statistics and keyword frequencies");
    cmd_stats->add_option("--chains", stats.chains, "Chain store")->required();
    cmd_stats->add_option("--out", stats.out_stats, "Position statistics CSV")
        ->required();
    cmd_stats->add_option("--keywords-out", stats.out_keywords,
                          "Keyword frequency CSV")
        ->required();
    cmd_stats->add_option("--top", stats.keyword_top_k,
                          "Keywords kept per window (0 keeps all)")
        ->capture_default_str();

    // --- cpd ------------------------------------------------------------
    toxtrace::CpdOptions cpd;
    std::string methods_arg = "kernelcpd";
    double penalty_arg = -1.0;
    long long n_bkps_arg = -1;
    double bandwidth_arg = -1.0;
    auto* cmd_cpd = app.add_subcommand(
        "cpd", "Detect change points in per-segment toxicity series");
    cmd_cpd->add_option("--chains", cpd.chains, "Chain store");
    cmd_cpd->add_option("--signal", cpd.signal_csv,
                        "Standalone mode: CSV of numeric rows, one sample per "
                        "line");
    cmd_cpd->add_option("--out", cpd.out, "Breakpoint records to write")->required();
    cmd_cpd->add_option("--method", methods_arg,
                        "Comma-separated: pelt, kernelcpd, binseg, bottomup")
        ->capture_default_str();
    cmd_cpd->add_option("--cost", cpd.cost, "rbf, l2, linear or cosine")
        ->capture_default_str();
    cmd_cpd->add_option("--penalty", penalty_arg,
                        "Penalty per change point (default: 2*var*log n)");
    cmd_cpd->add_option("--n-bkps", n_bkps_arg,
                        "Fixed number of change points (kernelcpd, binseg, "
                        "bottomup)");
    cmd_cpd->add_option("--min-size", cpd.min_size, "Minimum segment length")
        ->capture_default_str();
    cmd_cpd->add_option("--bandwidth", bandwidth_arg,
                        "rbf bandwidth (default: median heuristic)");

    // --- eval -----------------------------------------------------------
    toxtrace::EvalOptions eval;
    long long quorum_arg = -1;
    std::string margins_arg = "1,2,4";
    auto* cmd_eval = app.add_subcommand(
        "eval", "Score detector output against annotated change points");
    cmd_eval->add_option("--cpd", eval.cpd, "Breakpoint records")->required();
    cmd_eval->add_option("--annotations", eval.annotations,
                         "Annotation records (chain_id, annotator_id, indices, n)")
        ->required();
    cmd_eval->add_option("--out", eval.out, "Report CSV")->required();
    cmd_eval->add_option("--quorum", quorum_arg,
                         "Votes required for consensus (default: majority)");
    cmd_eval->add_option("--margins", margins_arg, "Comma-separated margins")
        ->capture_default_str();

    // --- report ---------------------------------------------------------
    toxtrace::ReportOptions report;
    auto* cmd_report = app.add_subcommand(
        "report", "Per-channel toxic-episode percentages and chain shares");
    cmd_report->add_option("--segments", report.segments, "Scored segment store")
        ->required();
    cmd_report->add_option("--out", report.out, "Corpus statistics CSV")->required();
    cmd_report->add_option("--threshold", report.anchor_threshold,
                           "Anchor toxicity threshold")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    auto split_csv = [](const std::string& arg) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : arg) {
            if (c == ',') {
                if (!cur.empty()) parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) parts.push_back(cur);
        return parts;
    };

    if (cmd_ingest->parsed()) {
        if (!single_path.empty()) {
            if (single_episode.empty() || single_channel.empty()) {
                throw toxtrace::ConfigError(
                    "--transcript needs --episode-id and --channel-id");
            }
            ingest.transcripts.push_back(
                {single_path, single_episode, single_channel});
        }
        print_header("ingest", {{"manifest", ingest.manifest.string()},
                                {"transcript", single_path},
                                {"out", ingest.out.string()},
                                {"chunk_duration", ingest.chunk_duration},
                                {"max_chunks", ingest.max_chunks_per_segment}});
        const auto summary = toxtrace::run_ingest(ingest);
        if (summary.empty_manifest) {
            std::cerr << "warning: no transcripts listed; nothing to do\n";
            return 0;
        }
        std::cout << "episodes=" << summary.episodes << " turns=" << summary.turns
                  << " trimmed=" << summary.trimmed << " dropped=" << summary.dropped
                  << " chunks=" << summary.chunks
                  << " segments=" << summary.segments << "\n";
        return 0;
    }

    if (cmd_score->parsed()) {
        print_header("score", {{"segments", score.segments.string()},
                               {"out", score.out.string()},
                               {"scorer", score.scorer},
                               {"lexicon", score.lexicon.string()},
                               {"cache", score.cache.string()},
                               {"endpoint", score.endpoint},
                               {"attribute", score.attribute},
                               {"qps", score.qps},
                               {"max_retries", score.max_retries}});
        const auto summary = toxtrace::run_score(score);
        std::cout << "chunks=" << summary.chunks << " scored=" << summary.scored
                  << " cache_hits=" << summary.cache_hits
                  << " reused=" << summary.reused
                  << " empty=" << summary.empty_chunks
                  << " segments=" << summary.segments << "\n";
        return 0;
    }

    if (cmd_chains->parsed()) {
        print_header("chains", {{"segments", chains.segments.string()},
                                {"out", chains.out.string()},
                                {"threshold", chains.anchor_threshold},
                                {"window", chains.window}});
        const auto summary = toxtrace::run_chains(chains);
        std::cout << "episodes=" << summary.episodes
                  << " chains=" << summary.chains
                  << " truncated=" << summary.truncated << "\n";
        return 0;
    }

    if (cmd_stats->parsed()) {
        print_header("stats", {{"chains", stats.chains.string()},
                               {"out", stats.out_stats.string()},
                               {"keywords_out", stats.out_keywords.string()},
                               {"top", stats.keyword_top_k}});
        const auto summary = toxtrace::run_stats(stats);
        if (summary.chains == 0) {
            std::cerr << "warning: chain store is empty; wrote header-only "
                         "reports\n";
        }
        if (summary.skipped_positions > 0) {
            std::cerr << "warning: " << summary.skipped_positions
                      << " (measure, position) cells had fewer than 2 "
                         "observations and were omitted\n";
        }
        std::cout << "chains=" << summary.chains
                  << " segment_rows=" << summary.segment_rows << "\n";
        return 0;
    }

    if (cmd_cpd->parsed()) {
        cpd.methods = split_csv(methods_arg);
        if (cmd_cpd->count("--penalty") > 0) {
            if (!(penalty_arg > 0)) {
                throw toxtrace::ConfigError("--penalty must be positive");
            }
            cpd.penalty = penalty_arg;
        }
        if (cmd_cpd->count("--n-bkps") > 0) {
            if (n_bkps_arg < 0) {
                throw toxtrace::ConfigError("--n-bkps must be >= 0");
            }
            cpd.n_bkps = static_cast<std::size_t>(n_bkps_arg);
        }
        if (cmd_cpd->count("--bandwidth") > 0) {
            if (!(bandwidth_arg > 0)) {
                throw toxtrace::ConfigError("--bandwidth must be positive");
            }
            cpd.bandwidth = bandwidth_arg;
        }
        print_header("cpd", {{"chains", cpd.chains.string()},
                             {"signal", cpd.signal_csv.string()},
                             {"out", cpd.out.string()},
                             {"method", methods_arg},
                             {"cost", cpd.cost},
                             {"penalty", penalty_arg},
                             {"n_bkps", n_bkps_arg},
                             {"min_size", cpd.min_size},
                             {"bandwidth", bandwidth_arg}});
        const auto summary = toxtrace::run_cpd(cpd);
        if (summary.skipped_short > 0) {
            std::cerr << "warning: skipped " << summary.skipped_short
                      << " chains too short for min_size=" << cpd.min_size << "\n";
        }
        std::cout << "chains=" << summary.chains
                  << " records=" << summary.records << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        if (cmd_eval->count("--quorum") > 0) {
            if (quorum_arg < 1) {
                throw toxtrace::ConfigError("--quorum must be >= 1");
            }
            eval.quorum = static_cast<std::size_t>(quorum_arg);
        }
        eval.margins.clear();
        for (const std::string& m : split_csv(margins_arg)) {
            eval.margins.push_back(std::stoul(m));
        }
        print_header("eval", {{"cpd", eval.cpd.string()},
                              {"annotations", eval.annotations.string()},
                              {"out", eval.out.string()},
                              {"quorum", quorum_arg},
                              {"margins", margins_arg}});
        const auto summary = toxtrace::run_eval(eval);
        if (summary.missing_annotations > 0) {
            std::cerr << "warning: " << summary.missing_annotations
                      << " detector records had no annotations and were skipped\n";
        }
        if (summary.length_mismatches > 0) {
            std::cerr << "warning: " << summary.length_mismatches
                      << " records disagreed with annotations on series length\n";
        }
        std::cout << "evaluated=" << summary.evaluated << "\n";
        return 0;
    }

    if (cmd_report->parsed()) {
        print_header("report", {{"segments", report.segments.string()},
                                {"out", report.out.string()},
                                {"threshold", report.anchor_threshold}});
        const auto summary = toxtrace::run_report(report);
        std::cout << "channels=" << summary.channels
                  << " episodes=" << summary.episodes
                  << " chains=" << summary.chains << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const toxtrace::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
