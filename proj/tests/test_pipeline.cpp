#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "toxtrace/error.hpp"
#include "toxtrace/pipeline.hpp"
#include "toxtrace/store.hpp"

using namespace toxtrace;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TOXTRACE_FIXTURES_DIR;

fs::path fresh_dir() {
    static std::mt19937_64 rng(std::random_device{}());
    const fs::path dir =
        fs::temp_directory_path() / ("toxtrace-pipe-" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

// ingest + lexicon score over the bundled fixtures.
fs::path scored_fixture_store(const fs::path& dir) {
    IngestOptions ingest;
    ingest.manifest = kFixtures / "manifest.jsonl";
    ingest.out = dir / "segments.jsonl";
    run_ingest(ingest);

    ScoreOptions score;
    score.segments = dir / "segments.jsonl";
    score.out = dir / "scored.jsonl";
    score.lexicon = kFixtures / "lexicon.csv";
    run_score(score);
    return score.out;
}

std::vector<EpisodeSegments> load_store(const fs::path& path) {
    std::istringstream in(store::read_file_checked(path, ""));
    return store::read_segments(in);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("ingest summary matches the hand-computed fixture counts") {
    const fs::path dir = fresh_dir();
    IngestOptions options;
    options.manifest = kFixtures / "manifest.jsonl";
    options.out = dir / "segments.jsonl";
    const IngestSummary summary = run_ingest(options);

    // ep01: 31 alternating 12 s turns -> 31 chunks/segments.
    // ep02: 23 records, 1 trimmed, 1 dropped -> 22 turns; the 40 s opener
    //       makes 3 chunks and two adjacent S4 turns club, so 24 chunks in
    //       21 segments.
    // ep03: 8 alternating 10 s turns.
    CHECK(summary.episodes == 3);
    CHECK(summary.turns == 61);
    CHECK(summary.trimmed == 1);
    CHECK(summary.dropped == 1);
    CHECK(summary.chunks == 63);
    CHECK(summary.segments == 60);

    const auto corpus = load_store(options.out);
    REQUIRE(corpus.size() == 3);
    CHECK(corpus[0].segments.size() == 31);
    CHECK(corpus[1].segments.size() == 21);
    CHECK(corpus[2].segments.size() == 8);
    CHECK(corpus[1].segments[0].chunks.size() == 3);   // 40 s turn
    CHECK(corpus[1].segments[5].chunks.size() == 2);   // clubbed S4 turns
    CHECK(corpus[1].segments[2].start == 50.0);        // trimmed overlap

    fs::remove_all(dir);
}

TEST_CASE("an empty manifest is a no-op with a warning flag") {
    const fs::path dir = fresh_dir();
    std::ofstream(dir / "empty.jsonl").close();
    IngestOptions options;
    options.manifest = dir / "empty.jsonl";
    options.out = dir / "segments.jsonl";
    const IngestSummary summary = run_ingest(options);
    CHECK(summary.empty_manifest);
    CHECK_FALSE(fs::exists(options.out));
    fs::remove_all(dir);
}

TEST_CASE("a manifest referencing a missing file names the path") {
    const fs::path dir = fresh_dir();
    {
        std::ofstream manifest(dir / "manifest.jsonl");
        manifest << R"({"path":"gone.jsonl","episode_id":"x","channel_id":"y"})"
                 << "\n";
    }
    IngestOptions options;
    options.manifest = dir / "manifest.jsonl";
    options.out = dir / "segments.jsonl";
    try {
        run_ingest(options);
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("gone.jsonl") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("lexicon scoring yields the hand-computed segment scores") {
    const fs::path dir = fresh_dir();
    const fs::path scored = scored_fixture_store(dir);
    const auto corpus = load_store(scored);
    REQUIRE(corpus.size() == 3);

    const auto& ep01 = corpus[0].segments;
    // noisy-OR: idiot 0.8 + trash 0.6 -> 1 - 0.2*0.4
    CHECK(*ep01[15].toxicity == doctest::Approx(0.92));
    CHECK(*ep01[13].toxicity == doctest::Approx(0.3));
    // ridiculous 0.25 + nonsense 0.3 -> 1 - 0.75*0.7
    CHECK(*ep01[17].toxicity == doctest::Approx(0.475));
    CHECK(*ep01[20].toxicity == doctest::Approx(0.5));
    CHECK(*ep01[0].toxicity == 0.0);

    const auto& ep02 = corpus[1].segments;
    CHECK(*ep02[1].toxicity == doctest::Approx(0.96));    // idiot twice
    CHECK(*ep02[14].toxicity == doctest::Approx(0.925));  // moron + stupid

    for (const auto& seg : corpus[2].segments) {
        CHECK(*seg.toxicity == 0.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("re-scoring a scored store invokes the scorer zero times") {
    const fs::path dir = fresh_dir();
    const fs::path scored = scored_fixture_store(dir);

    ScoreOptions again;
    again.segments = scored;
    again.out = dir / "rescored.jsonl";
    again.lexicon = kFixtures / "lexicon.csv";
    const ScoreSummary summary = run_score(again);
    CHECK(summary.scored == 0);
    CHECK(summary.reused == summary.chunks);
    CHECK(store::read_file_checked(scored, "") ==
          store::read_file_checked(again.out, ""));
    fs::remove_all(dir);
}

TEST_CASE("an unknown scorer name is a configuration error") {
    ScoreOptions options;
    options.segments = kFixtures / "manifest.jsonl";  // never reached
    options.scorer = "oracle";
    CHECK_THROWS_AS(run_score(options), Error);
}

TEST_CASE("chain extraction produces the three fixture chains") {
    const fs::path dir = fresh_dir();
    ChainsOptions options;
    options.segments = scored_fixture_store(dir);
    options.out = dir / "chains.jsonl";
    const ChainsSummary summary = run_chains(options);
    CHECK(summary.episodes == 3);
    CHECK(summary.chains == 3);
    CHECK(summary.truncated == 2);

    std::istringstream in(store::read_file_checked(options.out, ""));
    const auto chains = store::read_chains(in);
    REQUIRE(chains.size() == 3);
    CHECK(chains[0].chain_id == "ep01#15");
    CHECK(chains[0].segments.size() == 21);
    CHECK(chains[0].anchor_offset == 10);
    CHECK(chains[1].chain_id == "ep02#1");
    CHECK(chains[1].segments.size() == 12);
    CHECK(chains[1].truncated_head == 9);
    CHECK(chains[2].chain_id == "ep02#14");
    CHECK(chains[2].segments.size() == 17);
    CHECK(chains[2].truncated_tail == 4);
    fs::remove_all(dir);
}

TEST_CASE("missing upstream stores raise stage-ordering errors") {
    const fs::path dir = fresh_dir();
    ChainsOptions chains;
    chains.segments = dir / "absent.jsonl";
    chains.out = dir / "chains.jsonl";
    CHECK_THROWS_AS(run_chains(chains), StageOrderError);

    CpdOptions cpd;
    cpd.chains = dir / "absent.jsonl";
    cpd.out = dir / "cpd.jsonl";
    CHECK_THROWS_AS(run_cpd(cpd), StageOrderError);
    fs::remove_all(dir);
}

TEST_CASE("stats over an empty chain store writes header-only reports") {
    const fs::path dir = fresh_dir();
    std::ofstream(dir / "chains.jsonl").close();
    StatsOptions options;
    options.chains = dir / "chains.jsonl";
    options.out_stats = dir / "stats.csv";
    options.out_keywords = dir / "keywords.csv";
    const StatsSummary summary = run_stats(options);
    CHECK(summary.chains == 0);
    CHECK(store::read_file_checked(options.out_stats, "") ==
          "measure,position,mean,ci_low,ci_high,n\n");
    CHECK(store::read_file_checked(options.out_keywords, "") ==
          "window,token,count\n");
    fs::remove_all(dir);
}

TEST_CASE("stats over the fixture chains covers every measure") {
    const fs::path dir = fresh_dir();
    ChainsOptions chains;
    chains.segments = scored_fixture_store(dir);
    chains.out = dir / "chains.jsonl";
    run_chains(chains);

    StatsOptions options;
    options.chains = chains.out;
    options.out_stats = dir / "stats.csv";
    options.out_keywords = dir / "keywords.csv";
    const StatsSummary summary = run_stats(options);
    CHECK(summary.chains == 3);
    CHECK(summary.segment_rows == 21 + 12 + 17);

    const std::string csv = store::read_file_checked(options.out_stats, "");
    for (const char* measure :
         {"duration", "token_count", "ttr", "entropy", "perplexity"}) {
        CHECK(csv.find(measure) != std::string::npos);
    }
    // The anchor rows (position 0) have three observations.
    CHECK(csv.find("duration,0,") != std::string::npos);

    const std::string keywords = store::read_file_checked(options.out_keywords, "");
    CHECK(keywords.find("anchor,idiot,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cpd writes one record per chain and method with parameters") {
    const fs::path dir = fresh_dir();
    ChainsOptions chains;
    chains.segments = scored_fixture_store(dir);
    chains.out = dir / "chains.jsonl";
    run_chains(chains);

    CpdOptions options;
    options.chains = chains.out;
    options.out = dir / "cpd.jsonl";
    options.methods = {"pelt", "kernelcpd", "binseg", "bottomup"};
    options.cost = "rbf";
    const CpdSummary summary = run_cpd(options);
    CHECK(summary.chains == 3);
    CHECK(summary.records == 12);
    CHECK(summary.skipped_short == 0);

    std::istringstream in(store::read_file_checked(options.out, ""));
    const auto records = store::read_cpd(in);
    REQUIRE(records.size() == 12);
    for (const auto& record : records) {
        CHECK(!record.breakpoints.empty());
        CHECK(record.params.count("min_size") == 1);
        // Detection mode is recorded: penalized runs carry the resolved
        // penalty, fixed-count runs carry n_bkps.
        CHECK(record.params.count("penalty") + record.params.count("n_bkps") == 1);
        const std::size_t n = record.breakpoints.back();
        CHECK((n == 21 || n == 12 || n == 17));
    }
    fs::remove_all(dir);
}

TEST_CASE("cpd standalone mode detects over a raw signal CSV") {
    const fs::path dir = fresh_dir();
    {
        std::ofstream csv(dir / "steps.csv");
        for (int i = 0; i < 6; ++i) csv << 0.0 << "\n";
        for (int i = 0; i < 6; ++i) csv << 5.0 << "\n";
    }
    CpdOptions options;
    options.signal_csv = dir / "steps.csv";
    options.out = dir / "cpd.jsonl";
    options.methods = {"kernelcpd"};
    options.n_bkps = 1;
    const CpdSummary summary = run_cpd(options);
    CHECK(summary.records == 1);

    std::istringstream in(store::read_file_checked(options.out, ""));
    const auto records = store::read_cpd(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].chain_id == "steps");
    CHECK(records[0].breakpoints == std::vector<std::size_t>({6, 12}));

    CpdOptions both = options;
    both.chains = dir / "chains.jsonl";
    CHECK_THROWS_AS(run_cpd(both), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("eval reproduces hand-computed metrics for known breakpoints") {
    const fs::path dir = fresh_dir();
    // Handcrafted detector output against the bundled annotations. Consensus
    // (quorum 2): ep01#15 -> {8,13}; ep02#1 -> {3}; ep02#14 -> {10,12}.
    std::vector<store::CpdRecord> records;
    records.push_back({"ep01#15", "fixed", "rbf", {}, {8, 14, 21}});
    records.push_back({"ep02#1", "fixed", "rbf", {}, {3, 12}});
    records.push_back({"ep02#14", "fixed", "rbf", {}, {10, 12, 17}});
    {
        std::ostringstream out;
        store::write_cpd(out, records);
        std::ofstream file(dir / "cpd.jsonl");
        file << out.str();
    }

    EvalOptions options;
    options.cpd = dir / "cpd.jsonl";
    options.annotations = kFixtures / "annotations.jsonl";
    options.out = dir / "report.csv";
    const EvalSummary summary = run_eval(options);
    CHECK(summary.evaluated == 3);
    CHECK(summary.missing_annotations == 0);

    // Hausdorff per chain: {8,14} vs {8,13} -> 1; exact matches -> 0, 0.
    // So avg 1/3, median 0; precision@1 and recall@1 are 1 for all chains.
    const std::string csv = store::read_file_checked(options.out, "");
    CHECK(csv.find("metric,aggregation,fixed") == 0);
    CHECK(csv.find("hausdorff,avg,0.3333333333") != std::string::npos);
    CHECK(csv.find("hausdorff,med,0") != std::string::npos);
    CHECK(csv.find("precision@1,avg,1") != std::string::npos);
    CHECK(csv.find("recall@1,avg,1") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("report writes per-channel shares from the scored store") {
    const fs::path dir = fresh_dir();
    ReportOptions options;
    options.segments = scored_fixture_store(dir);
    options.out = dir / "corpus.csv";
    const ReportSummary summary = run_report(options);
    CHECK(summary.channels == 2);
    CHECK(summary.episodes == 3);
    CHECK(summary.chains == 3);

    const std::string csv = store::read_file_checked(options.out, "");
    // Independently derived from the raw fixture files: alpha speech
    // time (372 + 250) s over 2 episodes = 5.2 min, 516 tokens / 2 = 258.
    CHECK(csv.find("alpha-talk,2,5.2,258,2,100,3,100.0") != std::string::npos);
    CHECK(csv.find("beta-news,1,1.3,78,0,0,0,0.0") != std::string::npos);
    fs::remove_all(dir);
}

}  // TEST_SUITE
