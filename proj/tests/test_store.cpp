#include <doctest.h>

#include <sstream>

#include "toxtrace/error.hpp"
#include "toxtrace/store.hpp"

using namespace toxtrace;

namespace {

EpisodeSegments sample_episode(bool scored) {
    EpisodeSegments episode;
    episode.episode_id = "ep1";
    episode.channel_id = "ch1";
    for (int i = 0; i < 3; ++i) {
        Segment seg;
        seg.segment_index = static_cast<std::size_t>(i);
        seg.speaker_id = i % 2 == 0 ? "A" : "B";
        seg.start = 10.0 * i;
        seg.end = 10.0 * i + 9.5;
        seg.text = "segment number " + std::to_string(i);
        Chunk chunk;
        chunk.speaker_id = seg.speaker_id;
        chunk.start = seg.start;
        chunk.end = seg.end;
        chunk.text = seg.text;
        if (scored) {
            chunk.toxicity = 0.1 * i;
            seg.toxicity = 0.1 * i;
        }
        seg.chunks.push_back(chunk);
        episode.segments.push_back(std::move(seg));
    }
    return episode;
}

}  // namespace

TEST_SUITE("store") {

TEST_CASE("segment store round-trips scored and unscored records") {
    for (bool scored : {false, true}) {
        std::ostringstream out;
        store::write_segments(out, {sample_episode(scored)});

        std::istringstream in(out.str());
        const auto corpus = store::read_segments(in);
        REQUIRE(corpus.size() == 1);
        REQUIRE(corpus[0].segments.size() == 3);
        CHECK(corpus[0].episode_id == "ep1");
        CHECK(corpus[0].channel_id == "ch1");
        const Segment& seg = corpus[0].segments[1];
        CHECK(seg.speaker_id == "B");
        CHECK(seg.start == 10.0);
        CHECK(seg.text == "segment number 1");
        REQUIRE(seg.chunks.size() == 1);
        CHECK(seg.toxicity.has_value() == scored);
        CHECK(seg.chunks[0].toxicity.has_value() == scored);

        // Deterministic writer.
        std::ostringstream again;
        store::write_segments(again, {sample_episode(scored)});
        CHECK(again.str() == out.str());
    }
}

TEST_CASE("chain store round-trips") {
    ConversationChain chain;
    chain.chain_id = "ep1#5";
    chain.episode_id = "ep1";
    chain.channel_id = "ch1";
    chain.anchor_offset = 1;
    chain.truncated_head = 9;
    chain.truncated_tail = 0;
    for (int i = 4; i <= 6; ++i) {
        Segment seg;
        seg.segment_index = static_cast<std::size_t>(i);
        seg.speaker_id = "A";
        seg.start = i;
        seg.end = i + 0.5;
        seg.toxicity = 0.1 * i;
        seg.text = "t" + std::to_string(i);
        chain.segments.push_back(seg);
    }

    std::ostringstream out;
    store::write_chains(out, {chain});
    std::istringstream in(out.str());
    const auto chains = store::read_chains(in);
    REQUIRE(chains.size() == 1);
    CHECK(chains[0].chain_id == "ep1#5");
    CHECK(chains[0].anchor_offset == 1);
    CHECK(chains[0].truncated_head == 9);
    REQUIRE(chains[0].segments.size() == 3);
    CHECK(chains[0].segments[2].text == "t6");
    CHECK(*chains[0].segments[2].toxicity == doctest::Approx(0.6));
}

TEST_CASE("cpd records round-trip with parameters") {
    store::CpdRecord rec;
    rec.chain_id = "ep1#5";
    rec.method = "kernelcpd";
    rec.cost = "rbf";
    rec.params["n_bkps"] = 2;
    rec.params["min_size"] = 2;
    rec.breakpoints = {8, 14, 21};

    std::ostringstream out;
    store::write_cpd(out, {rec});
    std::istringstream in(out.str());
    const auto records = store::read_cpd(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].method == "kernelcpd");
    CHECK(records[0].breakpoints == std::vector<std::size_t>({8, 14, 21}));
    CHECK(records[0].params.at("n_bkps") == 2);
}

TEST_CASE("annotations group by chain and validate consistency") {
    std::istringstream in(
        R"({"chain_id":"c1","annotator_id":"a1","indices":[3,7],"n":21})"
        "\n"
        R"({"chain_id":"c1","annotator_id":"a2","indices":[3],"n":21})"
        "\n"
        R"({"chain_id":"c2","annotator_id":"a1","indices":[5],"n":12})"
        "\n");
    const auto sets = store::read_annotations(in);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].chain_id == "c1");
    CHECK(sets[0].annotators.size() == 2);
    CHECK(sets[0].series_length == 21);
    CHECK(sets[1].series_length == 12);

    std::istringstream mismatch(
        R"({"chain_id":"c1","annotator_id":"a1","indices":[3],"n":21})"
        "\n"
        R"({"chain_id":"c1","annotator_id":"a2","indices":[3],"n":20})"
        "\n");
    CHECK_THROWS_AS(store::read_annotations(mismatch), ParseError);

    std::istringstream duplicate(
        R"({"chain_id":"c1","annotator_id":"a1","indices":[3],"n":21})"
        "\n"
        R"({"chain_id":"c1","annotator_id":"a1","indices":[4],"n":21})"
        "\n");
    CHECK_THROWS_AS(store::read_annotations(duplicate), ParseError);
}

TEST_CASE("malformed store lines name the line number") {
    std::istringstream in("{\"episode_id\":\"e\"}\n");
    try {
        store::read_segments(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    std::istringstream garbage("not json at all\n");
    CHECK_THROWS_AS(store::read_segments(garbage), ParseError);
}

TEST_CASE("eval report CSV pivots methods into columns") {
    ChainMetrics a;
    a.chain_id = "c1";
    a.method = "pelt";
    a.hausdorff_distance = 3.0;
    a.rand = 0.5;
    a.precision[1] = 1.0;
    a.recall[1] = 0.5;
    ChainMetrics b = a;
    b.method = "binseg";
    b.hausdorff_distance = 7.0;

    const EvalReport report = aggregate_report({a, b}, {1});
    std::ostringstream out;
    store::write_eval_report_csv(out, report, {1});
    const std::string csv = out.str();
    CHECK(csv.find("metric,aggregation,binseg,pelt") == 0);
    CHECK(csv.find("hausdorff,avg,7,3") != std::string::npos);
    CHECK(csv.find("precision@1,avg") != std::string::npos);
}

TEST_CASE("signal CSV: rows become samples, columns dimensions") {
    std::istringstream uni("0.5\n0.25\n\n0.75\n");
    const Signal u = store::read_signal_csv(uni);
    CHECK(u.size() == 3);
    CHECK(u.dim() == 1);
    CHECK(u.point(1)[0] == 0.25);

    std::istringstream multi("1,0\n0,1\n0.5,0.5\n");
    const Signal m = store::read_signal_csv(multi);
    CHECK(m.size() == 3);
    CHECK(m.dim() == 2);
    CHECK(m.point(2)[1] == 0.5);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(store::read_signal_csv(ragged), ParseError);
    std::istringstream text("1\ntwo\n");
    CHECK_THROWS_AS(store::read_signal_csv(text), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(store::read_signal_csv(empty), ParseError);
}

TEST_CASE("missing upstream artifacts raise stage-ordering errors") {
    CHECK_THROWS_AS(
        store::read_file_checked("/nonexistent/path/segments.jsonl", "ingest"),
        StageOrderError);
    CHECK_THROWS_AS(store::read_file_checked("/nonexistent/plain.txt", ""),
                    Error);
}

}  // TEST_SUITE
