#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "toxtrace/chains.hpp"
#include "toxtrace/error.hpp"

using namespace toxtrace;

namespace {

std::vector<Segment> scored_segments(const std::vector<double>& scores) {
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        Segment seg;
        seg.segment_index = i;
        seg.speaker_id = "S" + std::to_string(i % 2);
        seg.start = 10.0 * static_cast<double>(i);
        seg.end = seg.start + 10.0;
        seg.text = "segment " + std::to_string(i);
        seg.toxicity = scores[i];
        segments.push_back(std::move(seg));
    }
    return segments;
}

EpisodeSegments episode_with(const std::vector<double>& scores,
                             const std::string& episode = "ep",
                             const std::string& channel = "ch") {
    return {episode, channel, scored_segments(scores)};
}

}  // namespace

TEST_SUITE("chains") {

TEST_CASE("the anchor threshold is inclusive") {
    CHECK(find_anchors(scored_segments({0.1, 0.7, 0.69})) ==
          std::vector<std::size_t>{1});
    CHECK(find_anchors(scored_segments({0.2, 0.3})).empty());
    CHECK(find_anchors(scored_segments({0.9, 0.95})) ==
          std::vector<std::size_t>{0, 1});
}

TEST_CASE("an unscored segment fails anchor search") {
    auto segments = scored_segments({0.5, 0.9});
    segments[1].toxicity.reset();
    CHECK_THROWS_AS(find_anchors(segments), MissingScoreError);
}

TEST_CASE("interior anchor: 21 segments with the anchor in the middle") {
    const auto segments = scored_segments(std::vector<double>(30, 0.1));
    const auto chain = extract_chain(segments, 15, 10, "ep", "ch");
    CHECK(chain.segments.size() == 21);
    CHECK(chain.anchor_offset == 10);
    CHECK(chain.truncated_head == 0);
    CHECK(chain.truncated_tail == 0);
    CHECK(chain.segments.front().segment_index == 5);
    CHECK(chain.segments.back().segment_index == 25);
    CHECK(chain.chain_id == "ep#15");
}

TEST_CASE("anchor near the episode start is head-truncated") {
    const auto segments = scored_segments(std::vector<double>(30, 0.1));
    // lo clips to 0 -> 3 preceding + anchor + 10 following = 14 segments.
    const auto chain = extract_chain(segments, 3, 10, "ep", "ch");
    CHECK(chain.segments.size() == 14);
    CHECK(chain.anchor_offset == 3);
    CHECK(chain.truncated_head == 7);
    CHECK(chain.truncated_tail == 0);
}

TEST_CASE("anchor at the last index is tail-truncated") {
    const auto segments = scored_segments(std::vector<double>(30, 0.1));
    // 10 preceding + anchor, nothing follows.
    const auto chain = extract_chain(segments, 29, 10, "ep", "ch");
    CHECK(chain.segments.size() == 11);
    CHECK(chain.anchor_offset == 10);
    CHECK(chain.truncated_head == 0);
    CHECK(chain.truncated_tail == 10);
}

TEST_CASE("anchor out of bounds is an index error") {
    const auto segments = scored_segments({0.1, 0.2});
    CHECK_THROWS_AS(extract_chain(segments, 2, 10, "ep", "ch"), IndexError);
}

TEST_CASE("one chain per anchor, never crossing the episode") {
    std::mt19937 rng(333);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> scores;
        const int n = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            scores.push_back((rng() % 100) / 100.0);
        }
        const EpisodeSegments episode = episode_with(scores);
        const auto anchors = find_anchors(episode.segments, 0.7);
        const auto chains = extract_all_chains(episode, 0.7, 10);
        CHECK(chains.size() == anchors.size());
        for (const auto& chain : chains) {
            CHECK(*chain.anchor().toxicity >= 0.7);
            CHECK(chain.segments.size() <= 21);
            CHECK(chain.truncated_head <= 10);
            CHECK(chain.truncated_tail <= 10);
            CHECK(chain.segments.size() + chain.truncated_head +
                      chain.truncated_tail ==
                  21);
            // Consecutive by segment_index, inside the episode.
            for (std::size_t i = 0; i + 1 < chain.segments.size(); ++i) {
                CHECK(chain.segments[i + 1].segment_index ==
                      chain.segments[i].segment_index + 1);
            }
            if (chain.truncated_head == 0 && chain.truncated_tail == 0) {
                CHECK(chain.segments.size() == 21);
                CHECK(chain.anchor_offset == 10);
            }
        }
    }
}

TEST_CASE("corpus stats reproduce the 440-episode channel arithmetic") {
    std::vector<EpisodeSegments> corpus;
    for (int i = 0; i < 440; ++i) {
        const double score = i < 380 ? 0.9 : 0.1;
        corpus.push_back(episode_with({score}, "ep" + std::to_string(i), "levin"));
    }
    const CorpusStats stats = corpus_stats(corpus, 0.7);
    REQUIRE(stats.channels.size() == 1);
    CHECK(stats.channels[0].episodes == 440);
    CHECK(stats.channels[0].toxic_episodes == 380);
    CHECK(std::lround(stats.channels[0].pct_toxic_episodes) == 86);
    CHECK(stats.channels[0].chains == 380);
    CHECK(stats.channels[0].chain_share_pct == doctest::Approx(100.0));
    // Each fixture episode is one 10 s two-token segment.
    CHECK(stats.channels[0].avg_episode_minutes == doctest::Approx(10.0 / 60.0));
    CHECK(stats.channels[0].avg_episode_tokens == doctest::Approx(2.0));
}

TEST_CASE("a channel without anchors reports zero percent") {
    const CorpusStats stats = corpus_stats(
        {episode_with({0.2, 0.1}, "e1", "quiet"),
         episode_with({0.3}, "e2", "quiet")},
        0.7);
    REQUIRE(stats.channels.size() == 1);
    CHECK(stats.channels[0].pct_toxic_episodes == 0.0);
    CHECK(stats.channels[0].chains == 0);
}

TEST_CASE("chain shares sum to 100 and ignore episode order") {
    std::vector<EpisodeSegments> corpus = {
        episode_with({0.9, 0.1}, "a1", "chan-a"),
        episode_with({0.8, 0.95}, "a2", "chan-a"),
        episode_with({0.75}, "b1", "chan-b"),
        episode_with({0.1}, "b2", "chan-b"),
    };
    const CorpusStats forward = corpus_stats(corpus, 0.7);
    std::reverse(corpus.begin(), corpus.end());
    const CorpusStats backward = corpus_stats(corpus, 0.7);

    double share = 0.0;
    for (const auto& ch : forward.channels) share += ch.chain_share_pct;
    CHECK(share == doctest::Approx(100.0));
    CHECK(forward.total_chains == 4);

    REQUIRE(forward.channels.size() == backward.channels.size());
    for (std::size_t i = 0; i < forward.channels.size(); ++i) {
        CHECK(forward.channels[i].channel_id == backward.channels[i].channel_id);
        CHECK(forward.channels[i].chains == backward.channels[i].chains);
        CHECK(forward.channels[i].pct_toxic_episodes ==
              doctest::Approx(backward.channels[i].pct_toxic_episodes));
    }
}

TEST_CASE("empty corpus produces empty stats, not an error") {
    const CorpusStats stats = corpus_stats({}, 0.7);
    CHECK(stats.channels.empty());
    CHECK(stats.total_chains == 0);
}

}  // TEST_SUITE
