#include "toxtrace/chains.hpp"

#include <algorithm>
#include <map>

#include "toxtrace/error.hpp"

namespace toxtrace {

std::vector<std::size_t> find_anchors(const std::vector<Segment>& segments,
                                      double anchor_threshold) {
    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!segments[i].toxicity.has_value()) {
            throw MissingScoreError("segment " + std::to_string(i) +
                                    " has no toxicity score");
        }
        if (*segments[i].toxicity >= anchor_threshold) {
            anchors.push_back(i);
        }
    }
    return anchors;
}

ConversationChain extract_chain(const std::vector<Segment>& segments,
                                std::size_t anchor, std::size_t window,
                                const std::string& episode_id,
                                const std::string& channel_id) {
    if (anchor >= segments.size()) {
        throw IndexError("anchor index " + std::to_string(anchor) +
                         " out of bounds (episode has " +
                         std::to_string(segments.size()) + " segments)");
    }
    const std::size_t lo = anchor >= window ? anchor - window : 0;
    const std::size_t hi = std::min(segments.size() - 1, anchor + window);

    ConversationChain chain;
    chain.episode_id = episode_id;
    chain.channel_id = channel_id;
    chain.chain_id =
        episode_id + "#" + std::to_string(segments[anchor].segment_index);
    chain.anchor_offset = anchor - lo;
    chain.truncated_head = window - (anchor - lo);
    chain.truncated_tail = window - (hi - anchor);
    chain.segments.assign(segments.begin() + static_cast<std::ptrdiff_t>(lo),
                          segments.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    return chain;
}

std::vector<ConversationChain> extract_all_chains(const EpisodeSegments& episode,
                                                  double anchor_threshold,
                                                  std::size_t window) {
    std::vector<ConversationChain> chains;
    for (std::size_t anchor : find_anchors(episode.segments, anchor_threshold)) {
        chains.push_back(extract_chain(episode.segments, anchor, window,
                                       episode.episode_id, episode.channel_id));
    }
    return chains;
}

CorpusStats corpus_stats(const std::vector<EpisodeSegments>& corpus,
                         double anchor_threshold) {
    std::map<std::string, ChannelStats> by_channel;
    std::map<std::string, double> speech_seconds;
    std::map<std::string, double> token_counts;
    CorpusStats stats;
    for (const EpisodeSegments& episode : corpus) {
        ChannelStats& ch = by_channel[episode.channel_id];
        ch.channel_id = episode.channel_id;
        ch.episodes += 1;
        for (const Segment& seg : episode.segments) {
            speech_seconds[episode.channel_id] += seg.duration();
            token_counts[episode.channel_id] +=
                static_cast<double>(whitespace_tokens(seg.text).size());
        }
        const std::size_t anchors =
            find_anchors(episode.segments, anchor_threshold).size();
        if (anchors > 0) {
            ch.toxic_episodes += 1;
        }
        ch.chains += anchors;
        stats.total_episodes += 1;
        stats.total_toxic_episodes += anchors > 0 ? 1 : 0;
        stats.total_chains += anchors;
    }

    for (auto& [id, ch] : by_channel) {
        const double episodes = static_cast<double>(ch.episodes);
        ch.avg_episode_minutes = speech_seconds[id] / 60.0 / episodes;
        ch.avg_episode_tokens = token_counts[id] / episodes;
        ch.pct_toxic_episodes =
            ch.episodes == 0
                ? 0.0
                : 100.0 * static_cast<double>(ch.toxic_episodes) /
                      static_cast<double>(ch.episodes);
        ch.chain_share_pct =
            stats.total_chains == 0
                ? 0.0
                : 100.0 * static_cast<double>(ch.chains) /
                      static_cast<double>(stats.total_chains);
        stats.channels.push_back(ch);
    }
    std::sort(stats.channels.begin(), stats.channels.end(),
              [](const ChannelStats& a, const ChannelStats& b) {
                  if (a.episodes != b.episodes) return a.episodes > b.episodes;
                  return a.channel_id < b.channel_id;
              });
    return stats;
}

}  // namespace toxtrace
