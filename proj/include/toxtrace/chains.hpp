#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "toxtrace/segmentation.hpp"

namespace toxtrace {

inline constexpr double kDefaultAnchorThreshold = 0.7;
inline constexpr std::size_t kDefaultChainWindow = 10;

// An anchor segment plus up to `window` preceding and following segments from
// the same episode. Truncation counts record how much context the episode
// boundary cut off.
struct ConversationChain {
    std::string chain_id;
    std::string episode_id;
    std::string channel_id;
    std::size_t anchor_offset = 0;  // anchor position within `segments`
    std::vector<Segment> segments;  // consecutive by segment_index
    std::size_t truncated_head = 0;
    std::size_t truncated_tail = 0;

    const Segment& anchor() const { return segments.at(anchor_offset); }
    std::size_t length() const { return segments.size(); }
};

// A scored episode: the unit corpus-level statistics aggregate over.
struct EpisodeSegments {
    std::string episode_id;
    std::string channel_id;
    std::vector<Segment> segments;
};

struct ChannelStats {
    std::string channel_id;
    std::size_t episodes = 0;
    double avg_episode_minutes = 0.0;  // mean speech time per episode
    double avg_episode_tokens = 0.0;   // mean whitespace-token count
    std::size_t toxic_episodes = 0;    // episodes with at least one anchor
    std::size_t chains = 0;
    double pct_toxic_episodes = 0.0;  // [0, 100]
    double chain_share_pct = 0.0;     // [0, 100], shares sum to 100
};

struct CorpusStats {
    std::vector<ChannelStats> channels;  // episodes descending, then id
    std::size_t total_episodes = 0;
    std::size_t total_toxic_episodes = 0;
    std::size_t total_chains = 0;
};

// Indices of all segments with toxicity >= anchor_threshold, ascending.
// Throws MissingScoreError if any segment is unscored.
std::vector<std::size_t> find_anchors(const std::vector<Segment>& segments,
                                      double anchor_threshold = kDefaultAnchorThreshold);

// Materialize the chain around one anchor: segments [anchor-window,
// anchor+window] clipped to episode bounds, truncation counts recorded.
ConversationChain extract_chain(const std::vector<Segment>& segments,
                                std::size_t anchor, std::size_t window,
                                const std::string& episode_id,
                                const std::string& channel_id);

// One chain per anchor; overlapping chains permitted.
std::vector<ConversationChain> extract_all_chains(
    const EpisodeSegments& episode,
    double anchor_threshold = kDefaultAnchorThreshold,
    std::size_t window = kDefaultChainWindow);

// Per-channel toxic-episode percentages and chain shares. Empty corpus yields
// empty stats. Totals are invariant under episode order.
CorpusStats corpus_stats(const std::vector<EpisodeSegments>& corpus,
                         double anchor_threshold = kDefaultAnchorThreshold);

}  // namespace toxtrace
