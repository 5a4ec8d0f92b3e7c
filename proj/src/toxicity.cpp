#include "toxtrace/toxicity.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "toxtrace/error.hpp"
#include "toxtrace/textstats.hpp"

namespace toxtrace {

std::string text_hash(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

ScoreCache::ScoreCache(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) {
        return;
    }
    std::ifstream in(file_);
    if (!in) {
        throw Error("cannot open cache file: " + file_.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid cache record: ") + e.what(),
                             lineno);
        }
        if (!rec.contains("scorer") || !rec.contains("hash") ||
            !rec.contains("value") || !rec["value"].is_number()) {
            throw ParseError("cache record missing scorer/hash/value", lineno);
        }
        entries_[{rec["scorer"].get<std::string>(),
                  rec["hash"].get<std::string>()}] = rec["value"].get<double>();
    }
}

std::optional<double> ScoreCache::lookup(const std::string& scorer_id,
                                         const std::string& hash) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find({scorer_id, hash});
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ScoreCache::insert(const std::string& scorer_id, const std::string& hash,
                        double value) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[{scorer_id, hash}] = value;
    if (!file_.empty()) {
        std::ofstream out(file_, std::ios::app);
        if (!out) {
            throw Error("cannot append to cache file: " + file_.string());
        }
        nlohmann::json rec{{"scorer", scorer_id}, {"hash", hash}, {"value", value}};
        out << rec.dump() << '\n';
    }
}

std::size_t ScoreCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Lexicon load_lexicon(std::istream& input) {
    Lexicon lexicon;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(input, line)) {
        ++lineno;
        const std::string stripped = trim_copy(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t comma = stripped.rfind(',');
        if (comma == std::string::npos || comma == 0) {
            throw ParseError("expected \"term,weight\"", lineno);
        }
        std::string term = trim_copy(stripped.substr(0, comma));
        const std::string weight_str = trim_copy(stripped.substr(comma + 1));
        double weight = 0.0;
        try {
            std::size_t used = 0;
            weight = std::stod(weight_str, &used);
            if (used != weight_str.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("weight is not a number: \"" + weight_str + "\"",
                             lineno);
        }
        if (!(weight > 0.0) || weight > 1.0) {
            throw ParseError("weight must be in (0, 1]", lineno);
        }
        std::transform(term.begin(), term.end(), term.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        lexicon[term] = weight;
    }
    return lexicon;
}

Lexicon load_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open lexicon file: " + path.string());
    }
    return load_lexicon(in);
}

double lexicon_score(const std::string& text, const Lexicon& lexicon) {
    if (lexicon.empty()) {
        return 0.0;
    }
    double miss_prob = 1.0;
    for (const std::string& token : tokenize(text)) {
        const auto it = lexicon.find(token);
        if (it != lexicon.end()) {
            miss_prob *= 1.0 - it->second;
        }
    }
    return std::clamp(1.0 - miss_prob, 0.0, 1.0);
}

LexiconScorer::LexiconScorer(Lexicon lexicon) : lexicon_(std::move(lexicon)) {
    if (lexicon_.empty()) {
        throw ConfigError("lexicon is empty");
    }
    std::ostringstream canonical;
    for (const auto& [term, weight] : lexicon_) {
        canonical << term << ',' << weight << '\n';
    }
    id_ = "lexicon-" + text_hash(canonical.str());
}

double LexiconScorer::score(const std::string& text) {
    return lexicon_score(text, lexicon_);
}

// ---------------------------------------------------------------------------
// Remote scorer

namespace {

// Keeps request starts at least 1/qps apart.
class RateLimiter {
public:
    explicit RateLimiter(double qps) {
        if (qps > 0.0) {
            interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(1.0 / qps));
        }
    }

    void acquire() {
        if (interval_.count() == 0) return;
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            wake = std::max(now, next_);
            next_ = wake + interval_;
        }
        std::this_thread::sleep_until(wake);
    }

private:
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_{};
    std::chrono::steady_clock::duration interval_{};
};

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path...
};

EndpointParts split_endpoint(const std::string& endpoint) {
    const std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + endpoint);
    }
    const std::string scheme = endpoint.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported endpoint scheme: " + scheme);
    }
    const std::size_t path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {endpoint, "/"};
    }
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

struct RemoteScorer::Impl {
    explicit Impl(const RemoteScorerConfig& config)
        : limiter(config.qps), parts(split_endpoint(config.endpoint)),
          client(parts.base) {
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(30, 0);
    }

    RateLimiter limiter;
    EndpointParts parts;
    httplib::Client client;
    std::atomic<int> requests{0};
};

RemoteScorer::RemoteScorer(RemoteScorerConfig config)
    : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ConfigError("remote scorer requires an endpoint URL");
    }
    if (config_.max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
    impl_ = std::make_unique<Impl>(config_);
}

RemoteScorer::~RemoteScorer() = default;

int RemoteScorer::requests_sent() const { return impl_->requests.load(); }

double RemoteScorer::score(const std::string& text) {
    nlohmann::json body{
        {"comment", {{"text", text}}},
        {"requestedAttributes", {{config_.attribute, nlohmann::json::object()}}},
        {"doNotStore", config_.do_not_store},
    };
    const std::string payload = body.dump();
    std::string path = impl_->parts.path;
    if (!config_.api_key.empty()) {
        path += (path.find('?') == std::string::npos ? "?" : "&");
        path += "key=" + config_.api_key;
    }

    std::string last_failure = "no request attempted";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
        }
        impl_->limiter.acquire();
        impl_->requests.fetch_add(1);
        httplib::Result res =
            impl_->client.Post(path, payload, "application/json");
        if (!res) {
            last_failure = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw ScorerError(ScorerError::Kind::permanent,
                                  std::string("malformed response body: ") + e.what());
            }
            const auto score = parsed.value(
                nlohmann::json::json_pointer("/attributeScores/" + config_.attribute +
                                             "/summaryScore/value"),
                nlohmann::json());
            if (!score.is_number()) {
                throw ScorerError(ScorerError::Kind::permanent,
                                  "response lacks summary score for " +
                                      config_.attribute);
            }
            const double value = score.get<double>();
            if (value < 0.0 || value > 1.0) {
                throw ScorerError(ScorerError::Kind::permanent,
                                  "summary score outside [0, 1]: " +
                                      std::to_string(value));
            }
            return value;
        }
        if (res->status == 429) {
            last_failure = "rate limited (429)";
            continue;
        }
        if (res->status >= 400 && res->status < 500) {
            throw ScorerError(ScorerError::Kind::permanent,
                              "scorer rejected request with status " +
                                  std::to_string(res->status));
        }
        last_failure = "server error (status " + std::to_string(res->status) + ")";
    }
    throw ScorerError(ScorerError::Kind::transient,
                      "retries exhausted: " + last_failure);
}

// ---------------------------------------------------------------------------

ToxicityScore score_text(const std::string& text, Scorer& scorer,
                         ScoreCache& cache) {
    if (trim_copy(text).empty()) {
        throw PreconditionError("cannot score empty text");
    }
    if (scorer.max_text_bytes() > 0 && text.size() > scorer.max_text_bytes()) {
        throw ScorerError(ScorerError::Kind::must_split,
                          "text of " + std::to_string(text.size()) +
                              " bytes exceeds scorer limit of " +
                              std::to_string(scorer.max_text_bytes()) +
                              " bytes; split it into chunks");
    }
    const std::string hash = text_hash(text);
    if (const auto cached = cache.lookup(scorer.id(), hash)) {
        return {*cached, scorer.id(), hash};
    }
    const double value = scorer.score(text);
    cache.insert(scorer.id(), hash, value);
    return {value, scorer.id(), hash};
}

std::vector<ScoreOutcome> score_batch(const std::vector<std::string>& texts,
                                      Scorer& scorer, ScoreCache& cache) {
    std::vector<ScoreOutcome> outcomes;
    outcomes.reserve(texts.size());
    for (const std::string& text : texts) {
        ScoreOutcome outcome;
        try {
            outcome.score = score_text(text, scorer, cache);
        } catch (const Error& e) {
            outcome.error = e.what();
        }
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

}  // namespace toxtrace
