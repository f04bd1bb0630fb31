#ifndef VERSEWRIGHT_REVIEW_HPP_
#define VERSEWRIGHT_REVIEW_HPP_

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "versewright/emotion.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"

// Human-evaluation campaigns backed by an append-only JSON-lines event log.
// The in-memory view is a pure function of the log: replaying it from empty
// rebuilds exactly the state a running service holds.
namespace versewright::review {

using nlohmann::json;

inline constexpr int kLogVersion = 1;
inline constexpr int kElicitedThreshold = 4;

enum class Kind { kEmotion, kDream };

inline const std::vector<std::string>& dream_dimensions() {
  static const std::vector<std::string> kDims = {"Quality1", "Quality2", "Quality3"};
  return kDims;
}

inline std::vector<std::string> emotion_dimensions() {
  return {kEmotionNames.begin(), kEmotionNames.end()};
}

// Raised for references to campaigns, reviewers, poems or dimensions that do
// not exist (HTTP 404), as opposed to malformed input (HTTP 400).
class NotFound : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Item {
  std::string id;
  std::string text;
  std::optional<Emotion> target;  // emotion campaigns only
};

struct Campaign {
  std::string id;
  Kind kind = Kind::kEmotion;
  std::vector<Item> items;
  std::vector<std::string> dimensions;
  std::vector<std::string> reviewers;

  std::optional<std::size_t> item_index(const std::string& poem) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].id == poem) return i;
    }
    return std::nullopt;
  }
  bool has_reviewer(const std::string& r) const {
    return std::find(reviewers.begin(), reviewers.end(), r) != reviewers.end();
  }
  bool has_dimension(const std::string& d) const {
    return std::find(dimensions.begin(), dimensions.end(), d) != dimensions.end();
  }
};

inline json to_json_spec(const Campaign& c) {
  json items = json::array();
  for (const auto& it : c.items) {
    json j{{"id", it.id}, {"text", it.text}};
    if (it.target) j["target"] = std::string(name_of(*it.target));
    items.push_back(std::move(j));
  }
  return {{"id", c.id},
          {"kind", c.kind == Kind::kEmotion ? "emotion" : "dream"},
          {"items", items},
          {"dimensions", c.dimensions},
          {"reviewers", c.reviewers}};
}

// Validates a campaign spec. Dimensions default to the eight emotions for
// emotion campaigns and Quality1..3 for dream campaigns.
inline Campaign campaign_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("campaign spec must be an object");
  Campaign c;
  try {
    c.id = j.at("id").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "emotion") {
      c.kind = Kind::kEmotion;
    } else if (kind == "dream") {
      c.kind = Kind::kDream;
    } else {
      throw ValidationError("kind must be 'emotion' or 'dream'");
    }
    for (const auto& ij : j.at("items")) {
      Item it;
      it.id = ij.at("id").get<std::string>();
      it.text = ij.at("text").get<std::string>();
      if (c.kind == Kind::kEmotion) {
        const std::string t = ij.at("target").get<std::string>();
        it.target = parse_emotion(t);
        if (!it.target) throw ValidationError("unknown target emotion '" + t + "'");
      }
      c.items.push_back(std::move(it));
    }
    if (j.contains("dimensions")) {
      c.dimensions = j.at("dimensions").get<std::vector<std::string>>();
    } else {
      c.dimensions = c.kind == Kind::kEmotion ? emotion_dimensions() : dream_dimensions();
    }
    c.reviewers = j.at("reviewers").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad campaign spec: ") + e.what());
  }
  if (c.id.empty()) throw ValidationError("campaign id must be non-empty");
  if (c.items.empty()) throw ValidationError("campaign needs at least one item");
  if (c.reviewers.empty()) throw ValidationError("campaign needs at least one reviewer");
  if (c.dimensions.empty()) throw ValidationError("campaign needs at least one dimension");
  auto unique = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  std::vector<std::string> ids;
  for (const auto& it : c.items) {
    if (it.id.empty()) throw ValidationError("item id must be non-empty");
    ids.push_back(it.id);
  }
  if (!unique(ids)) throw ValidationError("duplicate item id");
  if (!unique(c.dimensions)) throw ValidationError("duplicate dimension");
  if (!unique(c.reviewers)) throw ValidationError("duplicate reviewer");
  for (const auto& r : c.reviewers) {
    if (r.empty()) throw ValidationError("reviewer id must be non-empty");
  }
  if (c.kind == Kind::kEmotion) {
    for (const auto& it : c.items) {
      if (!c.has_dimension(std::string(name_of(*it.target)))) {
        throw ValidationError("target '" + std::string(name_of(*it.target)) +
                              "' of item '" + it.id + "' is not a dimension");
      }
    }
  }
  return c;
}

struct Rating {
  std::string campaign;
  std::string reviewer;
  std::string poem;
  std::string dimension;
  int likert = 0;
  std::int64_t timestamp_ms = 0;
  friend bool operator==(const Rating&, const Rating&) = default;
};

// Latest rating per (reviewer, poem, dimension).
using RatingKey = std::tuple<std::string, std::string, std::string>;
using RatingTable = std::map<RatingKey, Rating>;

struct NextItem {
  bool done = true;
  std::size_t index = 0;
  const Item* item = nullptr;
  std::vector<std::string> unanswered;
};

struct PoemElicitation {
  std::string poem;
  std::size_t raters = 0;
  std::size_t elicited = 0;
  std::optional<double> percent;
};

struct EmotionElicitation {
  Emotion emotion;
  std::vector<PoemElicitation> poems;
  std::optional<double> percent;
};

struct ElicitationReport {
  std::string campaign;
  std::vector<EmotionElicitation> emotions;  // canonical order, targets only
};

struct QualityCell {
  std::size_t raters = 0;
  std::optional<double> mean;
};

struct QualityReport {
  std::string campaign;
  std::vector<std::string> poems;
  std::vector<std::string> dimensions;
  std::vector<std::vector<QualityCell>> cells;  // [poem][dimension]
};

// Per poem: share of its raters scoring the target dimension >= 4, as a
// percentage. Per emotion: mean over that emotion's poems with any rater.
inline ElicitationReport compute_elicitation(const Campaign& c, const RatingTable& table) {
  if (c.kind != Kind::kEmotion) throw ValidationError("not an emotion campaign");
  ElicitationReport rep{c.id, {}};
  for (Emotion e : kAllEmotions) {
    EmotionElicitation ee{e, {}, std::nullopt};
    for (const auto& it : c.items) {
      if (it.target != e) continue;
      PoemElicitation pe{it.id, 0, 0, std::nullopt};
      for (const auto& r : c.reviewers) {
        auto found = table.find({r, it.id, std::string(name_of(e))});
        if (found == table.end()) continue;
        ++pe.raters;
        if (found->second.likert >= kElicitedThreshold) ++pe.elicited;
      }
      if (pe.raters > 0) {
        pe.percent = 100.0 * static_cast<double>(pe.elicited) / static_cast<double>(pe.raters);
      }
      ee.poems.push_back(std::move(pe));
    }
    if (ee.poems.empty()) continue;
    double sum = 0;
    std::size_t n = 0;
    for (const auto& pe : ee.poems) {
      if (pe.percent) {
        sum += *pe.percent;
        ++n;
      }
    }
    if (n > 0) ee.percent = sum / static_cast<double>(n);
    rep.emotions.push_back(std::move(ee));
  }
  return rep;
}

inline QualityReport compute_quality(const Campaign& c, const RatingTable& table) {
  QualityReport rep{c.id, {}, c.dimensions, {}};
  for (const auto& it : c.items) {
    rep.poems.push_back(it.id);
    std::vector<QualityCell> row;
    for (const auto& d : c.dimensions) {
      QualityCell cell;
      double sum = 0;
      for (const auto& r : c.reviewers) {
        auto found = table.find({r, it.id, d});
        if (found == table.end()) continue;
        ++cell.raters;
        sum += found->second.likert;
      }
      if (cell.raters > 0) cell.mean = sum / static_cast<double>(cell.raters);
      row.push_back(cell);
    }
    rep.cells.push_back(std::move(row));
  }
  return rep;
}

inline json to_json(const ElicitationReport& r) {
  json emotions = json::object();
  for (const auto& ee : r.emotions) {
    json poems = json::array();
    for (const auto& pe : ee.poems) {
      poems.push_back({{"id", pe.poem},
                       {"raters", pe.raters},
                       {"elicited", pe.elicited},
                       {"percent", pe.percent ? json(*pe.percent) : json(nullptr)},
                       {"undefined", !pe.percent.has_value()}});
    }
    emotions[std::string(name_of(ee.emotion))] = {
        {"percent", ee.percent ? json(*ee.percent) : json(nullptr)},
        {"undefined", !ee.percent.has_value()},
        {"poems", poems}};
  }
  return {{"campaign", r.campaign}, {"kind", "emotion"},
          {"threshold", kElicitedThreshold}, {"emotions", emotions}};
}

inline json to_json(const QualityReport& r) {
  json poems = json::array();
  for (std::size_t i = 0; i < r.poems.size(); ++i) {
    json scores = json::object();
    for (std::size_t d = 0; d < r.dimensions.size(); ++d) {
      const QualityCell& c = r.cells[i][d];
      scores[r.dimensions[d]] = {{"mean", c.mean ? json(*c.mean) : json(nullptr)},
                                 {"raters", c.raters},
                                 {"undefined", !c.mean.has_value()}};
    }
    poems.push_back({{"id", r.poems[i]}, {"scores", scores}});
  }
  return {{"campaign", r.campaign}, {"kind", "quality"},
          {"dimensions", r.dimensions}, {"poems", poems}};
}

// Materialised view plus the durable log. Thread-safe: mutations are
// serialised through one writer lock and reach the log before the view, so
// a completed submit is visible to every later read.
class Store {
 public:
  using Clock = std::function<std::int64_t()>;

  static std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  // In-memory only (no log).
  Store() : clock_(&system_clock_ms) {}

  // Replays `log_path` if it exists, then appends to it.
  explicit Store(std::filesystem::path log_path, Clock clock = &system_clock_ms)
      : log_path_(std::move(log_path)), clock_(std::move(clock)) {
    if (std::filesystem::exists(*log_path_)) replay(io::read_file(*log_path_));
    if (log_path_->has_parent_path()) io::ensure_dir(log_path_->parent_path());
    log_.open(*log_path_, std::ios::app | std::ios::binary);
    if (!log_) throw IoError("cannot open event log " + log_path_->string());
  }

  const Campaign& create_campaign(const json& spec) {
    Campaign c = campaign_from_json(spec);
    std::unique_lock lock(mu_);
    if (campaigns_.count(c.id)) throw ValidationError("campaign '" + c.id + "' exists");
    append({{"v", kLogVersion}, {"type", "campaign"}, {"campaign", to_json_spec(c)}});
    auto [it, _] = campaigns_.emplace(c.id, std::move(c));
    ratings_[it->first];
    return it->second;
  }

  // Validates every rating first; nothing is persisted unless all pass.
  void submit(const std::vector<Rating>& batch) {
    std::unique_lock lock(mu_);
    for (const auto& r : batch) validate(r);
    for (Rating r : batch) {
      r.timestamp_ms = clock_();
      append(rating_event(r));
      apply_rating(std::move(r));
    }
  }

  void submit(const Rating& r) { submit(std::vector<Rating>{r}); }

  std::optional<Campaign> campaign(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = campaigns_.find(id);
    if (it == campaigns_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> campaign_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : campaigns_) ids.push_back(id);
    return ids;
  }

  // Lowest-indexed item with a dimension this reviewer has not rated.
  NextItem next_item(const std::string& campaign_id, const std::string& reviewer) const {
    std::shared_lock lock(mu_);
    const Campaign& c = get(campaign_id);
    if (!c.has_reviewer(reviewer)) throw NotFound("unknown reviewer '" + reviewer + "'");
    const RatingTable& table = ratings_.at(campaign_id);
    for (std::size_t i = 0; i < c.items.size(); ++i) {
      NextItem n{false, i, &c.items[i], {}};
      for (const auto& d : c.dimensions) {
        if (!table.count({reviewer, c.items[i].id, d})) n.unanswered.push_back(d);
      }
      if (!n.unanswered.empty()) return n;
    }
    return {};
  }

  ElicitationReport elicitation_report(const std::string& campaign_id) const {
    std::shared_lock lock(mu_);
    return compute_elicitation(get(campaign_id), ratings_.at(campaign_id));
  }

  QualityReport quality_report(const std::string& campaign_id) const {
    std::shared_lock lock(mu_);
    return compute_quality(get(campaign_id), ratings_.at(campaign_id));
  }

  // Report by campaign kind, as served over HTTP.
  json report(const std::string& campaign_id) const {
    std::shared_lock lock(mu_);
    const Campaign& c = get(campaign_id);
    const RatingTable& t = ratings_.at(campaign_id);
    return c.kind == Kind::kEmotion ? to_json(compute_elicitation(c, t))
                                    : to_json(compute_quality(c, t));
  }

  RatingTable ratings(const std::string& campaign_id) const {
    std::shared_lock lock(mu_);
    get(campaign_id);
    return ratings_.at(campaign_id);
  }

  // Number of rating events applied (including replaced ones).
  std::size_t rating_events() const {
    std::shared_lock lock(mu_);
    return rating_events_;
  }

  // Whole view, for replay comparisons.
  json snapshot() const {
    std::shared_lock lock(mu_);
    json out = json::object();
    for (const auto& [id, c] : campaigns_) {
      json rs = json::array();
      for (const auto& [_, r] : ratings_.at(id)) rs.push_back(rating_event(r));
      out[id] = {{"spec", to_json_spec(c)}, {"ratings", rs}};
    }
    return out;
  }

  // Applies log text to the view. A final line without a newline that fails
  // to parse is a torn write and is ignored; any other bad line is an error.
  void replay(std::string_view text) {
    std::unique_lock lock(mu_);
    std::size_t start = 0, lineno = 0;
    while (start < text.size()) {
      std::size_t nl = text.find('\n', start);
      const bool last_unterminated = nl == std::string_view::npos;
      const std::size_t end = last_unterminated ? text.size() : nl;
      std::string_view line = text.substr(start, end - start);
      ++lineno;
      start = end + 1;
      if (line.empty()) continue;
      json ev;
      try {
        ev = json::parse(line);
      } catch (const json::exception&) {
        if (last_unterminated) break;
        throw ParseError(lineno, "malformed event log line");
      }
      apply_event(ev, lineno);
    }
  }

 private:
  const Campaign& get(const std::string& id) const {
    auto it = campaigns_.find(id);
    if (it == campaigns_.end()) throw NotFound("unknown campaign '" + id + "'");
    return it->second;
  }

  void validate(const Rating& r) const {
    const Campaign& c = get(r.campaign);
    if (r.likert < 1 || r.likert > 5) {
      throw ValidationError("likert must be an integer in 1..5");
    }
    if (!c.has_reviewer(r.reviewer)) throw NotFound("unknown reviewer '" + r.reviewer + "'");
    if (!c.item_index(r.poem)) throw NotFound("unknown poem '" + r.poem + "'");
    if (!c.has_dimension(r.dimension)) {
      throw NotFound("unknown dimension '" + r.dimension + "'");
    }
  }

  static json rating_event(const Rating& r) {
    return {{"v", kLogVersion},       {"type", "rating"},     {"campaign", r.campaign},
            {"reviewer", r.reviewer}, {"poem", r.poem},       {"dimension", r.dimension},
            {"likert", r.likert},     {"ts", r.timestamp_ms}};
  }

  void apply_rating(Rating r) {
    ++rating_events_;
    RatingKey key{r.reviewer, r.poem, r.dimension};
    ratings_[r.campaign][std::move(key)] = std::move(r);
  }

  void apply_event(const json& ev, std::size_t lineno) {
    try {
      if (ev.at("v").get<int>() != kLogVersion) {
        throw ParseError(lineno, "unsupported event version");
      }
      const std::string type = ev.at("type").get<std::string>();
      if (type == "campaign") {
        Campaign c = campaign_from_json(ev.at("campaign"));
        if (campaigns_.count(c.id)) throw ParseError(lineno, "duplicate campaign");
        ratings_[c.id];
        campaigns_.emplace(c.id, std::move(c));
      } else if (type == "rating") {
        Rating r{ev.at("campaign").get<std::string>(), ev.at("reviewer").get<std::string>(),
                 ev.at("poem").get<std::string>(),     ev.at("dimension").get<std::string>(),
                 ev.at("likert").get<int>(),           ev.at("ts").get<std::int64_t>()};
        validate(r);
        apply_rating(std::move(r));
      } else {
        throw ParseError(lineno, "unknown event type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
  }

  void append(const json& ev) {
    if (!log_path_) return;
    const std::string line = ev.dump() + "\n";
    log_.write(line.data(), static_cast<std::streamsize>(line.size()));
    log_.flush();
    if (!log_) throw IoError("event log write failed: " + log_path_->string());
  }

  mutable std::shared_mutex mu_;
  std::optional<std::filesystem::path> log_path_;
  std::ofstream log_;
  Clock clock_;
  std::map<std::string, Campaign> campaigns_;
  std::map<std::string, RatingTable> ratings_;
  std::size_t rating_events_ = 0;
};

inline Rating rating_from_json(const std::string& campaign, const json& j) {
  if (!j.is_object()) throw ValidationError("rating must be an object");
  Rating r;
  r.campaign = campaign;
  try {
    if (j.contains("campaign") && j.at("campaign").get<std::string>() != campaign) {
      throw ValidationError("rating campaign does not match the request path");
    }
    r.reviewer = j.at("reviewer").get<std::string>();
    r.poem = j.at("poem").get<std::string>();
    r.dimension = j.at("dimension").get<std::string>();
    const json& l = j.at("likert");
    if (!l.is_number_integer()) throw ValidationError("likert must be an integer in 1..5");
    r.likert = l.get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad rating: ") + e.what());
  }
  return r;
}

}  // namespace versewright::review

#endif  // VERSEWRIGHT_REVIEW_HPP_
