#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsvm/common.hpp"

namespace newsvm {

inline constexpr double kMaxSentiment = 5.0;

// term -> score in [-5, +5]; zero is reserved for stop words.
class SentimentLexicon {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  void set(std::string term, double score) {
    if (term.empty()) throw ValidationError("sentiment term must be non-empty");
    if (!std::isfinite(score) || score < -kMaxSentiment || score > kMaxSentiment)
      throw ValidationError("sentiment score " + format_double(score) + " for '" + term + "' outside [-5, 5]");
    if (score == 0.0) throw ValidationError("sentiment score for '" + term + "' is 0; zero-scored terms are stop words");
    entries_[std::move(term)] = score;
  }

  void erase(std::string_view term) {
    if (auto it = entries_.find(term); it != entries_.end()) entries_.erase(it);
  }

  std::optional<double> score(std::string_view term) const {
    if (auto it = entries_.find(term); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  bool contains(std::string_view term) const { return entries_.find(term) != entries_.end(); }
  std::size_t size() const { return entries_.size(); }
  const Map& entries() const { return entries_; }

  bool operator==(const SentimentLexicon&) const = default;

 private:
  Map entries_;
};

class StopwordLexicon {
 public:
  using Set = std::set<std::string, std::less<>>;

  void insert(std::string term) {
    if (term.empty()) throw ValidationError("stop word must be non-empty");
    terms_.insert(std::move(term));
  }
  void erase(std::string_view term) {
    if (auto it = terms_.find(term); it != terms_.end()) terms_.erase(it);
  }
  bool contains(std::string_view term) const { return terms_.find(term) != terms_.end(); }
  std::size_t size() const { return terms_.size(); }
  const Set& terms() const { return terms_; }

  bool operator==(const StopwordLexicon&) const = default;

 private:
  Set terms_;
};

inline void check_disjoint(const SentimentLexicon& sent, const StopwordLexicon& stop) {
  for (const auto& term : stop.terms())
    if (sent.contains(term)) throw ValidationError("term '" + term + "' is in both lexicons");
}

// ---- lexicon files ---------------------------------------------------------

inline SentimentLexicon load_sentiment_tsv(const std::string& path) {
  SentimentLexicon lex;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 2) throw ParseError(path, i + 1, "expected 'term<TAB>score'");
    try {
      lex.set(std::string(cols[0]), parse_double(trim(cols[1])));
    } catch (const ValidationError& e) {
      throw ParseError(path, i + 1, e.what());
    }
  }
  return lex;
}

inline std::string format_sentiment_tsv(const SentimentLexicon& lex) {
  std::string out;
  for (const auto& [term, score] : lex.entries()) out += term + '\t' + format_double(score) + '\n';
  return out;
}

inline StopwordLexicon load_stopwords(const std::string& path) {
  StopwordLexicon lex;
  for (const auto& line : read_lines(path))
    if (auto t = trim(line); !t.empty()) lex.insert(std::string(t));
  return lex;
}

inline std::string format_stopwords(const StopwordLexicon& lex) {
  std::string out;
  for (const auto& term : lex.terms()) out += term + '\n';
  return out;
}

// ---- segmentation ----------------------------------------------------------

namespace detail {

inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

inline std::uint32_t utf8_decode(std::string_view s) {
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  switch (s.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1Fu) << 6) | (b(1) & 0x3Fu);
    case 3: return ((b(0) & 0x0Fu) << 12) | ((b(1) & 0x3Fu) << 6) | (b(2) & 0x3Fu);
    case 4: return ((b(0) & 0x07u) << 18) | ((b(1) & 0x3Fu) << 12) | ((b(2) & 0x3Fu) << 6) | (b(3) & 0x3Fu);
    default: return 0xFFFD;
  }
}

inline bool is_separator(std::uint32_t cp) {
  if (cp < 0x80) return !((cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'));
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

// Byte trie over the union of both lexicons.
class TermTrie {
 public:
  static constexpr int kNone = -1;

  struct Hit {
    std::size_t length = 0;
    int payload = kNone;
  };

  void insert(std::string_view term, int payload) {
    std::size_t node = 0;
    for (unsigned char c : term) {
      auto& edges = nodes_[node].next;
      auto it = edges.find(c);
      if (it == edges.end()) {
        edges.emplace(c, nodes_.size());
        node = nodes_.size();
        nodes_.emplace_back();
      } else {
        node = it->second;
      }
    }
    nodes_[node].payload = payload;
  }

  // Longest term starting at text[pos]; length 0 when nothing matches.
  Hit longest(std::string_view text, std::size_t pos) const {
    Hit best;
    std::size_t node = 0;
    for (std::size_t i = pos; i < text.size(); ++i) {
      const auto& edges = nodes_[node].next;
      auto it = edges.find(static_cast<unsigned char>(text[i]));
      if (it == edges.end()) break;
      node = it->second;
      if (nodes_[node].payload != kNone) best = {i - pos + 1, nodes_[node].payload};
    }
    return best;
  }

 private:
  struct Node {
    std::map<unsigned char, std::size_t> next;
    int payload = kNone;
  };
  std::vector<Node> nodes_{1};
};

}  // namespace detail

enum class TokenKind { Sentiment, Stop, Unknown };

struct Token {
  std::string_view text;
  TokenKind kind = TokenKind::Unknown;
  double score = 0.0;
};

// Greedy longest-match segmenter over a sentiment + stop-word lexicon pair.
class Segmenter {
 public:
  Segmenter(const SentimentLexicon& sent, const StopwordLexicon& stop) {
    check_disjoint(sent, stop);
    for (const auto& [term, score] : sent.entries()) {
      trie_.insert(term, static_cast<int>(scores_.size()));
      scores_.push_back(score);
    }
    for (const auto& term : stop.terms()) trie_.insert(term, kStopPayload);
  }

  // Every token in text order. Unmatched runs are split at separators;
  // ASCII pieces become single tokens, non-ASCII pieces become character bigrams.
  std::vector<Token> tokenize(std::string_view text) const {
    std::vector<Token> out;
    std::size_t pos = 0;
    std::size_t run_start = 0;
    while (pos < text.size()) {
      const auto hit = trie_.longest(text, pos);
      if (hit.length > 0) {
        emit_unknown(text.substr(run_start, pos - run_start), out);
        const auto term = text.substr(pos, hit.length);
        if (hit.payload == kStopPayload)
          out.push_back({term, TokenKind::Stop, 0.0});
        else
          out.push_back({term, TokenKind::Sentiment, scores_[static_cast<std::size_t>(hit.payload)]});
        pos += hit.length;
        run_start = pos;
      } else {
        pos += std::min(detail::utf8_length(static_cast<unsigned char>(text[pos])), text.size() - pos);
      }
    }
    emit_unknown(text.substr(run_start), out);
    return out;
  }

  // Sentiment terms only, in text order.
  std::vector<std::string> segment(std::string_view text) const {
    std::vector<std::string> out;
    for (const auto& tok : tokenize(text))
      if (tok.kind == TokenKind::Sentiment) out.emplace_back(tok.text);
    return out;
  }

  // Mean score of matched sentiment terms (with multiplicity); 0 if none.
  double score(std::string_view text) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tok : tokenize(text)) {
      if (tok.kind != TokenKind::Sentiment) continue;
      sum += tok.score;
      ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }

 private:
  static constexpr int kStopPayload = -2;

  static void emit_unknown(std::string_view run, std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < run.size()) {
      // Collect one piece: a maximal run of ASCII alnum or of non-separator non-ASCII code points.
      std::vector<std::size_t> starts;
      bool ascii_piece = false;
      std::size_t j = i;
      while (j < run.size()) {
        const std::size_t len = std::min(detail::utf8_length(static_cast<unsigned char>(run[j])), run.size() - j);
        const std::uint32_t cp = detail::utf8_decode(run.substr(j, len));
        if (detail::is_separator(cp)) break;
        const bool ascii = cp < 0x80;
        if (starts.empty()) ascii_piece = ascii;
        else if (ascii != ascii_piece) break;
        starts.push_back(j);
        j += len;
      }
      if (starts.empty()) {
        i += std::min(detail::utf8_length(static_cast<unsigned char>(run[i])), run.size() - i);
        continue;
      }
      if (ascii_piece || starts.size() == 1) {
        out.push_back({run.substr(i, j - i), TokenKind::Unknown, 0.0});
      } else {
        starts.push_back(j);
        for (std::size_t k = 0; k + 2 < starts.size(); ++k)
          out.push_back({run.substr(starts[k], starts[k + 2] - starts[k]), TokenKind::Unknown, 0.0});
      }
      i = j;
    }
  }

  detail::TermTrie trie_;
  std::vector<double> scores_;
};

inline std::vector<std::string> segment(std::string_view text, const SentimentLexicon& sent,
                                        const StopwordLexicon& stop) {
  return Segmenter(sent, stop).segment(text);
}

// ---- documents and daily signals -------------------------------------------

struct NewsDocument {
  Date date;
  std::string source_id;
  std::string text;

  bool operator==(const NewsDocument&) const = default;
};

inline double score_document(const NewsDocument& doc, const Segmenter& seg) { return seg.score(doc.text); }

inline double score_document(const NewsDocument& doc, const SentimentLexicon& sent, const StopwordLexicon& stop) {
  return score_document(doc, Segmenter(sent, stop));
}

struct DailySourceSignal {
  Date date;
  std::vector<double> values;
  std::vector<std::size_t> coverage;

  bool has_news() const {
    return std::any_of(coverage.begin(), coverage.end(), [](std::size_t c) { return c > 0; });
  }
  bool operator==(const DailySourceSignal&) const = default;
};

inline std::size_t source_index(std::span<const std::string> sources, std::string_view id) {
  auto it = std::find(sources.begin(), sources.end(), id);
  if (it == sources.end()) throw ValidationError("unknown source_id '" + std::string(id) + "'");
  return static_cast<std::size_t>(it - sources.begin());
}

// Per-source mean document score for one day; silent sources stay exactly 0.
inline DailySourceSignal aggregate_daily(std::span<const NewsDocument> docs, const Date& date,
                                         std::span<const std::string> sources, const Segmenter& seg) {
  DailySourceSignal sig{date, std::vector<double>(sources.size(), 0.0), std::vector<std::size_t>(sources.size(), 0)};
  for (const auto& doc : docs) {
    if (doc.date != date)
      throw ValidationError("document dated " + doc.date.str() + " aggregated into " + date.str());
    const std::size_t j = source_index(sources, doc.source_id);
    sig.values[j] += score_document(doc, seg);
    ++sig.coverage[j];
  }
  for (std::size_t j = 0; j < sources.size(); ++j)
    if (sig.coverage[j] > 0) sig.values[j] /= static_cast<double>(sig.coverage[j]);
  return sig;
}

using SignalMap = std::map<Date, DailySourceSignal>;

// Groups the corpus by date and aggregates each day.
inline SignalMap build_daily_signals(std::span<const NewsDocument> docs, std::span<const std::string> sources,
                                     const Segmenter& seg) {
  std::map<Date, std::vector<NewsDocument>> by_day;
  for (const auto& doc : docs) by_day[doc.date].push_back(doc);
  SignalMap out;
  for (const auto& [date, day_docs] : by_day) out.emplace(date, aggregate_daily(day_docs, date, sources, seg));
  return out;
}

// Sorted unique source ids appearing in the corpus.
inline std::vector<std::string> sources_in(std::span<const NewsDocument> docs) {
  std::set<std::string> ids;
  for (const auto& d : docs) ids.insert(d.source_id);
  return {ids.begin(), ids.end()};
}

// ---- news corpus (JSON Lines) ----------------------------------------------

inline std::vector<NewsDocument> load_news_jsonl(const std::string& path) {
  std::vector<NewsDocument> docs;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      docs.push_back({Date::parse(j.at("date").get<std::string>()), j.at("source_id").get<std::string>(),
                      j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, i + 1, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path, i + 1, e.what());
    }
  }
  return docs;
}

inline std::string format_news_jsonl(std::span<const NewsDocument> docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["date"] = d.date.str();
    j["source_id"] = d.source_id;
    j["text"] = d.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---- dictionary-building loop ----------------------------------------------

// One oracle judgement: a score in [-5, 5], or a stop-word verdict.
struct ScoreEntry {
  double score = 0.0;
  bool stopword = false;
};
using ScoreSheet = std::map<std::string, ScoreEntry, std::less<>>;

// TSV `term<TAB>score`; the score column may also read `stop`.
inline ScoreSheet load_score_sheet(const std::string& path) {
  ScoreSheet sheet;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 2 || cols[0].empty()) throw ParseError(path, i + 1, "expected 'term<TAB>score'");
    const auto value = trim(cols[1]);
    ScoreEntry e;
    if (value == "stop") {
      e.stopword = true;
    } else {
      try {
        e.score = parse_double(value);
      } catch (const ValidationError& err) {
        throw ParseError(path, i + 1, err.what());
      }
    }
    sheet[std::string(cols[0])] = e;
  }
  return sheet;
}

struct Candidate {
  std::string term;
  std::size_t count = 0;
  bool operator==(const Candidate&) const = default;
};

struct LexiconIterationResult {
  SentimentLexicon sentiment;
  StopwordLexicon stop;
  std::vector<Candidate> candidates;  // most frequent still-unscored terms
  double coverage_fraction = 1.0;     // scored share of the most frequent terms overall
};

// Frequency-ranked terms (count desc, then lexicographic), optionally restricted to unknown terms.
inline std::vector<Candidate> rank_terms(std::span<const std::string> sample, const Segmenter& seg,
                                         bool unknown_only, std::size_t limit) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& text : sample)
    for (const auto& tok : seg.tokenize(text))
      if (!unknown_only || tok.kind == TokenKind::Unknown) {
        auto it = counts.find(tok.text);
        if (it == counts.end()) counts.emplace(std::string(tok.text), 1);
        else ++it->second;
      }
  std::vector<Candidate> ranked;
  ranked.reserve(counts.size());
  for (auto& [term, count] : counts) ranked.push_back({term, count});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Candidate& a, const Candidate& b) { return a.count > b.count; });
  if (ranked.size() > limit) ranked.resize(limit);
  return ranked;
}

// Applies an oracle score sheet, re-segments the sample and proposes the next candidates.
inline LexiconIterationResult lexicon_iteration(std::span<const std::string> sample, const SentimentLexicon& sent,
                                                const StopwordLexicon& stop, const ScoreSheet& scores,
                                                std::size_t num_candidates = 500) {
  for (const auto& [term, entry] : scores)
    if (!entry.stopword && (!std::isfinite(entry.score) || std::abs(entry.score) > kMaxSentiment))
      throw ValidationError("score " + format_double(entry.score) + " for '" + term + "' outside [-5, 5]");

  LexiconIterationResult r{sent, stop, {}, 1.0};
  for (const auto& [term, entry] : scores) {
    if (entry.stopword || entry.score == 0.0) {
      r.sentiment.erase(term);
      r.stop.insert(term);
    } else {
      r.stop.erase(term);
      r.sentiment.set(term, entry.score);
    }
  }

  const Segmenter seg(r.sentiment, r.stop);
  const auto top = rank_terms(sample, seg, false, num_candidates);
  if (!top.empty()) {
    const auto scored = std::count_if(top.begin(), top.end(), [&](const Candidate& c) {
      return r.sentiment.contains(c.term) || r.stop.contains(c.term);
    });
    r.coverage_fraction = static_cast<double>(scored) / static_cast<double>(top.size());
  }
  r.candidates = rank_terms(sample, seg, true, num_candidates);
  return r;
}

struct LexiconLoopResult {
  LexiconIterationResult last;
  std::size_t rounds = 0;
  bool converged = false;
};

// Drives lexicon_iteration against a file-backed oracle until the coverage target is met,
// the oracle has nothing more to say about the candidates, or the round budget runs out.
inline LexiconLoopResult run_lexicon_loop(std::span<const std::string> sample, const SentimentLexicon& sent,
                                          const StopwordLexicon& stop, const ScoreSheet& oracle,
                                          double target = 0.9, std::size_t max_rounds = 50,
                                          std::size_t num_candidates = 500) {
  LexiconLoopResult loop;
  loop.last = lexicon_iteration(sample, sent, stop, {}, num_candidates);
  while (loop.last.coverage_fraction < target && loop.rounds < max_rounds) {
    ScoreSheet sheet;
    for (const auto& c : loop.last.candidates)
      if (auto it = oracle.find(c.term); it != oracle.end()) sheet.insert(*it);
    if (sheet.empty()) break;
    loop.last = lexicon_iteration(sample, loop.last.sentiment, loop.last.stop, sheet, num_candidates);
    ++loop.rounds;
  }
  loop.converged = loop.last.coverage_fraction >= target;
  return loop;
}

}  // namespace newsvm
