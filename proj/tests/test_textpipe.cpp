#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "newsvm/textpipe.hpp"
#include "support.hpp"

using namespace newsvm;

namespace {

SentimentLexicon sent_of(std::initializer_list<std::pair<std::string, double>> entries) {
  SentimentLexicon s;
  for (const auto& [t, v] : entries) s.set(t, v);
  return s;
}

StopwordLexicon stop_of(std::initializer_list<std::string> terms) {
  StopwordLexicon s;
  for (const auto& t : terms) s.insert(t);
  return s;
}

// Position-by-position matcher: at each position try every lexicon term, keep the longest,
// otherwise advance one UTF-8 character. Returns matched sentiment terms.
std::vector<std::string> reference_segment(const std::string& text, const SentimentLexicon& sent,
                                           const StopwordLexicon& stop) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::string best;
    bool best_is_sent = false;
    for (const auto& [term, score] : sent.entries())
      if (text.compare(pos, term.size(), term) == 0 && term.size() > best.size()) best = term, best_is_sent = true;
    for (const auto& term : stop.terms())
      if (text.compare(pos, term.size(), term) == 0 && term.size() > best.size()) best = term, best_is_sent = false;
    if (!best.empty()) {
      if (best_is_sent) out.push_back(best);
      pos += best.size();
      continue;
    }
    const auto lead = static_cast<unsigned char>(text[pos]);
    pos += lead < 0x80 ? 1 : lead >= 0xF0 ? 4 : lead >= 0xE0 ? 3 : 2;
  }
  return out;
}

std::string dump_lex(const SentimentLexicon& sent, const StopwordLexicon& stop) {
  std::string s = " sent:";
  for (const auto& [t, v] : sent.entries()) s += " " + t;
  s += " stop:";
  for (const auto& t : stop.terms()) s += " " + t;
  return s;
}

}  // namespace

TEST(Segment, EmptyText) {
  EXPECT_TRUE(segment("", sent_of({{"up", 1}}), stop_of({"the"})).empty());
}

TEST(Segment, StopWordPrefixIsDropped) {
  const auto sent = sent_of({{"涨停", 4}});
  const auto stop = stop_of({"今日"});
  const auto got = segment("今日涨停", sent, stop);
  EXPECT_EQ(got, std::vector<std::string>{"涨停"});
  EXPECT_EQ(got, reference_segment("今日涨停", sent, stop));
}

TEST(Segment, LongestMatchWins) {
  const auto sent = sent_of({{"ab", 1}, {"abc", 2}});
  const StopwordLexicon stop;
  EXPECT_EQ(segment("abc", sent, stop), std::vector<std::string>{"abc"});
  EXPECT_EQ(segment("abc", sent, stop), reference_segment("abc", sent, stop));
}

TEST(Segment, AgreesWithReferenceMatcherOnRandomText) {
  const std::vector<std::string> alphabet = {"a", "b", "c", "涨", "停", "跌", "今", "日", " ", "。"};
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    SentimentLexicon sent;
    StopwordLexicon stop;
    auto word = [&] {
      std::string w;
      const std::size_t len = 1 + rng.below(3);
      for (std::size_t k = 0; k < len; ++k) w += alphabet[rng.below(8)];
      return w;
    };
    for (int k = 0; k < 6; ++k) {
      const auto w = word();
      if (!stop.contains(w)) sent.set(w, static_cast<double>(1 + rng.below(5)) * (rng.below(2) ? 1 : -1));
    }
    for (int k = 0; k < 3; ++k) {
      const auto w = word();
      if (!sent.contains(w)) stop.insert(w);
    }
    std::string text;
    const std::size_t len = rng.below(25);
    for (std::size_t k = 0; k < len; ++k) text += alphabet[rng.below(alphabet.size())];
    ASSERT_EQ(segment(text, sent, stop), reference_segment(text, sent, stop)) << "text: " << text << dump_lex(sent, stop);
  }
}

TEST(Segment, StopWordsNeverLeak) {
  const auto sent = sent_of({{"good", 3}, {"bad", -3}});
  const auto stop = stop_of({"the", "a", "is"});
  for (const auto& term : segment("the good is a bad the good", sent, stop)) EXPECT_FALSE(stop.contains(term));
}

TEST(ScoreDocument, MeanOfMatchedTerms) {
  const auto sent = sent_of({{"surge", 4}, {"dip", -2}, {"crash", -5}});
  const auto stop = stop_of({"the", "of"});
  const NewsDocument mixed{{2020, 1, 2}, "s", "the surge of the dip"};
  EXPECT_DOUBLE_EQ(score_document(mixed, sent, stop), 1.0);
  double sum = 0;
  const Segmenter seg(sent, stop);
  const auto terms = seg.segment(mixed.text);
  for (const auto& t : terms) sum += *sent.score(t);
  EXPECT_DOUBLE_EQ(score_document(mixed, seg), sum / static_cast<double>(terms.size()));
  EXPECT_DOUBLE_EQ(score_document({{2020, 1, 2}, "s", "the of the"}, sent, stop), 0.0);
  EXPECT_DOUBLE_EQ(score_document({{2020, 1, 2}, "s", "crash"}, sent, stop), -5.0);
}

TEST(Lexicons, ScoreRangeAndZeroRejected) {
  SentimentLexicon s;
  EXPECT_THROW(s.set("x", 5.5), ValidationError);
  EXPECT_THROW(s.set("x", -5.01), ValidationError);
  EXPECT_THROW(s.set("x", 0.0), ValidationError);
  EXPECT_NO_THROW(s.set("x", -5.0));
}

TEST(Lexicons, OverlapRejected) {
  EXPECT_THROW(Segmenter(sent_of({{"x", 1}}), stop_of({"x"})), ValidationError);
}

TEST(Lexicons, FileRoundTrip) {
  testing_support::TempDir dir("lex");
  const auto sent = sent_of({{"涨停", 4}, {"跌停", -4.5}, {"gain", 0.5}});
  const auto stop = stop_of({"今日", "the"});
  write_text(dir.file("s.tsv"), format_sentiment_tsv(sent));
  write_text(dir.file("w.txt"), format_stopwords(stop));
  EXPECT_EQ(load_sentiment_tsv(dir.file("s.tsv")), sent);
  EXPECT_EQ(load_stopwords(dir.file("w.txt")), stop);
}

TEST(AggregateDaily, NoDocsGivesZeros) {
  const std::vector<std::string> sources{"a", "b"};
  const Segmenter seg(sent_of({{"up", 1}}), {});
  const auto sig = aggregate_daily({}, {2020, 1, 2}, sources, seg);
  EXPECT_EQ(sig.values, (std::vector<double>{0, 0}));
  EXPECT_EQ(sig.coverage, (std::vector<std::size_t>{0, 0}));
  EXPECT_FALSE(sig.has_news());
}

TEST(AggregateDaily, PerSourceMeanAndSilentSource) {
  const std::vector<std::string> sources{"a", "b"};
  const Segmenter seg(sent_of({{"one", 1}, {"three", 3}}), {});
  const Date d{2020, 1, 2};
  const std::vector<NewsDocument> docs{{d, "a", "one"}, {d, "a", "three"}};
  const auto sig = aggregate_daily(docs, d, sources, seg);
  EXPECT_DOUBLE_EQ(sig.values[0], 2.0);
  EXPECT_EQ(sig.values[1], 0.0);
  EXPECT_EQ(sig.coverage[0], 2u);
}

TEST(AggregateDaily, RejectsForeignDateAndUnknownSource) {
  const std::vector<std::string> sources{"a"};
  const Segmenter seg({}, {});
  EXPECT_THROW(aggregate_daily(std::vector<NewsDocument>{{{2020, 1, 3}, "a", "x"}}, {2020, 1, 2}, sources, seg),
               ValidationError);
  EXPECT_THROW(aggregate_daily(std::vector<NewsDocument>{{{2020, 1, 2}, "z", "x"}}, {2020, 1, 2}, sources, seg),
               ValidationError);
}

TEST(NewsJsonl, RoundTripAndBadLine) {
  testing_support::TempDir dir("news");
  const std::vector<NewsDocument> docs{{{2020, 1, 2}, "src01", "今日涨停, \"quoted\""}, {{2020, 1, 3}, "src02", "x"}};
  write_text(dir.file("n.jsonl"), format_news_jsonl(docs));
  EXPECT_EQ(load_news_jsonl(dir.file("n.jsonl")), docs);
  write_text(dir.file("bad.jsonl"), format_news_jsonl(docs) + "{\"date\": \"2020-13-01\", \"source_id\": \"a\", \"text\": \"\"}\n");
  try {
    load_news_jsonl(dir.file("bad.jsonl"));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LexiconIteration, EmptyCorpusIsVacuouslyCovered) {
  const auto r = lexicon_iteration({}, {}, {}, {});
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_DOUBLE_EQ(r.coverage_fraction, 1.0);
}

TEST(LexiconIteration, FullyScoredCorpus) {
  const std::vector<std::string> sample{"up down up", "down the up", "zzz"};
  ScoreSheet scores{{"up", {2, false}}, {"down", {-2, false}}, {"the", {0, true}}};
  const auto r = lexicon_iteration(sample, {}, {}, scores, 3);
  EXPECT_DOUBLE_EQ(r.coverage_fraction, 1.0);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].term, "zzz");
}

TEST(LexiconIteration, CandidatesMatchBruteForceFrequencyCount) {
  Rng rng(8);
  std::map<std::string, std::size_t> truth;
  std::vector<std::string> words;
  for (int k = 0; k < 800; ++k) {
    std::string w = "w";
    for (int c = 0; c < 5; ++c) w += static_cast<char>('a' + rng.below(26));
    words.push_back(w);
  }
  std::vector<std::string> tokens;
  for (const auto& w : words) {
    const std::size_t count = 1 + rng.below(6);  // many ties
    truth[w] += count;
    for (std::size_t k = 0; k < count; ++k) tokens.push_back(w);
  }
  rng.shuffle(tokens);
  std::vector<std::string> sample;
  for (std::size_t i = 0; i < tokens.size(); i += 7) {
    std::string doc;
    for (std::size_t k = i; k < std::min(tokens.size(), i + 7); ++k) doc += tokens[k] + (k % 3 ? " " : ", ");
    sample.push_back(doc);
  }

  std::vector<std::pair<std::string, std::size_t>> expected(truth.begin(), truth.end());
  std::sort(expected.begin(), expected.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  expected.resize(500);

  const auto r = lexicon_iteration(sample, {}, {}, {});
  ASSERT_EQ(r.candidates.size(), 500u);
  for (std::size_t i = 0; i < 500; ++i) {
    EXPECT_EQ(r.candidates[i].term, expected[i].first) << "rank " << i;
    EXPECT_EQ(r.candidates[i].count, expected[i].second) << "rank " << i;
  }
  EXPECT_DOUBLE_EQ(r.coverage_fraction, 0.0);
}

TEST(LexiconIteration, ScoresOutsideRangeRejected) {
  EXPECT_THROW(lexicon_iteration(std::vector<std::string>{"a"}, {}, {}, ScoreSheet{{"a", {7.0, false}}}), ValidationError);
}

TEST(LexiconIteration, DisjointnessPreserved) {
  const std::vector<std::string> sample{"alpha beta gamma delta", "beta gamma"};
  auto sent = sent_of({{"alpha", 1}});
  auto stop = stop_of({"beta"});
  // reclassify both existing terms the other way round
  ScoreSheet scores{{"alpha", {0, true}}, {"beta", {3, false}}, {"gamma", {0, false}}};
  const auto r = lexicon_iteration(sample, sent, stop, scores);
  EXPECT_NO_THROW(check_disjoint(r.sentiment, r.stop));
  EXPECT_TRUE(r.stop.contains("alpha"));
  EXPECT_TRUE(r.sentiment.contains("beta"));
  EXPECT_TRUE(r.stop.contains("gamma"));  // a zero score files the term as a stop word
}

TEST(LexiconLoop, ReachesCoverageTargetWithSynthOracle) {
  SynthConfig cfg;
  cfg.num_days = 40;
  const auto out = generate(cfg);
  std::vector<std::string> sample;
  for (const auto& d : out.news) sample.push_back(d.text);
  const auto loop = run_lexicon_loop(sample, {}, {}, out.oracle);
  EXPECT_TRUE(loop.converged);
  EXPECT_GE(loop.last.coverage_fraction, 0.9);
  for (const auto& [term, score] : loop.last.sentiment.entries()) EXPECT_EQ(out.sentiment.score(term), score);
  for (const auto& term : out.stopwords.terms()) EXPECT_FALSE(loop.last.sentiment.contains(term));
}
