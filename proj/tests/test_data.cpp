// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <riskseq/corpus.hpp>
#include <riskseq/embedding_store.hpp>
#include <riskseq/encoders.hpp>
#include <riskseq/io.hpp>
#include <riskseq/lexicons.hpp>
#include <riskseq/sampling.hpp>
#include <riskseq/sequence.hpp>
#include <riskseq/text.hpp>

using namespace riskseq;

namespace {

UserRecord make_user(const std::string &id, int label, std::size_t posts, std::int64_t t0 = 0) {
  UserRecord u{id, {}, label};
  for (std::size_t i = 0; i < posts; ++i)
    u.posts.push_back({"post " + std::to_string(i) + " of " + id,
                       t0 + static_cast<std::int64_t>(i) * 3600});
  return u;
}

Corpus make_corpus(std::size_t positives, std::size_t negatives) {
  std::vector<UserRecord> users;
  for (std::size_t i = 0; i < positives + negatives; ++i)
    users.push_back(make_user("u" + std::to_string(i), i < positives ? 1 : 0, 1));
  return Corpus(std::move(users));
}

std::set<std::string> ids(const Corpus &c) {
  std::set<std::string> out;
  for (const auto &u : c.users())
    out.insert(u.user_id);
  return out;
}

ErrorKind kind_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Validation;
}

double norm(const Array &v) {
  double s = 0.0;
  for (double x : v.values())
    s += x * x;
  return std::sqrt(s);
}

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() / ("riskseq_test_" + name)).string();
}

} // namespace

// Corpus

TEST(Corpus, ParsesAndCounts) {
  std::istringstream in(
      R"({"user_id":"a","label":1,"posts":[{"text":"x","timestamp":5},{"text":"y","timestamp":1}]})"
      "\n\n"
      R"({"user_id":"b","label":0,"posts":[{"text":"z","timestamp":2}]})"
      "\n");
  auto c = parse_corpus(in);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.positives(), 1u);
  EXPECT_EQ(c.negatives(), 1u);
  EXPECT_EQ(c.users()[0].posts[0].text, "y");
  EXPECT_EQ(c.users()[0].posts[1].timestamp, 5);
}

TEST(Corpus, ParseErrorCarriesLineNumber) {
  std::istringstream in(R"({"user_id":"a","label":1,"posts":[{"text":"x","timestamp":5}]})"
                        "\n{not json\n");
  try {
    parse_corpus(in);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Corpus, EmptyPostsNamesUser) {
  std::istringstream in(R"({"user_id":"ghost","label":0,"posts":[]})");
  try {
    parse_corpus(in);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Corpus, JsonlRoundTrip) {
  std::vector<UserRecord> users{make_user("p\"1", 1, 3), make_user("n\t2", 0, 2, 99)};
  users[0].posts[1].text = "unicode caf\xc3\xa9 and \"quotes\"";
  Corpus c(users);
  const auto path = temp_path("corpus.jsonl");
  save_corpus(c, path);
  EXPECT_EQ(load_corpus(path), c);
  std::filesystem::remove(path);
  EXPECT_EQ(kind_of([&] { load_corpus(path); }), ErrorKind::Io);
}

// Downsampling and splitting

TEST(Downsample, SevereImbalance) {
  auto c = make_corpus(245, 4139);
  auto d = downsample(c, 7);
  EXPECT_EQ(d.size(), 490u);
  EXPECT_EQ(d.positives(), 245u);
  EXPECT_EQ(d.negatives(), 245u);
}

TEST(Downsample, BalancedIsIdentity) {
  auto c = make_corpus(5, 5);
  EXPECT_EQ(downsample(c, 3), c);
}

TEST(Downsample, MinorityAlwaysKept) {
  auto c = make_corpus(1, 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto d = downsample(c, seed);
    EXPECT_EQ(d.size(), 2u);
    EXPECT_TRUE(ids(d).contains("u0"));
  }
}

TEST(Downsample, EmptyMinority) {
  EXPECT_EQ(kind_of([] { downsample(make_corpus(0, 3), 1); }), ErrorKind::Validation);
}

TEST(Downsample, SeedChangesSample) {
  auto c = make_corpus(10, 200);
  EXPECT_EQ(downsample(c, 1), downsample(c, 1));
  EXPECT_NE(ids(downsample(c, 1)), ids(downsample(c, 2)));
}

TEST(Split, StratifiedCounts) {
  auto c = make_corpus(245, 245);
  auto s = split(c, {}, 11);
  EXPECT_EQ(s.train.size(), 294u);
  EXPECT_EQ(s.val.size(), 98u);
  EXPECT_EQ(s.test.size(), 98u);
  EXPECT_EQ(s.train.positives(), 147u);
  EXPECT_EQ(s.val.positives(), 49u);
  EXPECT_EQ(s.test.positives(), 49u);
  std::set<std::string> all;
  for (const Corpus *part : {&s.train, &s.val, &s.test})
    for (const auto &id : ids(*part))
      EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), 490u);
}

TEST(Split, DegenerateFractions) {
  auto c = make_corpus(10, 10);
  EXPECT_EQ(kind_of([&] { split(c, {1.0, 0.0, 0.0}, 1); }), ErrorKind::Validation);
}

TEST(Split, Deterministic) {
  auto c = make_corpus(30, 50);
  auto a = split(c, {}, 4), b = split(c, {}, 4), other = split(c, {}, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(ids(a.test), ids(other.test));
}

// Decay and padding

TEST(ComputeDecay, Examples) {
  std::vector<std::int64_t> equal{7, 7, 7};
  const Array flat = compute_decay(equal);
  for (double d : flat.values())
    EXPECT_EQ(d, 1.0);
  std::vector<std::int64_t> day{0, 86400};
  auto d = compute_decay(day);
  EXPECT_EQ(d[0], 1.0);
  EXPECT_NEAR(d[1], 0.3678794411714423, 1e-15);
  std::vector<std::int64_t> bad{100, 50};
  EXPECT_EQ(kind_of([&] { compute_decay(bad); }), ErrorKind::Validation);
}

TEST(ComputeDecay, MatchesDirectEvaluation) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int64_t> ts{static_cast<std::int64_t>(rng.below(1u << 30))};
    const std::size_t L = 1 + rng.below(40);
    for (std::size_t i = 1; i < L; ++i)
      ts.push_back(ts.back() + static_cast<std::int64_t>(rng.below(10 * 86400)));
    auto d = compute_decay(ts);
    EXPECT_EQ(d[0], 1.0);
    for (std::size_t i = 1; i < L; ++i) {
      const double expected = std::exp(-static_cast<double>(ts[i] - ts[i - 1]) / 86400.0);
      EXPECT_NEAR(d[i], expected, 1e-12);
    }
  }
}

namespace {

EncodedUser encoded(std::size_t length, double tag) {
  EncodedUser u;
  u.text = Array({length, 2}, tag);
  u.emotion = Array({length, kEmotionClasses}, 1.0 / 7.0);
  u.decay = Array({length}, 0.5);
  for (std::size_t t = 0; t < length; ++t)
    u.text.at(t, 0) = static_cast<double>(t);
  return u;
}

} // namespace

TEST(PadAndMask, MaskRowsAndZeroDecayOnPadding) {
  std::vector<EncodedUser> users{encoded(3, 1.0), encoded(5, 2.0)};
  PadOptions opts;
  opts.max_length = 5;
  auto b = pad_and_mask(users, opts);
  std::vector<std::uint8_t> expected{1, 1, 1, 0, 0, 1, 1, 1, 1, 1};
  EXPECT_EQ(b.mask, expected);
  EXPECT_EQ(b.decay.at(0, 3), 0.0);
  EXPECT_EQ(b.decay.at(0, 4), 0.0);
  EXPECT_EQ(b.text.at(0, 4, 1), 0.0);
  EXPECT_EQ(b.text.at(1, 4, 1), 2.0);
  EXPECT_EQ((std::vector<std::size_t>{3, 5}), b.lengths);
}

TEST(PadAndMask, EqualLengthsNeedNoPadding) {
  std::vector<EncodedUser> users{encoded(4, 1.0), encoded(4, 2.0)};
  auto b = pad_and_mask(users);
  EXPECT_EQ(b.max_length(), 4u);
  for (auto m : b.mask)
    EXPECT_EQ(m, 1);
}

TEST(PadAndMask, OverlongRequiresExplicitTruncation) {
  std::vector<EncodedUser> users{encoded(6, 1.0)};
  PadOptions opts;
  opts.max_length = 4;
  EXPECT_EQ(kind_of([&] { pad_and_mask(users, opts); }), ErrorKind::Validation);
  opts.truncate = true;
  auto b = pad_and_mask(users, opts);
  // The four most recent posts survive.
  EXPECT_EQ(b.text.at(0, 0, 0), 2.0);
  EXPECT_EQ(b.text.at(0, 3, 0), 5.0);
}

// Text encoding

TEST(Tokenize, SplitsAndLowercases) {
  EXPECT_EQ(tokenize("Hello, WORLD!  it's"),
            (std::vector<std::string>{"hello", "world", "it", "s"}));
  EXPECT_EQ(tokenize("a\xe2\x80\x94" "b"), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(tokenize(" \t\n").empty());
}

TEST(HashingEncode, Examples) {
  auto empty = hashing_encode("", 64, 1);
  for (double x : empty.values())
    EXPECT_EQ(x, 0.0);
  EXPECT_EQ(hashing_encode("lucky spin tonight", 64, 3), hashing_encode("lucky spin tonight", 64, 3));
  EXPECT_EQ(hashing_encode("aaa bbb", 64, 3), hashing_encode("bbb aaa", 64, 3));
  EXPECT_NEAR(norm(hashing_encode("one two three four", 64, 3)), 1.0, 1e-15);
  EXPECT_EQ(kind_of([] { hashing_encode("x", 4, 0); }), ErrorKind::Config);
}

TEST(HashingEncode, RowsUnitNormOrZero) {
  HashingTextEncoder enc(64, 5);
  LexiconEmotionEncoder emo(EmotionLexicon::builtin());
  auto u = make_user("r", 1, 3);
  u.posts[2].text = "...";
  auto m = encode_user(u, enc, emo);
  ASSERT_EQ(m.text.shape(), (Shape{3, 64}));
  ASSERT_EQ(m.emotion.shape(), (Shape{3, kEmotionClasses}));
  for (std::size_t t = 0; t < 3; ++t) {
    double s = 0.0;
    for (double x : m.text.row(t))
      s += x * x;
    EXPECT_TRUE(std::abs(s - 1.0) < 1e-12 || s == 0.0);
  }
}

TEST(ConcatEncode, Examples) {
  HashingTextEncoder enc(32, 2);
  auto single = make_user("s", 0, 1);
  EXPECT_EQ(concat_encode(single, enc), hashing_encode(single.posts[0].text, 32, 2));
  UserRecord a{"a", {{"red blue", 1}, {"green", 2}}, 0};
  UserRecord b{"b", {{"green blue", 1}, {"red", 5}}, 1};
  EXPECT_EQ(concat_encode(a, enc), concat_encode(b, enc));
  auto e = encode_concatenated(a, enc);
  EXPECT_EQ(e.length(), 1u);
  EXPECT_EQ(e.decay[0], 1.0);
}

TEST(EmotionScores, Examples) {
  auto lex = EmotionLexicon::builtin();
  auto none = emotion_scores("the quiet morning", lex);
  for (double x : none.values())
    EXPECT_DOUBLE_EQ(x, 1.0 / 7.0);

  std::string joy_word;
  for (const auto &w : lexicons::kEmotionWords)
    if (w.emotion == lexicons::kJoy) {
      joy_word = std::string(w.token);
      break;
    }
  auto joy = emotion_scores("so " + joy_word + " today", lex);
  std::size_t best = 0;
  for (std::size_t k = 1; k < kEmotionClasses; ++k)
    if (joy[k] > joy[best])
      best = k;
  EXPECT_EQ(best, lexicons::kJoy);

  const std::string text = "angry and " + joy_word + " but scared";
  EXPECT_EQ(emotion_scores(text, lex), emotion_scores(text + " " + text, lex));
  const Array scores = emotion_scores(text, lex);
  double s = 0.0;
  for (double x : scores.values())
    s += x;
  EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Lexicons, VocabulariesAreDisjoint) {
  std::set<std::string> emotion, gambling, filler;
  for (const auto &w : lexicons::kEmotionWords)
    emotion.insert(std::string(w.token));
  for (auto w : lexicons::kGamblingWords)
    gambling.insert(std::string(w));
  for (auto w : lexicons::kFillerWords)
    filler.insert(std::string(w));
  for (const auto &w : gambling) {
    EXPECT_FALSE(emotion.contains(w)) << w;
    EXPECT_FALSE(filler.contains(w)) << w;
  }
  for (const auto &w : emotion)
    EXPECT_FALSE(filler.contains(w)) << w;
  for (const auto &w : emotion)
    EXPECT_EQ(tokenize(w), std::vector<std::string>{w});
}

TEST(EmotionLexicon, LoadsFromFile) {
  const auto path = temp_path("lexicon.tsv");
  write_file_atomic(path, "# comment\nhooray\tjoy\n\nugh\tdisgust\n");
  auto lex = EmotionLexicon::load(path);
  EXPECT_EQ(lex.lookup("hooray"), lexicons::kJoy);
  EXPECT_EQ(lex.lookup("ugh"), lexicons::kDisgust);
  EXPECT_FALSE(lex.lookup("angry").has_value());
  write_file_atomic(path, "hooray\tbliss\n");
  EXPECT_THROW(EmotionLexicon::load(path), Error);
  std::filesystem::remove(path);
}

// Interchange file

namespace {

EmbeddingStore random_store(Rng &rng, bool with_emotion) {
  const std::size_t width = 1 + rng.below(12);
  EmbeddingStore store(width);
  const std::size_t users = rng.below(6);
  for (std::size_t u = 0; u < users; ++u) {
    const std::size_t posts = 1 + rng.below(4);
    for (std::size_t p = 0; p < posts; ++p) {
      StoredVectors v{Array({width}), std::nullopt};
      for (double &x : v.text.values())
        x = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
      if (with_emotion) {
        v.emotion = Array({kEmotionClasses});
        for (double &x : v.emotion->values())
          x = rng.uniform();
      }
      store.insert({"user" + std::to_string(u), p}, std::move(v));
    }
  }
  return store;
}

} // namespace

TEST(EmbeddingStore, EmptyFileWithHeader) {
  std::istringstream in("#width 16\n");
  auto store = parse_embedding_store(in);
  EXPECT_EQ(store.width(), 16u);
  EXPECT_EQ(store.size(), 0u);
}

TEST(EmbeddingStore, WrongWidthNamesKey) {
  std::istringstream in("#width 3\nalice\t0\t1,2,3\nalice\t1\t1,2\n");
  try {
    parse_embedding_store(in);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    EXPECT_NE(std::string(e.what()).find("alice"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(EmbeddingStore, MalformedLineNumber) {
  std::istringstream in("#width 2\nbob\t0\t1,2\nbob\tzero\t1,2\n");
  try {
    parse_embedding_store(in);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream nums("#width 2\nbob\t0\t1,abc\n");
  EXPECT_EQ(kind_of([&] { parse_embedding_store(nums); }), ErrorKind::Parse);
}

TEST(EmbeddingStore, DuplicateKey) {
  std::istringstream in("#width 2\nbob\t0\t1,2\nbob\t0\t3,4\n");
  EXPECT_EQ(kind_of([&] { parse_embedding_store(in); }), ErrorKind::Duplicate);
}

TEST(EmbeddingStore, RoundTripProperty) {
  Rng rng(77);
  const auto path = temp_path("store.tsv");
  for (int trial = 0; trial < 100; ++trial) {
    auto store = random_store(rng, trial % 2 == 0);
    write_store(store, path);
    EXPECT_EQ(load_embedding_store(path), store);
  }
  std::filesystem::remove(path);
}

TEST(StoreEncoders, LookupAndConcatenation) {
  auto store = std::make_shared<EmbeddingStore>(2);
  store->insert({"u", 0}, {Array::vector({3.0, 0.0}), Array({kEmotionClasses}, 1.0 / 7.0)});
  store->insert({"u", 1}, {Array::vector({0.0, 4.0}), Array({kEmotionClasses}, 1.0 / 7.0)});
  StoreTextEncoder text(store);
  StoreEmotionEncoder emo(store);
  UserRecord u{"u", {{"a", 1}, {"b", 2}}, 1};
  auto m = encode_user(u, text, emo);
  EXPECT_EQ(m.text.at(1, 1), 4.0);
  auto c = concat_encode(u, text);
  EXPECT_NEAR(c[0], 0.6, 1e-15);
  EXPECT_NEAR(c[1], 0.8, 1e-15);
  UserRecord missing{"v", {{"a", 1}}, 0};
  try {
    encode_user(missing, text, emo);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Lookup);
    EXPECT_NE(std::string(e.what()).find("v"), std::string::npos);
  }
}
