#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "disfl/corpus.hpp"
#include "disfl/synthgen.hpp"

namespace disfl {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("disfl_corpus_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Token tok(std::string w, std::string p, std::optional<Tag> t = std::nullopt) {
  return Token{std::move(w), std::move(p), t};
}

Corpus tiny_corpus() {
  Corpus c;
  c.name = "tiny";
  c.config_hash = "abc";
  c.meta["seed"] = 7;
  Dialogue d;
  d.id = "d0000";
  Utterance u;
  u.speaker = Speaker::User;
  u.tokens = {tok("with", "IN", Tag::fluent()), tok("italian", "JJ", Tag::fluent()),
              tok("sorry", "JJ", Tag::edit()), tok("spanish", "JJ", Tag::onset(2, EndMarker::EndSub)),
              tok("cuisine", "NN", Tag::fluent())};
  u.phenomena = {"correction"};
  u.fluent = std::vector<Token>{tok("with", "IN"), tok("spanish", "JJ"), tok("cuisine", "NN")};
  Utterance s;
  s.speaker = Speaker::System;
  s.tokens = {tok("ok", "UH"), tok("thanks", "UH")};
  d.utterances = {u, s};
  c.dialogues.push_back(d);
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(CorpusIoTest, RoundTrip) {
  TempDir dir;
  Corpus c = tiny_corpus();
  write_corpus(c, dir.path());
  Corpus back = read_corpus(dir.path());
  EXPECT_EQ(back, c);
  EXPECT_EQ(read_corpus(dir.path() / "corpus.jsonl"), c);
}

TEST(CorpusIoTest, WireFormat) {
  Json j = dialogue_to_json(tiny_corpus().dialogues[0]);
  EXPECT_EQ(j["id"], "d0000");
  EXPECT_EQ(j["utterances"][0]["speaker"], "usr");
  EXPECT_EQ(j["utterances"][0]["tokens"][3], (Json{{"w", "spanish"}, {"p", "JJ"}, {"t", "<rm-2/><rpEndSub/>"}}));
  EXPECT_FALSE(j["utterances"][1]["tokens"][0].contains("t"));
}

TEST(CorpusIoTest, BadTagReportsLine) {
  TempDir dir;
  std::ofstream(dir.path() / "corpus.jsonl")
      << R"({"id":"a","utterances":[{"speaker":"usr","tokens":[{"w":"x","p":"NN","t":"<f/>"}]}]})" << "\n"
      << R"({"id":"b","utterances":[{"speaker":"usr","tokens":[{"w":"x","p":"NN","t":"<f/>"},{"w":"y","p":"NN","t":"<rm-0/><rpEndSub/>"}]}]})"
      << "\n";
  try {
    read_corpus(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("corpus.jsonl:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("<rm-0/>"), std::string::npos) << msg;
  }
}

TEST(CorpusIoTest, RejectsMalformedInput) {
  auto parse = [](const std::string& line) { return dialogue_from_json(Json::parse(line)); };
  EXPECT_THROW(parse(R"({"utterances":[]})"), DataError);
  EXPECT_THROW(parse(R"({"id":"a","utterances":[{"speaker":"bot","tokens":[]}]})"), DataError);
  EXPECT_THROW(parse(R"({"id":"a","utterances":[{"speaker":"usr","tokens":[{"w":"a|b","p":"NN"}]}]})"), DataError);
  EXPECT_THROW(parse(R"({"id":"a","utterances":[{"speaker":"usr","tokens":[{"w":"","p":"NN"}]}]})"), DataError);
  // Mixed tagged/untagged.
  EXPECT_THROW(parse(R"({"id":"a","utterances":[{"speaker":"usr","tokens":[{"w":"a","p":"NN","t":"<f/>"},{"w":"b","p":"NN"}]}]})"),
               DataError);
  // Structurally invalid: end-only without an open repair.
  EXPECT_THROW(parse(R"({"id":"a","utterances":[{"speaker":"usr","tokens":[{"w":"a","p":"NN","t":"<rpEndSub/>"}]}]})"),
               DataError);

  Corpus dup = tiny_corpus();
  dup.dialogues.push_back(dup.dialogues[0]);
  EXPECT_THROW(corpus_to_jsonl(dup), DataError);
}

TEST(CorpusIoTest, GeneratedCorpusRewritesByteIdentically) {
  synth::GeneratorConfig config;
  config.n_dialogues = 3998;
  Corpus c = synth::generate_corpus(config);
  TempDir a, b;
  write_corpus(c, a.path());
  Corpus back = read_corpus(a.path());
  EXPECT_EQ(back, c);
  write_corpus(back, b.path());
  EXPECT_EQ(read_file(a.path() / "corpus.jsonl"), read_file(b.path() / "corpus.jsonl"));
  EXPECT_EQ(read_file(a.path() / "meta.json"), read_file(b.path() / "meta.json"));
}

Corpus counting_corpus() {
  Corpus c;
  Dialogue d;
  d.id = "x";
  Utterance u;
  u.tokens = {tok("with", "IN"), tok("Spanish", "JJ"), tok("with", "IN"), tok("with", "IN")};
  d.utterances.push_back(u);
  c.dialogues.push_back(d);
  return c;
}

TEST(VocabularyTest, DirectCounts) {
  Vocabulary v = Vocabulary::build(counting_corpus(), 1);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.entry(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.entry(3), "with|IN");
  EXPECT_EQ(v.count(3), 3);
  EXPECT_EQ(v.entry(4), "Spanish|JJ");
  EXPECT_EQ(v.lookup(tok("Spanish", "JJ")), 4);
  EXPECT_EQ(v.lookup(tok("Spanish", "NNP")), Vocabulary::kUnk);
}

TEST(VocabularyTest, MinCountDropsRareEntries) {
  Vocabulary v = Vocabulary::build(counting_corpus(), 2);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.lookup("Spanish|JJ"), Vocabulary::kUnk);
}

TEST(VocabularyTest, TiesAreLexicographic) {
  Corpus c;
  Dialogue d;
  d.id = "x";
  Utterance u;
  u.tokens = {tok("b", "NN"), tok("a", "NN"), tok("c", "NN"), tok("c", "NN")};
  d.utterances.push_back(u);
  c.dialogues.push_back(d);
  Vocabulary v = Vocabulary::build(c);
  EXPECT_EQ(v.entries(), (std::vector<std::string>{"<pad>", "<unk>", "<eos>", "c|NN", "a|NN", "b|NN"}));
}

TEST(VocabularyTest, GeneratedCorpusMatchesRecount) {
  synth::GeneratorConfig config;
  config.n_dialogues = 300;
  Corpus c = synth::generate_corpus(config);
  Vocabulary v = Vocabulary::build(c);
  std::map<std::string, long> recount;
  for (const auto& d : c.dialogues)
    for (const auto& u : d.utterances)
      for (const auto& t : u.tokens) ++recount[t.word + "|" + t.pos];
  ASSERT_EQ(v.size(), recount.size() + 3);
  for (std::size_t id = 3; id < v.size(); ++id) {
    EXPECT_EQ(v.count(static_cast<int>(id)), recount.at(v.entry(static_cast<int>(id))));
    EXPECT_EQ(v.lookup(v.entry(static_cast<int>(id))), static_cast<int>(id));
    if (id > 3) EXPECT_GE(v.count(static_cast<int>(id) - 1), v.count(static_cast<int>(id)));
  }
  EXPECT_EQ(Vocabulary::build(c), v);
}

TEST(VocabularyTest, EncodeDecode) {
  Corpus c = tiny_corpus();
  Vocabulary v = Vocabulary::build(c);
  const Utterance& u = c.dialogues[0].utterances[0];
  std::vector<int> ids = encode_utterance(v, u);
  ASSERT_EQ(ids.size(), u.tokens.size() + 1);
  EXPECT_EQ(ids.back(), Vocabulary::kEos);
  auto decoded = decode_ids(v, ids);
  ASSERT_EQ(decoded.size(), u.tokens.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) EXPECT_EQ(decoded[i], u.tokens[i].combined());

  Utterance unseen;
  unseen.tokens = {tok("zebra", "NN"), tok("with", "IN")};
  auto unseen_ids = encode_utterance(v, unseen);
  EXPECT_EQ(unseen_ids[0], Vocabulary::kUnk);
  EXPECT_EQ(unseen_ids[1], v.lookup("with|IN"));
}

TEST(ClassWeightTest, RatioForFluentAndEditCounts) {
  TagCounts counts{};
  counts[0] = 574771;
  counts[1] = 45729;
  ClassWeights w = class_weights(counts, 1.05);
  // 40-digit reference value of (574771 / 45729)^1.05.
  const double reference = 14.26488584508294845095797026127750620123;
  EXPECT_NEAR(w[1] / w[0], reference, 1e-12 * reference);
  EXPECT_NEAR(w[1] / w[0], 14.27, 0.01);
  EXPECT_EQ(w[2], 0.0);
}

TEST(ClassWeightTest, SymmetryAndSingleClass) {
  TagCounts counts{};
  counts[0] = 10;
  counts[5] = 10;
  ClassWeights w = class_weights(counts, 1.0);
  EXPECT_EQ(w[0], w[5]);
  TagCounts single{};
  single[0] = 8;
  EXPECT_DOUBLE_EQ(class_weights(single, 1.05)[0], 1.0 / std::pow(8.0, 1.05));
}

TEST(ClassWeightTest, ScaleCovariance) {
  TagCounts counts{};
  for (int k = 0; k < Tag::kCount; ++k) counts[static_cast<std::size_t>(k)] = 1 + 37 * k * k;
  const double gamma = 1.05, m = 13.0;
  TagCounts scaled = counts;
  for (auto& c : scaled) c *= 13;
  ClassWeights a = class_weights(counts, gamma), b = class_weights(scaled, gamma);
  for (int k = 0; k < Tag::kCount; ++k) EXPECT_NEAR(b[k] / (a[k] * std::pow(m, -gamma)), 1.0, 1e-12);
  // Strictly decreasing in frequency.
  for (int k = 1; k < Tag::kCount; ++k) EXPECT_LT(a[k], a[k - 1]);
}

TEST(ClassWeightTest, RejectsNonPositiveGamma) {
  EXPECT_THROW(class_weights(TagCounts{}, 0.0), ConfigError);
  EXPECT_THROW(class_weights(TagCounts{}, -1.0), ConfigError);
}

TEST(ClassWeightTest, CountsFromCorpus) {
  TagCounts counts = count_tags(tiny_corpus());
  EXPECT_EQ(counts[0], 3);
  EXPECT_EQ(counts[1], 1);
  EXPECT_EQ(counts[static_cast<std::size_t>(Tag::onset(2, EndMarker::EndSub).index())], 1);
}

TEST(SplitTest, PartitionsDialogues) {
  synth::GeneratorConfig config;
  config.n_dialogues = 100;
  Corpus c = synth::generate_corpus(config);
  CorpusSplit s = split_corpus(c, 0.8, 0.1, 5);
  EXPECT_EQ(s.train.dialogues.size(), 80u);
  EXPECT_EQ(s.dev.dialogues.size(), 10u);
  EXPECT_EQ(s.test.dialogues.size(), 10u);
  std::set<std::string> ids;
  for (const Corpus* part : {&s.train, &s.dev, &s.test})
    for (const auto& d : part->dialogues) ids.insert(d.id);
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_EQ(split_corpus(c, 0.8, 0.1, 5).train, s.train);
  EXPECT_THROW(split_corpus(c, 0.9, 0.2, 5), ConfigError);
}

}  // namespace
}  // namespace disfl
