#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "disfl/corpus.hpp"
#include "disfl/neuralnet.hpp"

namespace disfl {
namespace {

namespace fs = std::filesystem;

// Scratch directory shared by the suite; corpora and the model are built once.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("disfl_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("generate --preset mixed --dialogues 60 --seed 3 --out " + path("train")), 0);
    ASSERT_EQ(run("generate --preset mixed --dialogues 15 --seed 4 --out " + path("dev")), 0);
    write(path("hyper.json"),
          R"({"embedding_size": 12, "hidden_size": 16, "head_layers": [12],
              "training": {"learning_rate": 0.2, "max_epochs": 3}})");
    ASSERT_EQ(run("train --quiet --train " + path("train") + " --dev " + path("dev") + " --hyper " +
                  path("hyper.json") + " --seed 9 --out " + path("model.bin")),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static int run(const std::string& args) {
    const std::string cmd = std::string(DISFL_CLI_PATH) + " " + args + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static void write(const std::string& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    out << text;
  }

  static std::string read(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::vector<std::string> lines(const std::string& file) {
    std::vector<std::string> out;
    std::ifstream in(file);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("generate --out " + path("x") + " --bogus 1"), 1);
  write(path("gen.json"), "{}");
  EXPECT_EQ(run("generate --preset mixed --config " + path("gen.json") + " --out " + path("x")), 1);
  EXPECT_EQ(run("generate --preset nonsense --out " + path("x")), 1);
  EXPECT_EQ(run("generate --p-correction 1.5 --out " + path("x")), 1);
  EXPECT_EQ(run("eval --test " + path("dev")), 1);
  EXPECT_EQ(run("eval --baseline fluent --test " + path("dev") + " --rm-match loose"), 1);
  EXPECT_EQ(run("tag --model " + path("model.bin")), 1);
  EXPECT_EQ(run("tag --model " + path("model.bin") + " --stream --in " + path("dev")), 1);
}

TEST_F(CliTest, DataErrorsExitWithTwo) {
  EXPECT_EQ(run("eval --baseline fluent --test " + path("missing")), 2);
  write(path("bad.bin"), "DFLTxxxx");
  EXPECT_EQ(run("eval --model " + path("bad.bin") + " --test " + path("dev")), 2);
  write(path("bad_stream.txt"), "with|IN\nnot a token\n");
  EXPECT_EQ(run("tag --model " + path("model.bin") + " --stream < " + path("bad_stream.txt") + " > " +
                path("bad_stream.out")),
            2);
  // The token before the malformed line was already answered.
  EXPECT_EQ(lines(path("bad_stream.out")).size(), 1u);
}

TEST_F(CliTest, NumericFaultExitsWithThree) {
  write(path("explode.json"),
        R"({"embedding_size": 8, "hidden_size": 8, "head_layers": [8],
            "training": {"learning_rate": 1e30, "clip_norm": 0, "max_epochs": 2}})");
  EXPECT_EQ(run("train --quiet --train " + path("train") + " --dev " + path("dev") + " --hyper " +
                path("explode.json") + " --out " + path("explode.bin")),
            3);
}

TEST_F(CliTest, GenerateIsDeterministicAndEchoesTheSeed) {
  ASSERT_EQ(run("generate --preset corrections --dialogues 25 --seed 11 --out " + path("g1")), 0);
  ASSERT_EQ(run("generate --preset corrections --dialogues 25 --seed 11 --threads 3 --out " + path("g2")), 0);
  EXPECT_EQ(read(path("g1") + "/corpus.jsonl"), read(path("g2") + "/corpus.jsonl"));
  EXPECT_EQ(read(path("g1") + "/meta.json"), read(path("g2") + "/meta.json"));
  Json meta = Json::parse(read(path("g1") + "/meta.json"));
  EXPECT_NE(meta.dump().find("11"), std::string::npos);

  ASSERT_EQ(run("generate --dialogues 0 --out " + path("empty")), 0);
  EXPECT_EQ(read(path("empty") + "/corpus.jsonl"), "");
  EXPECT_NO_THROW(Json::parse(read(path("empty") + "/meta.json")));
  EXPECT_EQ(read_corpus(path("empty")).dialogues.size(), 0u);
}

TEST_F(CliTest, InspectCountsMatchRecount) {
  ASSERT_EQ(run("inspect --stats --in " + path("train") + " --report " + path("stats.json") + " > " +
                path("stats.txt")),
            0);
  Json s = Json::parse(read(path("stats.json")));
  // Recount straight from the JSONL text.
  std::int64_t f = 0, e = 0, sub = 0, mid = 0, end_only = 0, del = 0;
  for (const std::string& line : lines(path("train") + "/corpus.jsonl")) {
    const Json dialogue = Json::parse(line);
    for (const Json& u : dialogue.at("utterances"))
      for (const Json& t : u.at("tokens")) {
        const std::string tag = t.at("t");
        f += tag == "<f/>";
        e += tag == "<e/>";
        end_only += tag == "<rpEndSub/>";
        sub += tag.starts_with("<rm-") && tag.ends_with("<rpEndSub/>");
        del += tag.starts_with("<rm-") && tag.ends_with("<rpEndDel/>");
        mid += tag.starts_with("<rm-") && tag.ends_with("<rpMid/>");
      }
  }
  const Json& rows = s.at("labels");
  EXPECT_EQ(rows[0].at("count"), f);
  EXPECT_EQ(rows[1].at("count"), e);
  EXPECT_EQ(rows[2].at("count"), sub);
  EXPECT_EQ(rows[3].at("count"), del);
  EXPECT_EQ(rows[4].at("count"), mid);
  EXPECT_EQ(rows[5].at("count"), end_only);
  EXPECT_GT(f, 10 * e);
  EXPECT_NE(read(path("stats.txt")).find("fluent token"), std::string::npos);

  ASSERT_EQ(run("generate --preset corrections --dialogues 40 --seed 5 --out " + path("corr")), 0);
  ASSERT_EQ(run("inspect --stats --in " + path("corr") + " --report " + path("corr.json") + " > /dev/null"), 0);
  Json c = Json::parse(read(path("corr.json")));
  EXPECT_FALSE(c.at("phenomena").contains("hesitation"));
  EXPECT_GT(c.at("phenomena").at("correction").at("turns").get<int>(), 0);
}

TEST_F(CliTest, TrainWritesModelAndReport) {
  Json r = Json::parse(read(path("model.bin.report.json")));
  EXPECT_EQ(r.at("setup").at("hyperparams").at("seed"), 9);
  EXPECT_EQ(r.at("setup").at("train_config").at("seed"), 9);
  EXPECT_EQ(r.at("epochs").size(), 3u);
  EXPECT_GE(r.at("best_epoch").get<int>(), 1);
  nn::Model m = nn::load_model(path("model.bin"));
  EXPECT_EQ(m.hyper.hidden_size, 16);
}

TEST_F(CliTest, StreamEqualsBatchTagging) {
  const nn::Model model = nn::load_model(path("model.bin"));
  const Corpus dev = read_corpus(path("dev"));
  std::string input;
  std::vector<TagSequence> expected;
  std::size_t input_lines = 0;
  for (const Dialogue& d : dev.dialogues)
    for (const Utterance& u : d.utterances) {
      for (const Token& t : u.tokens) input += t.combined() + "\n";
      input += "\n";
      input_lines += u.tokens.size() + 1;
      expected.push_back(model.tag(u));
    }
  write(path("stream.in"), input);
  ASSERT_EQ(run("tag --stream --model " + path("model.bin") + " < " + path("stream.in") + " > " + path("stream.out")),
            0);
  auto out = lines(path("stream.out"));
  ASSERT_EQ(out.size(), input_lines);
  std::size_t k = 0;
  for (const TagSequence& tags : expected) {
    for (const Tag& t : tags) EXPECT_EQ(out[k++], render_tag(t));
    EXPECT_EQ(out[k++], "");
  }

  // Batch mode stores the lenient rewrite of the same predictions.
  ASSERT_EQ(run("tag --model " + path("model.bin") + " --in " + path("dev") + " --out " + path("tagged")), 0);
  const Corpus tagged = read_corpus(path("tagged"));
  std::size_t u = 0;
  for (const Dialogue& d : tagged.dialogues)
    for (const Utterance& ut : d.utterances) EXPECT_EQ(ut.tags(), resolve_lenient(expected[u++]).tags);
  EXPECT_EQ(tagged.meta.at("tagged_by").at("seed"), 9);
}

TEST_F(CliTest, CleanWithGoldTags) {
  write(path("ex2.jsonl"),
        R"({"id":"ex2","utterances":[{"speaker":"usr","tokens":[)"
        R"({"w":"with","p":"IN","t":"<f/>"},{"w":"Italian","p":"JJ","t":"<f/>"},{"w":"uh","p":"UH","t":"<e/>"},)"
        R"({"w":"no","p":"UH","t":"<e/>"},{"w":"uh","p":"UH","t":"<e/>"},)"
        R"({"w":"Spanish","p":"JJ","t":"<rm-4/><rpEndSub/>"},{"w":"cuisine","p":"NN","t":"<f/>"}]},)"
        R"({"speaker":"sys","tokens":[{"w":"we","p":"PRP","t":"<f/>"},{"w":"will","p":"MD","t":"<f/>"}]}]})"
        "\n");
  ASSERT_EQ(run("clean --use-gold --in " + path("ex2.jsonl") + " --out " + path("ex2_clean")), 0);
  const Corpus c = read_corpus(path("ex2_clean"));
  std::string words;
  for (const Token& t : c.dialogues[0].utterances[0].tokens) words += (words.empty() ? "" : " ") + t.word;
  EXPECT_EQ(words, "with Spanish cuisine");
  ASSERT_EQ(c.dialogues[0].utterances[1].tokens.size(), 2u);
  EXPECT_EQ(c.dialogues[0].utterances[1].tokens[1].word, "will");

  // Gold cleaning reproduces every stored fluent original.
  ASSERT_EQ(run("clean --use-gold --in " + path("train") + " --out " + path("train_clean") + " --report " +
                path("clean.json")),
            0);
  Json r = Json::parse(read(path("clean.json")));
  EXPECT_EQ(r.at("fluent_exact_match").at("all").at("rate"), 1.0);
  EXPECT_GT(r.at("fluent_exact_match").at("correction").at("total").get<int>(), 0);

  EXPECT_EQ(run("clean --model " + path("model.bin") + " --in " + path("dev") + " --out " + path("dev_clean")), 0);
}

TEST_F(CliTest, EvalReports) {
  ASSERT_EQ(run("eval --baseline fluent --test " + path("dev") + " --report " + path("base.json") + " > " +
                path("base.txt")),
            0);
  Json b = Json::parse(read(path("base.json")));
  EXPECT_EQ(b.at("F_e"), 0.0);
  EXPECT_EQ(b.at("F_rm"), 0.0);
  EXPECT_EQ(b.at("F_rps"), 0.0);
  EXPECT_NE(read(path("base.txt")).find("F_rps"), std::string::npos);

  ASSERT_EQ(run("eval --model " + path("model.bin") + " --test " + path("dev") + " --rm-match strict --report " +
                path("eval.json") + " > /dev/null"),
            0);
  Json e = Json::parse(read(path("eval.json")));
  for (const char* key : {"F_e", "F_rm", "F_rps", "accuracy"}) EXPECT_TRUE(e.contains(key)) << key;
  EXPECT_EQ(e.at("rm_match"), "strict");
  EXPECT_EQ(e.at("model").at("seed"), 9);
}

}  // namespace
}  // namespace disfl
