// disfl: corpus generation, training, tagging, cleaning, evaluation and
// corpus statistics.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric fault.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "disfl/corpus.hpp"
#include "disfl/metrics.hpp"
#include "disfl/neuralnet.hpp"
#include "disfl/synthgen.hpp"
#include "disfl/trainer.hpp"

namespace fs = std::filesystem;
using namespace disfl;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

Json model_summary(const nn::Model& model, const fs::path& path) {
  return {{"path", path.string()}, {"seed", model.hyper.seed}, {"vocab_size", model.hyper.vocab_size},
          {"format_version", nn::kModelFormatVersion}};
}

// --- generate -------------------------------------------------------------

struct GenerateArgs {
  std::optional<std::string> config, preset;
  std::optional<std::size_t> dialogues;
  std::optional<double> p_hesitation, p_correction, p_restart;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  synth::GeneratorConfig c;
  if (a.config) c = synth::GeneratorConfig::from_json(read_json_file(*a.config));
  if (a.preset) c = synth::GeneratorConfig::preset(*a.preset);
  if (a.dialogues) c.n_dialogues = *a.dialogues;
  if (a.p_hesitation) c.p_hesitation = *a.p_hesitation;
  if (a.p_correction) c.p_correction = *a.p_correction;
  if (a.p_restart) c.p_restart = *a.p_restart;
  if (a.seed) c.seed = *a.seed;
  c.threads = a.threads;
  c.validate();
  Corpus corpus = synth::generate_corpus(c);
  write_corpus(corpus, a.out);
  std::fprintf(stderr, "generated %zu dialogues, %zu utterances, %zu tokens (seed %llu, config %s) -> %s\n",
               corpus.dialogues.size(), corpus.utterance_count(), corpus.token_count(),
               static_cast<unsigned long long>(c.seed), c.hash().c_str(), a.out.c_str());
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string train, dev, out;
  std::optional<std::string> hyper, report;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  nn::Hyperparams hyper;
  train::TrainConfig config;
  if (a.hyper) {
    // Hyperparameters at top level; optional "training" object for the loop.
    Json j = read_json_file(*a.hyper);
    if (!j.is_object()) throw ConfigError(*a.hyper + ": expected a JSON object");
    if (j.contains("training")) {
      config = train::TrainConfig::from_json(j.at("training"));
      j.erase("training");
    }
    hyper = nn::Hyperparams::from_json(j);
  }
  if (a.seed) {
    hyper.seed = *a.seed;
    config.seed = *a.seed;
  }
  if (a.epochs) config.max_epochs = *a.epochs;
  if (a.lr) config.learning_rate = *a.lr;
  config.validate();

  const Corpus train_corpus = read_corpus(a.train);
  const Corpus dev_corpus = read_corpus(a.dev);
  auto progress = [&](const train::EpochRecord& e) {
    if (a.quiet) return;
    std::fprintf(stderr, "epoch %3d  lr %.5f  loss %.4f (tag %.4f lm %.4f)  dev F_e %.4f F_rm %.4f F_rps %.4f  %.1fs\n",
                 e.epoch, e.learning_rate, e.train_loss.total, e.train_loss.main, e.train_loss.lm, e.dev.edit.f1(),
                 e.dev.rm.f1(), e.dev.rps.f1(), e.seconds);
  };
  train::TrainResult result = train::train(train_corpus, dev_corpus, hyper, config, progress);
  nn::save_model(result.model, a.out);
  Json report = result.report.to_json();
  report["train_path"] = a.train;
  report["dev_path"] = a.dev;
  write_json_file(report, a.report ? fs::path(*a.report) : fs::path(a.out + ".report.json"));
  std::fprintf(stderr, "best epoch %d (dev F_rm %.4f), stopped: %s -> %s\n", result.report.best_epoch,
               result.report.best_dev_f_rm, result.report.stop_reason.c_str(), a.out.c_str());
  return 0;
}

// --- tag ------------------------------------------------------------------

Token parse_stream_token(const std::string& line, std::size_t line_no) {
  const std::size_t begin = line.find_first_not_of(" \t\r");
  const std::size_t end = line.find_last_not_of(" \t\r");
  const std::string text = line.substr(begin, end - begin + 1);
  const std::size_t bar = text.find(kCombinedDelimiter);
  if (text.find_first_of(" \t") != std::string::npos || bar == std::string::npos || bar == 0 ||
      bar + 1 == text.size() || text.find(kCombinedDelimiter, bar + 1) != std::string::npos)
    throw DataError("line " + std::to_string(line_no) + ": expected one word|POS token, got '" + text + "'");
  return Token{text.substr(0, bar), text.substr(bar + 1), std::nullopt};
}

// One output line per input line, flushed before the next read. Tags are
// never revised.
int run_stream(const nn::Model& model, std::istream& in, std::ostream& out) {
  nn::Session<float> session(model.params, model.hyper);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      session.end_utterance();
      out << '\n' << std::flush;
      continue;
    }
    const Token token = parse_stream_token(line, line_no);
    out << render_tag(session.feed(model.vocab.lookup(token))) << '\n' << std::flush;
  }
  session.close();
  return 0;
}

int run_tag(const std::string& model_path, const std::optional<std::string>& in_path,
            const std::optional<std::string>& out_path, bool stream) {
  const nn::Model model = nn::load_model(model_path);
  if (stream) return run_stream(model, std::cin, std::cout);
  Corpus corpus = read_corpus(*in_path);
  std::size_t dropped = 0;
  for (Dialogue& d : corpus.dialogues)
    for (Utterance& u : d.utterances) {
      // Stored tags must resolve, so invalid predictions are rewritten.
      LenientResolution r = resolve_lenient(model.tag(u));
      dropped += r.dropped;
      for (std::size_t i = 0; i < u.tokens.size(); ++i) u.tokens[i].tag = r.tags[i];
    }
  corpus.meta["tagged_by"] = model_summary(model, model_path);
  corpus.meta["dropped_predicted_tags"] = dropped;
  write_corpus(corpus, *out_path);
  std::fprintf(stderr, "tagged %zu tokens (%zu predicted tags dropped) -> %s\n", corpus.token_count(), dropped,
               out_path->c_str());
  return 0;
}

// --- clean ----------------------------------------------------------------

bool same_words(const std::vector<Token>& a, const std::vector<Token>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].word != b[i].word || a[i].pos != b[i].pos) return false;
  return true;
}

int run_clean(const std::optional<std::string>& model_path, const std::string& in_path, const std::string& out_path,
              bool use_gold, const std::optional<std::string>& report_path) {
  std::optional<nn::Model> model;
  if (!use_gold) model = nn::load_model(*model_path);
  Corpus corpus = read_corpus(in_path);
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> matches;  // label -> (exact, total)
  std::int64_t changed = 0;
  for (Dialogue& d : corpus.dialogues)
    for (Utterance& u : d.utterances) {
      const TagSequence tags = use_gold ? u.tags() : model->tag(u);
      LenientResolution r = resolve_lenient(tags);
      const auto edits = edit_positions(r.tags);
      std::vector<Token> cleaned = clean_utterance<Token>(u.tokens, r.structures, edits);
      for (Token& t : cleaned) t.tag.reset();
      changed += cleaned.size() != u.tokens.size();
      if (u.fluent) {
        const bool exact = same_words(cleaned, *u.fluent);
        auto bump = [&](const std::string& label) {
          matches[label].first += exact;
          ++matches[label].second;
        };
        bump("all");
        for (const std::string& p : u.phenomena) bump(p);
      }
      u.tokens = std::move(cleaned);
    }
  corpus.meta["cleaned_by"] = use_gold ? Json("gold") : model_summary(*model, *model_path);
  write_corpus(corpus, out_path);

  Json report = {{"utterances", corpus.utterance_count()}, {"changed", changed}};
  Json exact = Json::object();
  for (const auto& [label, c] : matches)
    exact[label] = {{"exact", c.first}, {"total", c.second},
                    {"rate", c.second ? static_cast<double>(c.first) / static_cast<double>(c.second) : 0.0}};
  report["fluent_exact_match"] = exact;
  std::fprintf(stderr, "cleaned %zu utterances (%lld changed) -> %s\n", corpus.utterance_count(),
               static_cast<long long>(changed), out_path.c_str());
  for (const auto& [label, c] : matches)
    std::fprintf(stderr, "  %-12s %lld/%lld match the stored fluent original\n", label.c_str(),
                 static_cast<long long>(c.first), static_cast<long long>(c.second));
  if (report_path) write_json_file(report, *report_path);
  return 0;
}

// --- eval -----------------------------------------------------------------

int run_eval(const std::optional<std::string>& model_path, const std::optional<std::string>& baseline,
             const std::string& test_path, const std::optional<std::string>& report_path, const std::string& rm_match) {
  const metrics::RmMatch mode = metrics::parse_rm_match(rm_match);
  const Corpus corpus = read_corpus(test_path);
  metrics::EvalReport r;
  Json source;
  if (baseline) {
    if (*baseline != "fluent") throw ConfigError("unknown baseline '" + *baseline + "' (expected fluent)");
    r = metrics::evaluate(corpus, [](const Utterance& u) { return TagSequence(u.tokens.size(), Tag::fluent()); },
                          mode);
    source = {{"baseline", "fluent"}};
  } else {
    const nn::Model model = nn::load_model(*model_path);
    r = metrics::evaluate(corpus, [&](const Utterance& u) { return model.tag(u); }, mode);
    source = model_summary(model, *model_path);
  }
  std::cout << r.table() << std::flush;
  if (report_path) {
    Json j = r.to_json();
    j["model"] = source;
    j["test_path"] = test_path;
    write_json_file(j, *report_path);
  }
  return 0;
}

// --- inspect --------------------------------------------------------------

Json corpus_stats(const Corpus& corpus) {
  Json j = {{"dialogues", corpus.dialogues.size()},
            {"utterances", corpus.utterance_count()},
            {"tokens", corpus.token_count()},
            {"tagged", corpus.fully_tagged()}};
  if (corpus.fully_tagged()) {
    const TagCounts counts = count_tags(corpus);
    std::int64_t sub = 0, del = 0, mid = 0;
    Json per_tag = Json::object();
    for (int k = 0; k < Tag::kCount; ++k) {
      const Tag t = Tag::from_index(k);
      const std::int64_t n = counts[static_cast<std::size_t>(k)];
      per_tag[render_tag(t)] = n;
      if (!t.is_onset()) continue;
      (t.marker() == EndMarker::EndSub ? sub : t.marker() == EndMarker::EndDel ? del : mid) += n;
    }
    j["labels"] = Json::array({
        {{"type", "fluent token"}, {"label", "<f/>"}, {"count", counts[0]}},
        {{"type", "edit token"}, {"label", "<e/>"}, {"count", counts[1]}},
        {{"type", "single-token substitution"}, {"label", "<rm-{1-8}/><rpEndSub/>"}, {"count", sub}},
        {{"type", "single-token deletion"}, {"label", "<rm-{1-8}/><rpEndDel/>"}, {"count", del}},
        {{"type", "multi-token substitution start"}, {"label", "<rm-{1-8}/><rpMid/>"}, {"count", mid}},
        {{"type", "multi-token substitution end"},
         {"label", "<rpEndSub/>"},
         {"count", counts[static_cast<std::size_t>(Tag::end_only().index())]}},
    });
    j["per_tag"] = per_tag;
  }
  std::int64_t user_turns = 0;
  std::map<std::string, std::int64_t> turns;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances) {
      if (u.speaker != Speaker::User) continue;
      ++user_turns;
      for (const std::string& p : u.phenomena) ++turns[p];
    }
  Json phen = Json::object();
  for (const auto& [p, n] : turns)
    phen[p] = {{"turns", n}, {"percent", user_turns ? 100.0 * static_cast<double>(n) / static_cast<double>(user_turns) : 0.0}};
  j["user_turns"] = user_turns;
  j["phenomena"] = phen;
  if (corpus.meta.contains("seed")) j["seed"] = corpus.meta.at("seed");
  return j;
}

int run_inspect(const std::string& in_path, const std::optional<std::string>& report_path) {
  const Corpus corpus = read_corpus(in_path);
  const Json s = corpus_stats(corpus);
  std::printf("%zu dialogues, %zu utterances, %zu tokens\n", corpus.dialogues.size(), corpus.utterance_count(),
              corpus.token_count());
  if (s.contains("labels")) {
    const double total = static_cast<double>(corpus.token_count());
    std::printf("%-32s %-24s %10s %8s\n", "label type", "label", "count", "share");
    for (const Json& row : s.at("labels")) {
      const auto n = row.at("count").get<std::int64_t>();
      std::printf("%-32s %-24s %10lld %7.3f%%\n", row.at("type").get<std::string>().c_str(),
                  row.at("label").get<std::string>().c_str(), static_cast<long long>(n),
                  total > 0 ? 100.0 * static_cast<double>(n) / total : 0.0);
    }
  } else {
    std::printf("corpus is not fully tagged; label counts omitted\n");
  }
  std::printf("user turns: %lld\n", static_cast<long long>(s.at("user_turns").get<std::int64_t>()));
  for (const auto& [p, v] : s.at("phenomena").items())
    std::printf("  %-12s %8lld turns %7.3f%%\n", p.c_str(), static_cast<long long>(v.at("turns").get<std::int64_t>()),
                v.at("percent").get<double>());
  if (report_path) write_json_file(s, *report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental disfluency detection toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dialogue corpus");
  auto* gen_config = generate->add_option("--config", gen.config, "GeneratorConfig JSON file");
  generate->add_option("--preset", gen.preset, "hesitations | pp-restarts | cl-restarts | corrections | mixed")
      ->excludes(gen_config);
  generate->add_option("--dialogues", gen.dialogues, "Number of dialogues");
  generate->add_option("--p-hesitation", gen.p_hesitation, "Per-turn hesitation probability");
  generate->add_option("--p-correction", gen.p_correction, "Per-turn correction probability");
  generate->add_option("--p-restart", gen.p_restart, "Per-turn restart probability");
  generate->add_option("--seed", gen.seed, "Master seed");
  generate->add_option("--threads", gen.threads, "Worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);
  generate->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a tagger");
  train_cmd->add_option("--train", tr.train, "Training corpus")->required();
  train_cmd->add_option("--dev", tr.dev, "Dev corpus")->required();
  train_cmd->add_option("--hyper", tr.hyper, "Hyperparameter JSON (optional \"training\" section)");
  train_cmd->add_option("--out", tr.out, "Model file")->required();
  train_cmd->add_option("--seed", tr.seed, "Seed for initialisation and shuffling");
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", tr.lr, "Initial learning rate");
  train_cmd->add_option("--report", tr.report, "TrainReport JSON (default MODEL.report.json)");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch progress");

  std::string tag_model;
  std::optional<std::string> tag_in, tag_out;
  bool tag_stream = false;
  auto* tag = app.add_subcommand("tag", "Tag a corpus or a token stream");
  tag->add_option("--model", tag_model, "Model file")->required();
  auto* tag_in_opt = tag->add_option("--in", tag_in, "Input corpus");
  auto* tag_out_opt = tag->add_option("--out", tag_out, "Output corpus directory");
  auto* stream_opt = tag->add_flag("--stream", tag_stream, "Read word|POS lines from stdin, write one tag per line");
  stream_opt->excludes(tag_in_opt)->excludes(tag_out_opt);
  tag_in_opt->needs(tag_out_opt);
  tag_out_opt->needs(tag_in_opt);

  std::optional<std::string> clean_model, clean_report;
  std::string clean_in, clean_out;
  bool use_gold = false;
  auto* clean = app.add_subcommand("clean", "Remove predicted disfluencies from a corpus");
  auto* clean_model_opt = clean->add_option("--model", clean_model, "Model file");
  clean->add_option("--in", clean_in, "Input corpus")->required();
  clean->add_option("--out", clean_out, "Output corpus directory")->required();
  clean->add_flag("--use-gold", use_gold, "Clean with gold tags instead of a model")->excludes(clean_model_opt);
  clean->add_option("--report", clean_report, "JSON summary of the cleaning");

  std::optional<std::string> eval_model, eval_report, eval_baseline;
  std::string eval_test, rm_match = "rm-only";
  auto* eval = app.add_subcommand("eval", "Score a model on a tagged corpus");
  auto* eval_model_opt = eval->add_option("--model", eval_model, "Model file");
  eval->add_option("--baseline", eval_baseline, "Score a baseline instead of a model (fluent)")
      ->excludes(eval_model_opt);
  eval->add_option("--test", eval_test, "Test corpus")->required();
  eval->add_option("--report", eval_report, "EvalReport JSON");
  eval->add_option("--rm-match", rm_match, "rm-only | strict");

  std::string inspect_in;
  std::optional<std::string> inspect_report;
  bool stats = false;
  auto* inspect = app.add_subcommand("inspect", "Corpus statistics");
  inspect->add_option("--in", inspect_in, "Corpus")->required();
  inspect->add_flag("--stats", stats, "Label frequency table and phenomenon rates");
  inspect->add_option("--report", inspect_report, "Statistics JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train_cmd) return run_train(tr);
    if (*tag) {
      if (!tag_stream && !tag_in) throw ConfigError("tag needs --in and --out, or --stream");
      return run_tag(tag_model, tag_in, tag_out, tag_stream);
    }
    if (*clean) {
      if (!use_gold && !clean_model) throw ConfigError("clean needs --model or --use-gold");
      return run_clean(clean_model, clean_in, clean_out, use_gold, clean_report);
    }
    if (*eval) {
      if (!eval_model && !eval_baseline) throw ConfigError("eval needs --model or --baseline");
      return run_eval(eval_model, eval_baseline, eval_test, eval_report, rm_match);
    }
    if (*inspect) return run_inspect(inspect_in, inspect_report);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
