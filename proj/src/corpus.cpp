#include "disfl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "disfl/random.hpp"

namespace disfl {

namespace fs = std::filesystem;

std::string_view speaker_name(Speaker speaker) { return speaker == Speaker::User ? "usr" : "sys"; }

bool Utterance::has_tags() const {
  return !tokens.empty() &&
         std::all_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.tag.has_value(); });
}

TagSequence Utterance::tags() const {
  TagSequence out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (!t.tag) throw DataError("utterance token '" + t.word + "' has no gold tag");
    out.push_back(*t.tag);
  }
  return out;
}

std::size_t Corpus::utterance_count() const {
  std::size_t n = 0;
  for (const Dialogue& d : dialogues) n += d.utterances.size();
  return n;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const Dialogue& d : dialogues)
    for (const Utterance& u : d.utterances) n += u.tokens.size();
  return n;
}

bool Corpus::fully_tagged() const {
  for (const Dialogue& d : dialogues)
    for (const Utterance& u : d.utterances)
      if (!u.tokens.empty() && !u.has_tags()) return false;
  return true;
}

void validate_token(const Token& token) {
  if (token.word.empty()) throw DataError("empty word");
  if (token.pos.empty()) throw DataError("empty POS for word '" + token.word + "'");
  if (token.word.find(kCombinedDelimiter) != std::string::npos)
    throw DataError("word contains '|': '" + token.word + "'");
  if (token.pos.find(kCombinedDelimiter) != std::string::npos)
    throw DataError("POS contains '|': '" + token.pos + "'");
}

namespace {

Json token_to_json(const Token& token) {
  Json j = Json::object();
  j["w"] = token.word;
  j["p"] = token.pos;
  if (token.tag) j["t"] = render_tag(*token.tag);
  return j;
}

const Json& required(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

std::string required_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = required(obj, key, where);
  if (!v.is_string()) throw DataError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

Token token_from_json(const Json& j, const std::string& where, bool allow_tag) {
  Token token;
  token.word = required_string(j, "w", where);
  token.pos = required_string(j, "p", where);
  if (allow_tag && j.contains("t")) {
    if (!j.at("t").is_string()) throw DataError(where + ": field 't' must be a string");
    try {
      token.tag = parse_tag(j.at("t").get<std::string>());
    } catch (const ParseError& e) {
      throw DataError(where + ".t: " + e.what());
    }
  }
  try {
    validate_token(token);
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return token;
}

std::vector<Token> tokens_from_json(const Json& arr, const std::string& where, bool allow_tag) {
  if (!arr.is_array()) throw DataError(where + " must be an array");
  std::vector<Token> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(token_from_json(arr[i], where + "[" + std::to_string(i) + "]", allow_tag));
  return out;
}

Json meta_json(const Corpus& corpus) {
  Json j = Json::object();
  j["name"] = corpus.name;
  j["config_hash"] = corpus.config_hash;
  j["meta"] = corpus.meta;
  return j;
}

}  // namespace

Json dialogue_to_json(const Dialogue& dialogue) {
  Json j = Json::object();
  j["id"] = dialogue.id;
  Json utts = Json::array();
  for (const Utterance& u : dialogue.utterances) {
    Json ju = Json::object();
    ju["speaker"] = std::string(speaker_name(u.speaker));
    Json toks = Json::array();
    for (const Token& t : u.tokens) toks.push_back(token_to_json(t));
    ju["tokens"] = std::move(toks);
    if (!u.phenomena.empty()) ju["phenomena"] = u.phenomena;
    if (u.fluent) {
      Json fl = Json::array();
      for (const Token& t : *u.fluent) fl.push_back(token_to_json(t));
      ju["fluent"] = std::move(fl);
    }
    utts.push_back(std::move(ju));
  }
  j["utterances"] = std::move(utts);
  return j;
}

Dialogue dialogue_from_json(const Json& j) {
  Dialogue d;
  d.id = required_string(j, "id", "dialogue");
  const Json& utts = required(j, "utterances", "dialogue " + d.id);
  if (!utts.is_array()) throw DataError("dialogue " + d.id + ": 'utterances' must be an array");
  for (std::size_t ui = 0; ui < utts.size(); ++ui) {
    const std::string where = "utterances[" + std::to_string(ui) + "]";
    const Json& ju = utts[ui];
    Utterance u;
    std::string speaker = required_string(ju, "speaker", where);
    if (speaker == "usr")
      u.speaker = Speaker::User;
    else if (speaker == "sys")
      u.speaker = Speaker::System;
    else
      throw DataError(where + ".speaker: unknown speaker '" + speaker + "'");
    u.tokens = tokens_from_json(required(ju, "tokens", where), where + ".tokens", true);
    if (ju.contains("phenomena")) {
      for (const Json& p : ju.at("phenomena")) {
        if (!p.is_string()) throw DataError(where + ".phenomena: entries must be strings");
        u.phenomena.push_back(p.get<std::string>());
      }
    }
    if (ju.contains("fluent")) u.fluent = tokens_from_json(ju.at("fluent"), where + ".fluent", false);

    std::size_t tagged = std::count_if(u.tokens.begin(), u.tokens.end(),
                                       [](const Token& t) { return t.tag.has_value(); });
    if (tagged != 0 && tagged != u.tokens.size())
      throw DataError(where + ": tags must be given for all tokens or none");
    if (tagged != 0) {
      try {
        resolve_structures(u.tags());
      } catch (const StructureError& e) {
        throw DataError(where + ".tokens: " + e.what());
      }
    }
    d.utterances.push_back(std::move(u));
  }
  return d;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  std::set<std::string> ids;
  for (const Dialogue& d : corpus.dialogues) {
    if (!ids.insert(d.id).second) throw DataError("duplicate dialogue id '" + d.id + "'");
    out += dialogue_to_json(d).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  const std::string body = corpus_to_jsonl(corpus);
  {
    std::ofstream out(dir / "corpus.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / "corpus.jsonl").string());
    out << body;
  }
  std::ofstream meta(dir / "meta.json", std::ios::binary | std::ios::trunc);
  if (!meta) throw DataError("cannot write " + (dir / "meta.json").string());
  meta << meta_json(corpus).dump(2) << '\n';
}

Corpus read_corpus(const fs::path& path) {
  fs::path file = fs::is_directory(path) ? path / "corpus.jsonl" : path;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + file.string());

  Corpus corpus;
  corpus.name = file.parent_path().filename().string();
  fs::path meta_path = file.parent_path() / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream meta_in(meta_path, std::ios::binary);
    Json meta;
    try {
      meta = Json::parse(meta_in);
    } catch (const Json::parse_error& e) {
      throw DataError(meta_path.string() + ": " + e.what());
    }
    if (meta.contains("name")) corpus.name = meta.at("name").get<std::string>();
    if (meta.contains("config_hash")) corpus.config_hash = meta.at("config_hash").get<std::string>();
    if (meta.contains("meta")) corpus.meta = meta.at("meta");
  }

  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = file.filename().string() + ":" + std::to_string(line_no);
    Dialogue d;
    try {
      d = dialogue_from_json(Json::parse(line));
    } catch (const Json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!ids.insert(d.id).second) throw DataError(where + ": duplicate dialogue id '" + d.id + "'");
    corpus.dialogues.push_back(std::move(d));
  }
  return corpus;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::int64_t min_count) {
  std::map<std::string, std::int64_t> counts;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances)
      for (const Token& t : u.tokens) ++counts[t.combined()];

  std::vector<std::pair<std::string, std::int64_t>> sorted;
  for (auto& [token, count] : counts)
    if (count >= min_count) sorted.emplace_back(token, count);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> entries{"<pad>", "<unk>", "<eos>"};
  std::vector<std::int64_t> entry_counts{0, 0, 0};
  for (auto& [token, count] : sorted) {
    entries.push_back(token);
    entry_counts.push_back(count);
  }
  return from_entries(std::move(entries), std::move(entry_counts));
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries, std::vector<std::int64_t> counts) {
  if (entries.size() != counts.size()) throw DataError("vocabulary entries/counts size mismatch");
  if (entries.size() < kReserved || entries[kPad] != "<pad>" || entries[kUnk] != "<unk>" ||
      entries[kEos] != "<eos>")
    throw DataError("vocabulary lacks reserved entries");
  Vocabulary v;
  v.entries_ = std::move(entries);
  v.counts_ = std::move(counts);
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    if (!v.index_.emplace(v.entries_[i], static_cast<int>(i)).second)
      throw DataError("duplicate vocabulary entry '" + v.entries_[i] + "'");
  }
  return v;
}

int Vocabulary::lookup(std::string_view combined) const {
  auto it = index_.find(std::string(combined));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> encode_utterance(const Vocabulary& vocab, const Utterance& utterance) {
  std::vector<int> ids;
  ids.reserve(utterance.tokens.size() + 1);
  for (const Token& t : utterance.tokens) ids.push_back(vocab.lookup(t));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

std::vector<std::string> decode_ids(const Vocabulary& vocab, std::span<const int> ids) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == Vocabulary::kEos) break;
    out.push_back(vocab.entry(id));
  }
  return out;
}

TagCounts count_tags(const Corpus& corpus) {
  TagCounts counts{};
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances)
      for (const Token& t : u.tokens)
        if (t.tag) ++counts[static_cast<std::size_t>(t.tag->index())];
  return counts;
}

ClassWeights class_weights(const TagCounts& counts, double gamma) {
  if (!(gamma > 0) || !std::isfinite(gamma)) throw ConfigError("class-weight gamma must be > 0");
  ClassWeights w;
  w.gamma = gamma;
  w.counts = counts;
  for (std::size_t k = 0; k < counts.size(); ++k)
    w.weight[k] = counts[k] > 0 ? std::pow(static_cast<double>(counts[k]), -gamma) : 0.0;
  return w;
}

ClassWeights class_weights(const Corpus& corpus, double gamma) {
  return class_weights(count_tags(corpus), gamma);
}

CorpusSplit split_corpus(const Corpus& corpus, double train_fraction, double dev_fraction,
                         std::uint64_t seed) {
  if (train_fraction < 0 || dev_fraction < 0 || train_fraction + dev_fraction > 1)
    throw ConfigError("split fractions must be nonnegative and sum to at most 1");
  std::vector<std::size_t> order(corpus.dialogues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  const auto n = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_fraction));
  const auto n_dev = static_cast<std::size_t>(std::floor(n * dev_fraction));

  CorpusSplit split;
  for (Corpus* part : {&split.train, &split.dev, &split.test}) {
    part->config_hash = corpus.config_hash;
    part->meta = corpus.meta;
  }
  split.train.name = corpus.name + "-train";
  split.dev.name = corpus.name + "-dev";
  split.test.name = corpus.name + "-test";
  for (std::size_t i = 0; i < order.size(); ++i) {
    Corpus& target = i < n_train ? split.train : i < n_train + n_dev ? split.dev : split.test;
    target.dialogues.push_back(corpus.dialogues[order[i]]);
  }
  return split;
}

}  // namespace disfl
