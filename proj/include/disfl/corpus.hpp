#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "disfl/tagset.hpp"
#include "json.hpp"

namespace disfl {

using Json = nlohmann::ordered_json;

// Separator between word and POS in combined vocabulary entries.
inline constexpr char kCombinedDelimiter = '|';

struct Token {
  std::string word;
  std::string pos;
  std::optional<Tag> tag;

  std::string combined() const { return word + kCombinedDelimiter + pos; }
  friend bool operator==(const Token&, const Token&) = default;
};

enum class Speaker { User, System };

std::string_view speaker_name(Speaker speaker);

struct Utterance {
  Speaker speaker = Speaker::User;
  std::vector<Token> tokens;
  // Generator annotations; empty for corpora from elsewhere.
  std::vector<std::string> phenomena;
  std::optional<std::vector<Token>> fluent;

  // True when every token carries a gold tag.
  bool has_tags() const;
  // Throws DataError when any token is untagged.
  TagSequence tags() const;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Corpus {
  std::string name;
  std::string config_hash;
  Json meta = Json::object();  // free-form provenance (generator config, seed, counters)
  std::vector<Dialogue> dialogues;

  std::size_t utterance_count() const;
  std::size_t token_count() const;
  bool fully_tagged() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Rejects empty fields and fields containing the combined-token delimiter.
void validate_token(const Token& token);

Json dialogue_to_json(const Dialogue& dialogue);
Dialogue dialogue_from_json(const Json& json);

// `path` is either a corpus directory (containing corpus.jsonl) or a .jsonl
// file; a sibling meta.json is read when present.
Corpus read_corpus(const std::filesystem::path& path);
// Writes <dir>/corpus.jsonl and <dir>/meta.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
std::string corpus_to_jsonl(const Corpus& corpus);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;
  static constexpr int kReserved = 3;

  // Entries ordered by descending count, ties by token string.
  static Vocabulary build(const Corpus& corpus, std::int64_t min_count = 1);
  static Vocabulary from_entries(std::vector<std::string> entries, std::vector<std::int64_t> counts);

  int lookup(std::string_view combined) const;
  int lookup(const Token& token) const { return lookup(token.combined()); }
  const std::string& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  std::int64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> entries_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
};

// Token ids followed by EOS; the LM target of token t is id t+1.
std::vector<int> encode_utterance(const Vocabulary& vocab, const Utterance& utterance);
std::vector<std::string> decode_ids(const Vocabulary& vocab, std::span<const int> ids);

using TagCounts = std::array<std::int64_t, Tag::kCount>;

struct ClassWeights {
  double gamma = 1.0;
  TagCounts counts{};
  std::array<double, Tag::kCount> weight{};  // 0 for classes absent from the data

  double operator[](int class_id) const { return weight[static_cast<std::size_t>(class_id)]; }
};

TagCounts count_tags(const Corpus& corpus);
// W_k = C_k^-gamma; throws ConfigError for gamma <= 0.
ClassWeights class_weights(const TagCounts& counts, double gamma);
ClassWeights class_weights(const Corpus& corpus, double gamma);

struct CorpusSplit {
  Corpus train, dev, test;
};
// Shuffles dialogues with `seed` and cuts by the given fractions (test gets
// the remainder).
CorpusSplit split_corpus(const Corpus& corpus, double train_fraction, double dev_fraction,
                         std::uint64_t seed);

}  // namespace disfl
