#pragma once

// Micro-averaged F1 over edit tokens, repair-onset tokens and repair-span
// membership, plus tag accuracy and a confusion table.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "disfl/corpus.hpp"
#include "disfl/tagset.hpp"

namespace disfl::metrics {

struct F1Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  // All three are 0 when their denominator is 0.
  double precision() const;
  double recall() const;
  double f1() const;

  F1Counts& operator+=(const F1Counts& o);
  friend bool operator==(const F1Counts&, const F1Counts&) = default;
};

// RmOnly compares the retrace only; Strict also requires the end marker.
enum class RmMatch { RmOnly, Strict };
std::string_view rm_match_name(RmMatch mode);
RmMatch parse_rm_match(std::string_view name);  // "rm-only" | "strict"; throws ConfigError

// All functions take aligned gold/predicted sequences and throw DataError
// on a length mismatch.
F1Counts f1_edit(std::span<const TagSequence> gold, std::span<const TagSequence> pred);
F1Counts f1_rm(std::span<const TagSequence> gold, std::span<const TagSequence> pred, RmMatch mode = RmMatch::RmOnly);

// Token membership in [reparandum_start, repair_end) of any structure.
// Predicted sequences go through resolve_lenient; the number of tags it
// dropped is added to `dropped` when given. Gold must resolve.
F1Counts f1_rps(std::span<const TagSequence> gold, std::span<const TagSequence> pred,
                std::int64_t* dropped = nullptr);

// Whole structures: a predicted structure is a hit when an identical gold
// structure exists.
F1Counts span_exact(std::span<const TagSequence> gold, std::span<const TagSequence> pred);

using Confusion = std::array<std::array<std::int64_t, Tag::kCount>, Tag::kCount>;  // [gold][pred]

struct EvalReport {
  RmMatch mode = RmMatch::RmOnly;
  F1Counts edit, rm, rps, spans;
  std::int64_t correct_tags = 0;
  std::int64_t tokens = 0;
  std::int64_t utterances = 0;
  std::int64_t dropped = 0;
  Confusion confusion{};

  double accuracy() const { return tokens ? static_cast<double>(correct_tags) / static_cast<double>(tokens) : 0.0; }
  Json to_json() const;
  std::string table() const;
};

EvalReport score(std::span<const TagSequence> gold, std::span<const TagSequence> pred, RmMatch mode = RmMatch::RmOnly);

using Predictor = std::function<TagSequence(const Utterance&)>;

// Tags every utterance of a fully tagged corpus with `predict` and scores
// it. Throws DataError for untagged corpora.
EvalReport evaluate(const Corpus& corpus, const Predictor& predict, RmMatch mode = RmMatch::RmOnly);

}  // namespace disfl::metrics
