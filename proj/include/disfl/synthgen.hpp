#pragma once

// Seeded generator of restaurant-booking dialogues with hesitations,
// restarts and corrections mixed into user turns, carrying exact gold tags.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/random.hpp"
#include "disfl/tagset.hpp"

namespace disfl::synth {

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::size_t n_dialogues = 100;
  // Per user turn; a turn can receive each phenomenon at most once.
  double p_hesitation = 0.40;
  double p_correction = 0.21;
  double p_restart = 0.05;
  double restart_split = 0.5;       // fraction of restarts that are clausal
  double p_long_correction = 0.5;   // fraction of corrections that repeat the whole PP
  bool restart_fallback = true;     // try the other restart type when the sampled one does not fit
  std::vector<std::string> filler_lexicon{"uh", "uhm", "um"};
  std::vector<std::string> restart_interregna{"", "uhm yeah", "um", "uh"};
  std::vector<std::string> correction_interregna{"sorry", "oh no", "no sorry", "uhm sorry", "i mean"};
  std::string template_set = "restaurant";
  // Worker threads; never affects output bytes and is not part of the hash.
  unsigned threads = 1;

  // Throws ConfigError.
  void validate() const;
  Json to_json() const;
  static GeneratorConfig from_json(const Json& json);
  // hesitations | pp-restarts | cl-restarts | corrections | mixed
  static GeneratorConfig preset(std::string_view name);
  std::string hash() const;
};

enum class Slot { Cuisine, Location, PartySize, Price };
std::string_view slot_name(Slot slot);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return begin <= i && i < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct SlotOccurrence {
  Slot slot;
  Span span;
  bool corrected = false;
};

// An utterance under construction: tokens plus the bookkeeping (edit
// positions, repair structures, slot and PP spans) that every insertion keeps
// aligned with the token stream.
struct WorkingUtterance {
  Speaker speaker = Speaker::User;
  std::vector<Token> tokens;  // untagged
  std::vector<bool> edit;
  std::vector<RepairStructure> structures;  // onset order
  std::vector<SlotOccurrence> slots;
  std::vector<Span> pps;
  std::vector<Token> fluent;
  std::vector<std::string> phenomena;

  static WorkingUtterance fluent_utterance(Speaker speaker, std::vector<Token> tokens,
                                           std::vector<SlotOccurrence> slots = {},
                                           std::vector<Span> pps = {});

  std::vector<std::size_t> edit_positions() const;
  TagSequence tags() const;  // via structures_to_tags
  Utterance to_utterance() const;
  std::string text() const;
};

enum class Outcome { Applied, NotApplicable, Skipped };

// Deterministic building blocks; each returns Skipped (and leaves the
// utterance untouched) when the result would need a retrace beyond 8.
Outcome insert_hesitation(WorkingUtterance& u, std::size_t position, const std::vector<Token>& filler);
Outcome insert_correction(WorkingUtterance& u, std::size_t slot_index, const std::vector<Token>& distractor,
                          const std::vector<Token>& interregnum, bool long_distance);
Outcome insert_pp_restart(WorkingUtterance& u, std::size_t pp_index, std::size_t prefix_length,
                          const std::vector<std::vector<Token>>& interregna);
Outcome insert_cl_restart(WorkingUtterance& u, std::size_t break_position, const std::vector<Token>& interregnum);

// Sampling wrappers used by the generator.
Outcome apply_hesitation(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config);
Outcome apply_correction(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config);
Outcome apply_pp_restart(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config);
Outcome apply_cl_restart(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config);

// Filler / interregnum words -> tokens with POS from the shipped lexicon.
std::vector<Token> phrase_tokens(std::string_view phrase);
const std::vector<std::string>& slot_fillers(Slot slot);

// Instantiates a template string such as "we/PRP will/MD be/VB {size}" or
// "[in/IN {location}] please/UH"; brackets mark PP spans.
WorkingUtterance instantiate(std::string_view pattern, Speaker speaker,
                             const std::map<Slot, std::string>& values);

struct GenerationStats {
  std::map<std::string, std::int64_t> counters;
  void add(const GenerationStats& other);
};

// Sub-seed for dialogue `index` is derive_seed(config.seed, index).
std::vector<WorkingUtterance> generate_dialogue(const GeneratorConfig& config, std::size_t index,
                                                GenerationStats& stats);
std::string dialogue_id(std::size_t index);
Corpus generate_corpus(const GeneratorConfig& config);

}  // namespace disfl::synth
