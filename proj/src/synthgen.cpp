#include "disfl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace disfl::synth {

namespace {

// Closed lexicon for interregnum / filler words.
const std::map<std::string, std::string, std::less<>>& filler_pos() {
  static const std::map<std::string, std::string, std::less<>> pos{
      {"uh", "UH"},    {"uhm", "UH"}, {"um", "UH"},    {"yeah", "UH"}, {"oh", "UH"},  {"no", "UH"},
      {"well", "UH"},  {"okay", "UH"}, {"sorry", "JJ"}, {"i", "PRP"},  {"mean", "VBP"}, {"like", "UH"},
  };
  return pos;
}

struct TemplateSet {
  std::vector<std::string> openings;
  std::map<Slot, std::vector<std::string>> answers;
  std::map<Slot, std::string> questions;
  std::string greeting, acknowledge, searching, api_call;
};

const TemplateSet& restaurant_templates() {
  static const TemplateSet set{
      {
          "can/MD you/PRP make/VB a/DT restaurant/NN reservation/NN [for/IN {size} people/NNS] "
          "[with/IN {cuisine} cuisine/NN] [in/IN a/DT {price} price/NN range/NN]",
          "can/MD you/PRP make/VB a/DT restaurant/NN reservation/NN [in/IN {location}]",
          "i/PRP would/MD like/VB to/TO book/VB a/DT table/NN [with/IN {cuisine} food/NN]",
          "may/MD i/PRP have/VB a/DT table/NN [for/IN {size} people/NNS] [with/IN {cuisine} food/NN] "
          "[in/IN a/DT {price} price/NN range/NN] [in/IN {location}]",
          "i/PRP would/MD like/VB to/TO book/VB a/DT table/NN [in/IN a/DT {price} price/NN range/NN]",
          "can/MD you/PRP book/VB a/DT table/NN [in/IN {location}] [for/IN {size} people/NNS]",
          "i/PRP am/VBP looking/VBG for/IN a/DT {price} restaurant/NN [in/IN {location}]",
      },
      {
          {Slot::Cuisine,
           {"[with/IN {cuisine} food/NN]", "i/PRP love/VBP {cuisine} food/NN",
            "[with/IN {cuisine} cuisine/NN] please/UH"}},
          {Slot::Location,
           {"[in/IN {location}]", "[in/IN {location}] please/UH", "it/PRP should/MD be/VB [in/IN {location}]"}},
          {Slot::PartySize,
           {"we/PRP will/MD be/VB {size}", "[for/IN {size} people/NNS] please/UH",
            "we/PRP will/MD be/VB {size} people/NNS"}},
          {Slot::Price,
           {"[in/IN a/DT {price} price/NN range/NN] please/UH",
            "i/PRP am/VBP looking/VBG for/IN a/DT {price} restaurant/NN"}},
      },
      {
          {Slot::Cuisine, "any/DT preference/NN on/IN a/DT type/NN of/IN cuisine/NN"},
          {Slot::Location, "where/WRB should/MD it/PRP be/VB"},
          {Slot::PartySize, "how/WRB many/JJ people/NNS would/MD be/VB in/IN your/PRP$ party/NN"},
          {Slot::Price, "which/WDT price/NN range/NN are/VBP you/PRP looking/VBG for/IN"},
      },
      "hello/UH what/WP can/MD i/PRP help/VB you/PRP with/IN today/NN",
      "i/PRP am/VBP on/IN it/PRP",
      "ok/UH let/VB me/PRP look/VB into/IN some/DT options/NNS for/IN you/PRP",
      "api_call/NN {cuisine} {location} {size} {price}",
  };
  return set;
}

constexpr Slot kSlotOrder[] = {Slot::Cuisine, Slot::Location, Slot::PartySize, Slot::Price};

std::string_view slot_pos(Slot slot) {
  switch (slot) {
    case Slot::Cuisine:
    case Slot::Price:
      return "JJ";
    case Slot::Location:
      return "NNP";
    case Slot::PartySize:
      return "CD";
  }
  return "NN";
}

std::optional<Slot> slot_from_name(std::string_view name) {
  for (Slot s : kSlotOrder)
    if (slot_name(s) == name) return s;
  return std::nullopt;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void shift_span(Span& s, std::size_t p, std::size_t k) {
  if (p <= s.begin) {
    s.begin += k;
    s.end += k;
  } else if (p < s.end) {
    s.end += k;
  }
}

// Moves a structure's boundaries for k tokens inserted before position p.
// Insertions at the interregnum boundary join the interregnum; only edit
// tokens may land there.
void shift_structure(RepairStructure& s, std::size_t p, std::size_t k) {
  if (p <= s.reparandum_start) {
    s.reparandum_start += k;
    s.reparandum_end += k;
    s.interregnum_start += k;
    s.interregnum_end += k;
    s.repair_start += k;
    s.repair_end += k;
  } else if (p < s.reparandum_end) {
    s.reparandum_end += k;
    s.interregnum_start += k;
    s.interregnum_end += k;
    s.repair_start += k;
    s.repair_end += k;
  } else if (p <= s.interregnum_end) {
    s.interregnum_end += k;
    s.repair_start += k;
    s.repair_end += k;
  } else if (p < s.repair_end) {
    s.repair_end += k;
  }
}

WorkingUtterance inserted(const WorkingUtterance& u, std::size_t p, const std::vector<Token>& tokens,
                          const std::vector<bool>& edit) {
  WorkingUtterance out = u;
  const std::size_t k = tokens.size();
  out.tokens.insert(out.tokens.begin() + static_cast<std::ptrdiff_t>(p), tokens.begin(), tokens.end());
  out.edit.insert(out.edit.begin() + static_cast<std::ptrdiff_t>(p), edit.begin(), edit.end());
  for (RepairStructure& s : out.structures) shift_structure(s, p, k);
  for (SlotOccurrence& s : out.slots) shift_span(s.span, p, k);
  for (Span& s : out.pps) shift_span(s, p, k);
  return out;
}

bool within_retrace_bound(const WorkingUtterance& u) {
  return std::all_of(u.structures.begin(), u.structures.end(), [](const RepairStructure& s) {
    return s.retrace() <= static_cast<std::size_t>(Tag::kMaxRetrace);
  });
}

// True when no token of [begin, end) lies in a structure span or is an edit.
bool region_free(const WorkingUtterance& u, std::size_t begin, std::size_t end) {
  for (const RepairStructure& s : u.structures)
    if (begin < s.repair_end && s.reparandum_start < end) return false;
  for (std::size_t i = begin; i < end; ++i)
    if (u.edit[i]) return false;
  return true;
}

void add_structures(WorkingUtterance& u, const std::vector<RepairStructure>& added) {
  u.structures.insert(u.structures.end(), added.begin(), added.end());
  std::sort(u.structures.begin(), u.structures.end(),
            [](const RepairStructure& a, const RepairStructure& b) { return a.repair_start < b.repair_start; });
}

std::vector<bool> flags(std::size_t plain, std::size_t edits) {
  std::vector<bool> out(plain, false);
  out.insert(out.end(), edits, true);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

void check_phrases(const std::vector<std::string>& phrases, const char* name, bool allow_empty_entry) {
  if (phrases.empty()) throw ConfigError(std::string(name) + " must not be empty");
  for (const std::string& p : phrases) {
    if (!allow_empty_entry && split_words(p).empty())
      throw ConfigError(std::string(name) + " contains an empty entry");
    if (p.find(kCombinedDelimiter) != std::string::npos)
      throw ConfigError(std::string(name) + " entry contains '|': " + p);
  }
}

}  // namespace

std::string_view slot_name(Slot slot) {
  switch (slot) {
    case Slot::Cuisine:
      return "cuisine";
    case Slot::Location:
      return "location";
    case Slot::PartySize:
      return "size";
    case Slot::Price:
      return "price";
  }
  return "";
}

const std::vector<std::string>& slot_fillers(Slot slot) {
  static const std::map<Slot, std::vector<std::string>> fillers{
      {Slot::Cuisine, {"italian", "spanish", "french", "indian", "british", "japanese", "thai"}},
      {Slot::Location, {"rome", "london", "paris", "madrid", "bombay", "seoul", "tokyo"}},
      {Slot::PartySize, {"two", "four", "six", "eight"}},
      {Slot::Price, {"cheap", "moderate", "expensive"}},
  };
  return fillers.at(slot);
}

// ---------------------------------------------------------------------------
// GeneratorConfig

void GeneratorConfig::validate() const {
  check_probability(p_hesitation, "p_hesitation");
  check_probability(p_correction, "p_correction");
  check_probability(p_restart, "p_restart");
  check_probability(restart_split, "restart_split");
  check_probability(p_long_correction, "p_long_correction");
  check_phrases(filler_lexicon, "filler_lexicon", false);
  check_phrases(restart_interregna, "restart_interregna", true);
  check_phrases(correction_interregna, "correction_interregna", true);
  if (template_set != "restaurant") throw ConfigError("unknown template set '" + template_set + "'");
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

Json GeneratorConfig::to_json() const {
  Json j = Json::object();
  j["seed"] = seed;
  j["dialogues"] = n_dialogues;
  j["p_hesitation"] = p_hesitation;
  j["p_correction"] = p_correction;
  j["p_restart"] = p_restart;
  j["restart_split"] = restart_split;
  j["p_long_correction"] = p_long_correction;
  j["restart_fallback"] = restart_fallback;
  j["filler_lexicon"] = filler_lexicon;
  j["restart_interregna"] = restart_interregna;
  j["correction_interregna"] = correction_interregna;
  j["template_set"] = template_set;
  return j;
}

GeneratorConfig GeneratorConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("generator config must be a JSON object");
  GeneratorConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed")
        c.seed = value.get<std::uint64_t>();
      else if (key == "dialogues")
        c.n_dialogues = value.get<std::size_t>();
      else if (key == "p_hesitation")
        c.p_hesitation = value.get<double>();
      else if (key == "p_correction")
        c.p_correction = value.get<double>();
      else if (key == "p_restart")
        c.p_restart = value.get<double>();
      else if (key == "restart_split")
        c.restart_split = value.get<double>();
      else if (key == "p_long_correction")
        c.p_long_correction = value.get<double>();
      else if (key == "restart_fallback")
        c.restart_fallback = value.get<bool>();
      else if (key == "filler_lexicon")
        c.filler_lexicon = value.get<std::vector<std::string>>();
      else if (key == "restart_interregna")
        c.restart_interregna = value.get<std::vector<std::string>>();
      else if (key == "correction_interregna")
        c.correction_interregna = value.get<std::vector<std::string>>();
      else if (key == "template_set")
        c.template_set = value.get<std::string>();
      else
        throw ConfigError("unknown generator config key '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

GeneratorConfig GeneratorConfig::preset(std::string_view name) {
  GeneratorConfig c;
  if (name == "mixed") return c;
  c.p_hesitation = c.p_correction = c.p_restart = 0.0;
  if (name == "hesitations") {
    c.p_hesitation = 0.5;
  } else if (name == "pp-restarts") {
    c.p_restart = 0.5;
    c.restart_split = 0.0;
    c.restart_fallback = false;
  } else if (name == "cl-restarts") {
    c.p_restart = 0.5;
    c.restart_split = 1.0;
    c.restart_fallback = false;
  } else if (name == "corrections") {
    c.p_correction = 0.5;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::string GeneratorConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------
// WorkingUtterance

WorkingUtterance WorkingUtterance::fluent_utterance(Speaker speaker, std::vector<Token> tokens,
                                                    std::vector<SlotOccurrence> slots, std::vector<Span> pps) {
  WorkingUtterance u;
  u.speaker = speaker;
  for (Token& t : tokens) {
    t.tag.reset();
    validate_token(t);
  }
  u.fluent = tokens;
  u.edit.assign(tokens.size(), false);
  u.tokens = std::move(tokens);
  u.slots = std::move(slots);
  u.pps = std::move(pps);
  return u;
}

std::vector<std::size_t> WorkingUtterance::edit_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edit.size(); ++i)
    if (edit[i]) out.push_back(i);
  return out;
}

TagSequence WorkingUtterance::tags() const { return structures_to_tags(structures, tokens.size(), edit_positions()); }

Utterance WorkingUtterance::to_utterance() const {
  Utterance u;
  u.speaker = speaker;
  TagSequence t = tags();
  u.tokens = tokens;
  for (std::size_t i = 0; i < t.size(); ++i) u.tokens[i].tag = t[i];
  u.phenomena = phenomena;
  if (speaker == Speaker::User) u.fluent = fluent;
  return u;
}

std::string WorkingUtterance::text() const {
  std::string out;
  for (const Token& t : tokens) out += (out.empty() ? "" : " ") + t.word;
  return out;
}

// ---------------------------------------------------------------------------
// Building blocks

std::vector<Token> phrase_tokens(std::string_view phrase) {
  std::vector<Token> out;
  for (const std::string& w : split_words(phrase)) {
    auto it = filler_pos().find(w);
    out.push_back(Token{w, it == filler_pos().end() ? "UH" : it->second, std::nullopt});
  }
  return out;
}

Outcome insert_hesitation(WorkingUtterance& u, std::size_t position, const std::vector<Token>& filler) {
  if (position == 0 || position >= u.tokens.size() || filler.empty()) return Outcome::NotApplicable;
  WorkingUtterance next = inserted(u, position, filler, std::vector<bool>(filler.size(), true));
  if (!within_retrace_bound(next)) return Outcome::Skipped;
  next.phenomena.push_back("hesitation");
  u = std::move(next);
  return Outcome::Applied;
}

Outcome insert_correction(WorkingUtterance& u, std::size_t slot_index, const std::vector<Token>& distractor,
                          const std::vector<Token>& interregnum, bool long_distance) {
  if (slot_index >= u.slots.size() || distractor.empty()) return Outcome::NotApplicable;
  const SlotOccurrence& occ = u.slots[slot_index];
  if (occ.corrected) return Outcome::NotApplicable;

  Span segment = occ.span;
  std::vector<Token> reparandum = distractor;
  if (long_distance) {
    auto pp = std::find_if(u.pps.begin(), u.pps.end(), [&](const Span& s) {
      return s.begin <= occ.span.begin && occ.span.end <= s.end;
    });
    if (pp == u.pps.end()) return Outcome::NotApplicable;
    segment = *pp;
    reparandum.assign(u.tokens.begin() + static_cast<std::ptrdiff_t>(segment.begin),
                      u.tokens.begin() + static_cast<std::ptrdiff_t>(occ.span.begin));
    reparandum.insert(reparandum.end(), distractor.begin(), distractor.end());
    reparandum.insert(reparandum.end(), u.tokens.begin() + static_cast<std::ptrdiff_t>(occ.span.end),
                      u.tokens.begin() + static_cast<std::ptrdiff_t>(segment.end));
  }
  if (!region_free(u, segment.begin, segment.end)) return Outcome::NotApplicable;
  if (reparandum.size() + interregnum.size() > static_cast<std::size_t>(Tag::kMaxRetrace)) return Outcome::Skipped;

  std::vector<Token> block = reparandum;
  block.insert(block.end(), interregnum.begin(), interregnum.end());
  WorkingUtterance next = inserted(u, segment.begin, block, flags(reparandum.size(), interregnum.size()));

  RepairStructure s;
  s.reparandum_start = segment.begin;
  s.reparandum_end = s.interregnum_start = segment.begin + reparandum.size();
  s.interregnum_end = s.repair_start = s.interregnum_start + interregnum.size();
  s.repair_end = s.repair_start + segment.size();
  add_structures(next, {s});
  next.slots[slot_index].corrected = true;
  next.phenomena.push_back("correction");
  u = std::move(next);
  return Outcome::Applied;
}

Outcome insert_pp_restart(WorkingUtterance& u, std::size_t pp_index, std::size_t prefix_length,
                          const std::vector<std::vector<Token>>& interregna) {
  if (pp_index >= u.pps.size() || interregna.empty()) return Outcome::NotApplicable;
  const Span pp = u.pps[pp_index];
  if (prefix_length == 0 || prefix_length > pp.size()) return Outcome::NotApplicable;
  if (!region_free(u, pp.begin, pp.begin + prefix_length)) return Outcome::NotApplicable;
  for (const auto& f : interregna)
    if (prefix_length + f.size() > static_cast<std::size_t>(Tag::kMaxRetrace)) return Outcome::Skipped;

  const std::vector<Token> prefix(u.tokens.begin() + static_cast<std::ptrdiff_t>(pp.begin),
                                  u.tokens.begin() + static_cast<std::ptrdiff_t>(pp.begin + prefix_length));
  std::vector<Token> block;
  std::vector<bool> edit;
  std::vector<RepairStructure> added;
  std::size_t copy_start = pp.begin;
  for (const auto& f : interregna) {
    block.insert(block.end(), prefix.begin(), prefix.end());
    block.insert(block.end(), f.begin(), f.end());
    edit.insert(edit.end(), prefix.size(), false);
    edit.insert(edit.end(), f.size(), true);
    RepairStructure s;
    s.reparandum_start = copy_start;
    s.reparandum_end = s.interregnum_start = copy_start + prefix_length;
    s.interregnum_end = s.repair_start = s.interregnum_start + f.size();
    s.repair_end = s.repair_start + prefix_length;
    added.push_back(s);
    copy_start = s.repair_start;
  }
  WorkingUtterance next = inserted(u, pp.begin, block, edit);
  add_structures(next, added);
  next.phenomena.push_back("pp-restart");
  u = std::move(next);
  return Outcome::Applied;
}

Outcome insert_cl_restart(WorkingUtterance& u, std::size_t break_position, const std::vector<Token>& interregnum) {
  if (break_position == 0 || break_position >= u.tokens.size()) return Outcome::NotApplicable;
  if (!region_free(u, 0, break_position)) return Outcome::NotApplicable;
  if (break_position + interregnum.size() > static_cast<std::size_t>(Tag::kMaxRetrace)) return Outcome::Skipped;

  std::vector<Token> block(u.tokens.begin(), u.tokens.begin() + static_cast<std::ptrdiff_t>(break_position));
  block.insert(block.end(), interregnum.begin(), interregnum.end());
  WorkingUtterance next = inserted(u, 0, block, flags(break_position, interregnum.size()));
  RepairStructure s;
  s.reparandum_start = 0;
  s.reparandum_end = s.interregnum_start = break_position;
  s.interregnum_end = s.repair_start = break_position + interregnum.size();
  s.repair_end = s.repair_start + break_position;
  add_structures(next, {s});
  next.phenomena.push_back("cl-restart");
  u = std::move(next);
  return Outcome::Applied;
}

// ---------------------------------------------------------------------------
// Sampling wrappers

Outcome apply_hesitation(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config) {
  if (u.tokens.size() < 2) return Outcome::NotApplicable;
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::size_t position = 1 + uniform_index(rng, u.tokens.size() - 1);
    std::vector<Token> filler = phrase_tokens(pick(rng, config.filler_lexicon));
    if (insert_hesitation(u, position, filler) == Outcome::Applied) return Outcome::Applied;
  }
  return Outcome::Skipped;
}

Outcome apply_correction(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < u.slots.size(); ++i) {
    const SlotOccurrence& occ = u.slots[i];
    if (!occ.corrected && slot_fillers(occ.slot).size() >= 2 && region_free(u, occ.span.begin, occ.span.end))
      candidates.push_back(i);
  }
  if (candidates.empty()) return Outcome::NotApplicable;
  const std::size_t index = pick(rng, candidates);
  const SlotOccurrence& occ = u.slots[index];

  const std::string& current = u.tokens[occ.span.begin].word;
  std::vector<std::string> others;
  for (const std::string& f : slot_fillers(occ.slot))
    if (f != current) others.push_back(f);
  std::vector<Token> distractor{Token{pick(rng, others), std::string(slot_pos(occ.slot)), std::nullopt}};
  std::vector<Token> interregnum = phrase_tokens(pick(rng, config.correction_interregna));
  const bool long_distance = bernoulli(rng, config.p_long_correction);

  if (long_distance) {
    Outcome o = insert_correction(u, index, distractor, interregnum, true);
    if (o == Outcome::Applied) return o;
  }
  return insert_correction(u, index, distractor, interregnum, false);
}

Outcome apply_pp_restart(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config) {
  constexpr std::size_t kMaxPrefix = 3;
  std::vector<std::pair<std::size_t, std::size_t>> candidates;  // pp index, max prefix
  for (std::size_t i = 0; i < u.pps.size(); ++i) {
    const Span& pp = u.pps[i];
    std::size_t k = 0;
    while (k < std::min(pp.size(), kMaxPrefix) && region_free(u, pp.begin, pp.begin + k + 1)) ++k;
    if (k > 0) candidates.emplace_back(i, k);
  }
  if (candidates.empty()) return Outcome::NotApplicable;
  auto [index, max_prefix] = pick(rng, candidates);
  const std::size_t prefix = 1 + uniform_index(rng, max_prefix);
  const std::size_t repetitions = 1 + uniform_index(rng, 2);
  std::vector<std::vector<Token>> interregna;
  for (std::size_t r = 0; r < repetitions; ++r)
    interregna.push_back(phrase_tokens(pick(rng, config.restart_interregna)));
  return insert_pp_restart(u, index, prefix, interregna);
}

Outcome apply_cl_restart(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config) {
  std::vector<Token> interregnum = phrase_tokens(pick(rng, config.restart_interregna));
  std::size_t limit = u.tokens.size() - (u.tokens.empty() ? 0 : 1);
  for (const RepairStructure& s : u.structures) limit = std::min(limit, s.reparandum_start);
  for (std::size_t i = 0; i < limit; ++i)
    if (u.edit[i]) limit = i;
  const std::size_t reach = static_cast<std::size_t>(Tag::kMaxRetrace);
  limit = interregnum.size() >= reach ? 0 : std::min(limit, reach - interregnum.size());
  if (limit == 0) return Outcome::NotApplicable;
  return insert_cl_restart(u, 1 + uniform_index(rng, limit), interregnum);
}

// ---------------------------------------------------------------------------
// Dialogues

WorkingUtterance instantiate(std::string_view pattern, Speaker speaker, const std::map<Slot, std::string>& values) {
  std::vector<Token> tokens;
  std::vector<SlotOccurrence> slots;
  std::vector<Span> pps;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t pp_start = kNone;
  for (std::string item : split_words(pattern)) {
    if (item.front() == '[') {
      pp_start = tokens.size();
      item.erase(0, 1);
    }
    bool closes = item.back() == ']';
    if (closes) item.pop_back();
    if (item.size() > 2 && item.front() == '{' && item.back() == '}') {
      auto slot = slot_from_name(std::string_view(item).substr(1, item.size() - 2));
      if (!slot) throw ConfigError("unknown slot in template: " + item);
      slots.push_back({*slot, {tokens.size(), tokens.size() + 1}});
      tokens.push_back(Token{values.at(*slot), std::string(slot_pos(*slot)), std::nullopt});
    } else {
      auto slash = item.rfind('/');
      if (slash == std::string::npos || slash == 0) throw ConfigError("template token without POS: " + item);
      tokens.push_back(Token{item.substr(0, slash), item.substr(slash + 1), std::nullopt});
    }
    if (closes) {
      if (pp_start == kNone) throw ConfigError("unbalanced ']' in template");
      pps.push_back({pp_start, tokens.size()});
      pp_start = kNone;
    }
  }
  return WorkingUtterance::fluent_utterance(speaker, std::move(tokens), std::move(slots), std::move(pps));
}

void GenerationStats::add(const GenerationStats& other) {
  for (const auto& [k, v] : other.counters) counters[k] += v;
}

namespace {

void record(GenerationStats& stats, const std::string& phenomenon, Outcome outcome) {
  switch (outcome) {
    case Outcome::Applied:
      ++stats.counters["applied." + phenomenon];
      break;
    case Outcome::NotApplicable:
      ++stats.counters["not_applicable." + phenomenon];
      break;
    case Outcome::Skipped:
      ++stats.counters["skipped." + phenomenon];
      break;
  }
}

void disfluent_turn(WorkingUtterance& u, Rng& rng, const GeneratorConfig& config, GenerationStats& stats) {
  // All three draws happen up front so the decision stream does not depend
  // on which transformations fit.
  const bool correction = bernoulli(rng, config.p_correction);
  const bool restart = bernoulli(rng, config.p_restart);
  const bool hesitation = bernoulli(rng, config.p_hesitation);
  const bool clausal = bernoulli(rng, config.restart_split);
  ++stats.counters["turns.user"];

  if (correction) record(stats, "correction", apply_correction(u, rng, config));
  if (restart) {
    Outcome o = clausal ? apply_cl_restart(u, rng, config) : apply_pp_restart(u, rng, config);
    if (o != Outcome::Applied && config.restart_fallback)
      o = clausal ? apply_pp_restart(u, rng, config) : apply_cl_restart(u, rng, config);
    record(stats, "restart", o);
  }
  if (hesitation) record(stats, "hesitation", apply_hesitation(u, rng, config));
}

}  // namespace

std::vector<WorkingUtterance> generate_dialogue(const GeneratorConfig& config, std::size_t index,
                                                GenerationStats& stats) {
  const TemplateSet& ts = restaurant_templates();
  Rng rng(derive_seed(config.seed, index));

  std::map<Slot, std::string> goal;
  for (Slot s : kSlotOrder) goal[s] = pick(rng, slot_fillers(s));

  std::vector<WorkingUtterance> turns;
  auto system = [&](std::string_view pattern) { turns.push_back(instantiate(pattern, Speaker::System, goal)); };
  auto user = [&](std::string_view pattern) {
    WorkingUtterance u = instantiate(pattern, Speaker::User, goal);
    disfluent_turn(u, rng, config, stats);
    turns.push_back(std::move(u));
  };

  system(ts.greeting);
  const std::string& opening = pick(rng, ts.openings);
  WorkingUtterance probe = instantiate(opening, Speaker::User, goal);
  user(opening);
  system(ts.acknowledge);
  for (Slot s : kSlotOrder) {
    bool mentioned = std::any_of(probe.slots.begin(), probe.slots.end(),
                                 [&](const SlotOccurrence& o) { return o.slot == s; });
    if (mentioned) continue;
    system(ts.questions.at(s));
    user(pick(rng, ts.answers.at(s)));
  }
  system(ts.searching);
  system(ts.api_call);
  ++stats.counters["dialogues"];
  return turns;
}

std::string dialogue_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d%04zu", index);
  return buf;
}

Corpus generate_corpus(const GeneratorConfig& config) {
  config.validate();
  const std::size_t n = config.n_dialogues;
  std::vector<Dialogue> dialogues(n);
  const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(config.threads, n)));
  std::vector<GenerationStats> stats(workers);

  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers) {
      Dialogue d;
      d.id = dialogue_id(i);
      for (const WorkingUtterance& u : generate_dialogue(config, i, stats[w])) d.utterances.push_back(u.to_utterance());
      dialogues[i] = std::move(d);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  GenerationStats total;
  for (const GenerationStats& s : stats) total.add(s);

  Corpus corpus;
  corpus.name = "synthetic-" + config.template_set;
  corpus.config_hash = config.hash();
  corpus.meta["generator"] = config.to_json();
  corpus.meta["seed"] = config.seed;
  corpus.meta["seed_rule"] = "dialogue i uses splitmix64(seed ^ splitmix64(i + 1))";
  Json counters = Json::object();
  for (const auto& [k, v] : total.counters) counters[k] = v;
  corpus.meta["counters"] = std::move(counters);
  corpus.dialogues = std::move(dialogues);
  return corpus;
}

}  // namespace disfl::synth
