#pragma once

// Disfluency tag scheme: 27 labels marking fluent tokens, edit terms and
// repair onsets, plus the mapping between tag sequences and explicit
// reparandum / interregnum / repair spans.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disfl/errors.hpp"

namespace disfl {

enum class TagKind : std::uint8_t { Fluent, Edit, RepairOnset, RepairEndOnly };

// Second component of a repair-onset tag: the onset closes a one-token
// substitution or deletion, or opens a multi-token substitution that a later
// RepairEndOnly tag closes.
enum class EndMarker : std::uint8_t { EndSub, EndDel, Mid };

class Tag {
 public:
  static constexpr int kMaxRetrace = 8;
  static constexpr int kCount = 27;

  constexpr Tag() = default;

  static constexpr Tag fluent() { return Tag(TagKind::Fluent, 0, EndMarker::EndSub); }
  static constexpr Tag edit() { return Tag(TagKind::Edit, 0, EndMarker::EndSub); }
  static constexpr Tag end_only() { return Tag(TagKind::RepairEndOnly, 0, EndMarker::EndSub); }
  // Throws ParseError when retrace is outside [1, kMaxRetrace].
  static Tag onset(int retrace, EndMarker marker);

  // Dense class id in [0, 27): fluent 0, edit 1, onsets 2..25, end-only 26.
  static Tag from_index(int index);
  int index() const;

  TagKind kind() const { return kind_; }
  int retrace() const { return retrace_; }
  EndMarker marker() const { return marker_; }

  bool is_onset() const { return kind_ == TagKind::RepairOnset; }
  bool is_edit() const { return kind_ == TagKind::Edit; }

  friend bool operator==(const Tag&, const Tag&) = default;

 private:
  constexpr Tag(TagKind kind, int retrace, EndMarker marker)
      : kind_(kind), retrace_(static_cast<std::uint8_t>(retrace)), marker_(marker) {}

  TagKind kind_ = TagKind::Fluent;
  std::uint8_t retrace_ = 0;  // only meaningful for RepairOnset
  EndMarker marker_ = EndMarker::EndSub;
};

using TagSequence = std::vector<Tag>;

// All 27 tags in class-id order.
const std::array<Tag, Tag::kCount>& all_tags();

// Accepts canonical names ("<rm-4/><rpEndSub/>"), the short forms
// "<rpSub>"/"<rpDel>", and elements with or without the self-closing slash.
Tag parse_tag(std::string_view text);
std::string render_tag(const Tag& tag);

enum class RepairKind : std::uint8_t { Substitution, Deletion };

// Half-open token spans of one self-repair. reparandum_end always equals
// interregnum_start and interregnum_end always equals repair_start for
// structures produced by the resolver.
struct RepairStructure {
  std::size_t reparandum_start = 0;
  std::size_t reparandum_end = 0;
  std::size_t interregnum_start = 0;
  std::size_t interregnum_end = 0;
  std::size_t repair_start = 0;
  std::size_t repair_end = 0;
  RepairKind kind = RepairKind::Substitution;

  std::size_t retrace() const { return repair_start - reparandum_start; }
  friend bool operator==(const RepairStructure&, const RepairStructure&) = default;
};

// Structures in onset order. Throws StructureError naming the token where
// resolution broke down.
std::vector<RepairStructure> resolve_structures(std::span<const Tag> tags);

// Inverse of resolve_structures. `edit_positions` lists every Edit-tagged
// token (interregna and standalone fillers). Throws UnrepresentableError for
// retrace > 8 or multi-token deletions, StructureError for ill-formed sets.
TagSequence structures_to_tags(std::span<const RepairStructure> structures, std::size_t length,
                               std::span<const std::size_t> edit_positions);

std::vector<std::size_t> edit_positions(std::span<const Tag> tags);

// Resolution for untrusted (predicted) sequences: offending onset/end tags
// are rewritten to Fluent until the sequence resolves.
struct LenientResolution {
  TagSequence tags;
  std::vector<RepairStructure> structures;
  std::size_t dropped = 0;
};
LenientResolution resolve_lenient(std::span<const Tag> tags);

// Positions that survive cleaning: reparanda, interregna, edit tokens and
// deletion repairs are removed.
std::vector<std::size_t> kept_positions(std::size_t length,
                                        std::span<const RepairStructure> structures,
                                        std::span<const std::size_t> edit_positions);

template <typename Token>
std::vector<Token> clean_utterance(std::span<const Token> tokens,
                                   std::span<const RepairStructure> structures,
                                   std::span<const std::size_t> edits) {
  std::vector<Token> out;
  for (std::size_t i : kept_positions(tokens.size(), structures, edits)) out.push_back(tokens[i]);
  return out;
}

}  // namespace disfl
