#include "disfl/tagset.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

namespace disfl {

namespace {

constexpr int kOnsetBase = 2;
constexpr int kEndOnlyIndex = 26;

struct Element {
  std::string_view name;
  std::string_view raw;
};

std::vector<Element> split_elements(std::string_view text) {
  std::vector<Element> elements;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '<') throw ParseError("expected '<'", std::string(text.substr(pos)));
    std::size_t close = text.find('>', pos);
    if (close == std::string_view::npos)
      throw ParseError("unterminated tag element", std::string(text.substr(pos)));
    std::string_view raw = text.substr(pos, close - pos + 1);
    std::string_view name = text.substr(pos + 1, close - pos - 1);
    if (!name.empty() && name.back() == '/') name.remove_suffix(1);
    if (name.empty()) throw ParseError("empty tag element", std::string(raw));
    elements.push_back({name, raw});
    pos = close + 1;
  }
  if (elements.empty()) throw ParseError("empty tag", std::string(text));
  return elements;
}

std::optional<EndMarker> marker_from_name(std::string_view name) {
  if (name == "rpEndSub" || name == "rpSub") return EndMarker::EndSub;
  if (name == "rpEndDel" || name == "rpDel") return EndMarker::EndDel;
  if (name == "rpMid") return EndMarker::Mid;
  return std::nullopt;
}

int parse_retrace(const Element& element) {
  std::string_view digits = element.name.substr(3);
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
    throw ParseError("malformed retrace", std::string(element.raw));
  if (value < 1 || value > Tag::kMaxRetrace)
    throw ParseError("retrace outside 1..8", std::string(element.raw));
  return value;
}

const char* marker_name(EndMarker marker) {
  switch (marker) {
    case EndMarker::EndSub:
      return "rpEndSub";
    case EndMarker::EndDel:
      return "rpEndDel";
    case EndMarker::Mid:
      return "rpMid";
  }
  return "";
}

}  // namespace

Tag Tag::onset(int retrace, EndMarker marker) {
  if (retrace < 1 || retrace > kMaxRetrace)
    throw ParseError("retrace outside 1..8", "<rm-" + std::to_string(retrace) + "/>");
  return Tag(TagKind::RepairOnset, retrace, marker);
}

Tag Tag::from_index(int index) {
  if (index == 0) return fluent();
  if (index == 1) return edit();
  if (index == kEndOnlyIndex) return end_only();
  if (index < kOnsetBase || index > kEndOnlyIndex)
    throw ParseError("tag index out of range", std::to_string(index));
  int offset = index - kOnsetBase;
  return onset(offset / 3 + 1, static_cast<EndMarker>(offset % 3));
}

int Tag::index() const {
  switch (kind_) {
    case TagKind::Fluent:
      return 0;
    case TagKind::Edit:
      return 1;
    case TagKind::RepairOnset:
      return kOnsetBase + (retrace_ - 1) * 3 + static_cast<int>(marker_);
    case TagKind::RepairEndOnly:
      return kEndOnlyIndex;
  }
  return 0;
}

const std::array<Tag, Tag::kCount>& all_tags() {
  static const std::array<Tag, Tag::kCount> tags = [] {
    std::array<Tag, Tag::kCount> out;
    for (int i = 0; i < Tag::kCount; ++i) out[i] = Tag::from_index(i);
    return out;
  }();
  return tags;
}

Tag parse_tag(std::string_view text) {
  std::vector<Element> elements = split_elements(text);
  const Element& first = elements.front();
  if (elements.size() == 1) {
    if (first.name == "f") return Tag::fluent();
    if (first.name == "e") return Tag::edit();
    if (first.name == "rpEndSub" || first.name == "rpSub") return Tag::end_only();
    if (first.name.starts_with("rm-"))
      throw ParseError("repair onset without end marker", std::string(text));
    throw ParseError("unknown tag", std::string(first.raw));
  }
  if (elements.size() == 2 && first.name.starts_with("rm-")) {
    int retrace = parse_retrace(first);
    auto marker = marker_from_name(elements[1].name);
    if (!marker) throw ParseError("unknown repair marker", std::string(elements[1].raw));
    return Tag::onset(retrace, *marker);
  }
  throw ParseError("unknown tag combination", std::string(text));
}

std::string render_tag(const Tag& tag) {
  switch (tag.kind()) {
    case TagKind::Fluent:
      return "<f/>";
    case TagKind::Edit:
      return "<e/>";
    case TagKind::RepairEndOnly:
      return "<rpEndSub/>";
    case TagKind::RepairOnset:
      return "<rm-" + std::to_string(tag.retrace()) + "/><" + marker_name(tag.marker()) + "/>";
  }
  return {};
}

std::vector<RepairStructure> resolve_structures(std::span<const Tag> tags) {
  std::vector<RepairStructure> structures;
  std::optional<std::size_t> open;  // index of a Mid structure awaiting its end tag
  std::size_t open_onset = 0;

  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Tag& tag = tags[t];
    if (tag.kind() == TagKind::RepairEndOnly) {
      if (!open) throw StructureError("repair end without an open multi-token repair", t);
      structures[*open].repair_end = t + 1;
      open.reset();
      continue;
    }
    if (!tag.is_onset()) continue;
    if (open) throw StructureError("repair onset inside an open multi-token repair", t);

    auto retrace = static_cast<std::size_t>(tag.retrace());
    if (retrace > t) throw StructureError("retrace reaches before utterance start", t);
    RepairStructure s;
    s.reparandum_start = t - retrace;
    s.interregnum_end = t;
    s.interregnum_start = t;
    while (s.interregnum_start > 0 && tags[s.interregnum_start - 1].is_edit()) --s.interregnum_start;
    if (s.interregnum_start <= s.reparandum_start)
      throw StructureError("retrace does not reach past the interregnum", t);
    s.reparandum_end = s.interregnum_start;
    s.repair_start = t;
    s.repair_end = t + 1;
    s.kind = tag.marker() == EndMarker::EndDel ? RepairKind::Deletion : RepairKind::Substitution;
    if (!structures.empty() && s.reparandum_start < structures.back().repair_start)
      throw StructureError("repair overlaps the previous repair", t);
    structures.push_back(s);
    if (tag.marker() == EndMarker::Mid) {
      open = structures.size() - 1;
      open_onset = t;
    }
  }
  if (open) throw StructureError("multi-token repair is never closed", open_onset);
  return structures;
}

std::vector<std::size_t> edit_positions(std::span<const Tag> tags) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i].is_edit()) out.push_back(i);
  return out;
}

TagSequence structures_to_tags(std::span<const RepairStructure> structures, std::size_t length,
                               std::span<const std::size_t> edits) {
  TagSequence tags(length, Tag::fluent());
  for (std::size_t e : edits) {
    if (e >= length) throw StructureError("edit position beyond utterance end", e);
    tags[e] = Tag::edit();
  }

  const RepairStructure* prev = nullptr;
  for (const RepairStructure& s : structures) {
    const std::size_t onset = s.repair_start;
    if (!(s.reparandum_start < s.reparandum_end && s.reparandum_end == s.interregnum_start &&
          s.interregnum_start <= s.interregnum_end && s.interregnum_end == s.repair_start &&
          s.repair_start < s.repair_end && s.repair_end <= length))
      throw StructureError("span ordering violated", onset);
    if (prev && (onset < prev->repair_end || s.reparandum_start < prev->repair_start))
      throw StructureError("repair overlaps the previous repair", onset);
    if (s.retrace() > static_cast<std::size_t>(Tag::kMaxRetrace))
      throw UnrepresentableError("retrace " + std::to_string(s.retrace()) + " exceeds 8 at token " +
                                 std::to_string(onset));
    const std::size_t repair_len = s.repair_end - s.repair_start;
    if (s.kind == RepairKind::Deletion && repair_len > 1)
      throw UnrepresentableError("multi-token deletion repair at token " + std::to_string(onset));

    for (std::size_t i = s.interregnum_start; i < s.interregnum_end; ++i)
      if (!tags[i].is_edit()) throw StructureError("interregnum token is not an edit", i);
    if (tags[s.reparandum_end - 1].is_edit())
      throw StructureError("reparandum ends in an edit token", s.reparandum_end - 1);
    if (tags[onset].kind() != TagKind::Fluent)
      throw StructureError("repair onset collides with another tag", onset);

    EndMarker marker = s.kind == RepairKind::Deletion ? EndMarker::EndDel
                       : repair_len == 1              ? EndMarker::EndSub
                                                      : EndMarker::Mid;
    tags[onset] = Tag::onset(static_cast<int>(s.retrace()), marker);
    if (marker == EndMarker::Mid) {
      if (tags[s.repair_end - 1].kind() != TagKind::Fluent)
        throw StructureError("repair end collides with another tag", s.repair_end - 1);
      tags[s.repair_end - 1] = Tag::end_only();
    }
    prev = &s;
  }

  // Anything the checks above missed shows up as a resolution mismatch.
  std::vector<RepairStructure> check;
  try {
    check = resolve_structures(tags);
  } catch (const StructureError& e) {
    throw StructureError("structure set does not round-trip", e.index());
  }
  if (!std::equal(check.begin(), check.end(), structures.begin(), structures.end()))
    throw StructureError("structure set does not round-trip", structures.empty() ? 0 : structures.front().repair_start);
  return tags;
}

LenientResolution resolve_lenient(std::span<const Tag> tags) {
  LenientResolution out;
  out.tags.assign(tags.begin(), tags.end());
  while (true) {
    try {
      out.structures = resolve_structures(out.tags);
      return out;
    } catch (const StructureError& e) {
      out.tags[e.index()] = Tag::fluent();
      ++out.dropped;
    }
  }
}

std::vector<std::size_t> kept_positions(std::size_t length,
                                        std::span<const RepairStructure> structures,
                                        std::span<const std::size_t> edits) {
  std::vector<bool> keep(length, true);
  auto drop = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end && i < length; ++i) keep[i] = false;
  };
  for (const RepairStructure& s : structures) {
    drop(s.reparandum_start, s.reparandum_end);
    drop(s.interregnum_start, s.interregnum_end);
    if (s.kind == RepairKind::Deletion) drop(s.repair_start, s.repair_end);
  }
  for (std::size_t e : edits)
    if (e < length) keep[e] = false;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < length; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

}  // namespace disfl
