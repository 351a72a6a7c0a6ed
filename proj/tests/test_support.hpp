#pragma once

// Generators and brute-force oracles shared by the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check.

#include <cstddef>
#include <set>
#include <vector>

#include "disfl/random.hpp"
#include "disfl/tagset.hpp"

namespace disfl::testing {

struct StructureSet {
  std::size_t length = 0;
  std::vector<RepairStructure> structures;
  std::vector<std::size_t> edits;
};

// Random well-formed, non-nested structure set, including chained repairs,
// edits inside reparanda/repairs and single-token deletions.
inline StructureSet random_structure_set(Rng& rng) {
  StructureSet set;
  std::size_t len = 0;
  auto add_tokens = [&](std::size_t n, double p_edit, bool protect_first, bool protect_last) {
    for (std::size_t k = 0; k < n; ++k) {
      bool is_protected = (k == 0 && protect_first) || (k + 1 == n && protect_last);
      if (!is_protected && bernoulli(rng, p_edit)) set.edits.push_back(len);
      ++len;
    }
  };

  const std::size_t n_structures = uniform_index(rng, 5);
  for (std::size_t s = 0; s < n_structures; ++s) {
    RepairStructure rs;
    const RepairStructure* prev = set.structures.empty() ? nullptr : &set.structures.back();
    bool chain = prev && bernoulli(rng, 0.3);
    if (chain) {
      rs.reparandum_start = prev->repair_start;
      rs.reparandum_end = prev->repair_end;
    } else {
      add_tokens(uniform_index(rng, 3), 0.3, false, false);
      rs.reparandum_start = len;
      add_tokens(1 + uniform_index(rng, 6), 0.2, false, true);
      rs.reparandum_end = len;
    }
    const std::size_t reach = rs.reparandum_end - rs.reparandum_start;
    const std::size_t max_inter = std::min<std::size_t>(3, 8 - reach);
    rs.interregnum_start = len;
    const std::size_t inter = uniform_index(rng, max_inter + 1);
    for (std::size_t k = 0; k < inter; ++k) set.edits.push_back(len++);
    rs.interregnum_end = len;
    rs.repair_start = len;
    const std::size_t repair_len = 1 + uniform_index(rng, 4);
    rs.kind = repair_len == 1 && bernoulli(rng, 0.25) ? RepairKind::Deletion : RepairKind::Substitution;
    add_tokens(repair_len, 0.2, true, true);
    rs.repair_end = len;
    set.structures.push_back(rs);
  }
  add_tokens(uniform_index(rng, 3), 0.3, false, false);
  if (len == 0) add_tokens(1, 0.0, false, false);
  set.length = len;
  return set;
}

inline Tag random_tag(Rng& rng) {
  // Bias towards fluent/edit so that some sequences are valid.
  double u = uniform_real(rng);
  if (u < 0.55) return Tag::fluent();
  if (u < 0.75) return Tag::edit();
  return all_tags()[uniform_index(rng, Tag::kCount)];
}

// Enumerates every span tuple and keeps those consistent with the tag
// constraints; returns them in onset order. Used to cross-check the resolver
// on valid sequences.
inline std::vector<RepairStructure> brute_force_spans(const TagSequence& tags) {
  std::vector<RepairStructure> found;
  const std::size_t n = tags.size();
  for (std::size_t rs = 0; rs < n; ++rs)
    for (std::size_t is = rs + 1; is <= n; ++is)
      for (std::size_t onset = is; onset < n; ++onset)
        for (std::size_t end = onset + 1; end <= n; ++end) {
          const Tag& t = tags[onset];
          if (!t.is_onset() || static_cast<std::size_t>(t.retrace()) != onset - rs) continue;
          bool ok = true;
          for (std::size_t i = is; i < onset; ++i) ok = ok && tags[i].is_edit();
          ok = ok && !tags[is - 1].is_edit();
          if (!ok) continue;
          if (t.marker() == EndMarker::Mid) {
            if (end < onset + 2 || tags[end - 1].kind() != TagKind::RepairEndOnly) continue;
            bool clean = true;
            for (std::size_t i = onset + 1; i + 1 < end; ++i)
              clean = clean && (tags[i].kind() == TagKind::Fluent || tags[i].is_edit());
            if (!clean) continue;
          } else if (end != onset + 1) {
            continue;
          }
          RepairStructure s{rs, is, is, onset, onset, end,
                            t.marker() == EndMarker::EndDel ? RepairKind::Deletion : RepairKind::Substitution};
          found.push_back(s);
        }
  return found;
}

// Independent per-token counters for the three F1 flavours.
struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

inline Counts brute_edit(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
  Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u)
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      bool g = gold[u][i].kind() == TagKind::Edit, p = pred[u][i].kind() == TagKind::Edit;
      c.tp += g && p;
      c.fp += !g && p;
      c.fn += g && !p;
    }
  return c;
}

inline Counts brute_rm(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred,
                       bool strict) {
  Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u)
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const Tag& g = gold[u][i];
      const Tag& p = pred[u][i];
      bool gp = g.kind() == TagKind::RepairOnset;
      bool pp = p.kind() == TagKind::RepairOnset;
      bool match = gp && pp && g.retrace() == p.retrace() && (!strict || g.marker() == p.marker());
      if (match) {
        ++c.tp;
      } else {
        c.fp += pp;
        c.fn += gp;
      }
    }
  return c;
}

inline std::set<std::size_t> covered(const std::vector<RepairStructure>& structures) {
  std::set<std::size_t> out;
  for (const auto& s : structures)
    for (std::size_t i = s.reparandum_start; i < s.repair_end; ++i) out.insert(i);
  return out;
}

}  // namespace disfl::testing
