#include "disfl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

namespace disfl::metrics {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_aligned(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  if (gold.size() != pred.size())
    throw DataError("gold has " + std::to_string(gold.size()) + " utterances, prediction " +
                    std::to_string(pred.size()));
  for (std::size_t u = 0; u < gold.size(); ++u)
    if (gold[u].size() != pred[u].size())
      throw DataError("utterance " + std::to_string(u) + ": gold length " + std::to_string(gold[u].size()) +
                      " != predicted length " + std::to_string(pred[u].size()));
}

void count(F1Counts& c, bool gold, bool pred) {
  c.tp += gold && pred;
  c.fp += !gold && pred;
  c.fn += gold && !pred;
}

std::vector<bool> membership(std::size_t length, const std::vector<RepairStructure>& structures) {
  std::vector<bool> in(length, false);
  for (const RepairStructure& s : structures)
    for (std::size_t i = s.reparandum_start; i < s.repair_end; ++i) in[i] = true;
  return in;
}

}  // namespace

double F1Counts::precision() const { return ratio(tp, tp + fp); }
double F1Counts::recall() const { return ratio(tp, tp + fn); }
double F1Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

F1Counts& F1Counts::operator+=(const F1Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

std::string_view rm_match_name(RmMatch mode) { return mode == RmMatch::Strict ? "strict" : "rm-only"; }

RmMatch parse_rm_match(std::string_view name) {
  if (name == "rm-only") return RmMatch::RmOnly;
  if (name == "strict") return RmMatch::Strict;
  throw ConfigError("unknown rm match mode '" + std::string(name) + "' (expected rm-only or strict)");
}

F1Counts f1_edit(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  check_aligned(gold, pred);
  F1Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u)
    for (std::size_t i = 0; i < gold[u].size(); ++i) count(c, gold[u][i].is_edit(), pred[u][i].is_edit());
  return c;
}

F1Counts f1_rm(std::span<const TagSequence> gold, std::span<const TagSequence> pred, RmMatch mode) {
  check_aligned(gold, pred);
  F1Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u)
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const Tag& g = gold[u][i];
      const Tag& p = pred[u][i];
      if (g.is_onset() && p.is_onset() && g.retrace() == p.retrace() &&
          (mode == RmMatch::RmOnly || g.marker() == p.marker())) {
        ++c.tp;
      } else {
        c.fp += p.is_onset();
        c.fn += g.is_onset();
      }
    }
  return c;
}

F1Counts f1_rps(std::span<const TagSequence> gold, std::span<const TagSequence> pred, std::int64_t* dropped) {
  check_aligned(gold, pred);
  F1Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    LenientResolution p = resolve_lenient(pred[u]);
    if (dropped) *dropped += static_cast<std::int64_t>(p.dropped);
    auto g_in = membership(gold[u].size(), resolve_structures(gold[u]));
    auto p_in = membership(pred[u].size(), p.structures);
    for (std::size_t i = 0; i < g_in.size(); ++i) count(c, g_in[i], p_in[i]);
  }
  return c;
}

F1Counts span_exact(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  check_aligned(gold, pred);
  F1Counts c;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    auto g = resolve_structures(gold[u]);
    auto p = resolve_lenient(pred[u]).structures;
    std::int64_t hits = 0;
    for (const RepairStructure& s : p) hits += std::find(g.begin(), g.end(), s) != g.end();
    c.tp += hits;
    c.fp += static_cast<std::int64_t>(p.size()) - hits;
    c.fn += static_cast<std::int64_t>(g.size()) - hits;
  }
  return c;
}

EvalReport score(std::span<const TagSequence> gold, std::span<const TagSequence> pred, RmMatch mode) {
  EvalReport r;
  r.mode = mode;
  r.edit = f1_edit(gold, pred);
  r.rm = f1_rm(gold, pred, mode);
  r.rps = f1_rps(gold, pred, &r.dropped);
  r.spans = span_exact(gold, pred);
  r.utterances = static_cast<std::int64_t>(gold.size());
  for (std::size_t u = 0; u < gold.size(); ++u)
    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const int g = gold[u][i].index(), p = pred[u][i].index();
      ++r.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
      r.correct_tags += g == p;
      ++r.tokens;
    }
  return r;
}

EvalReport evaluate(const Corpus& corpus, const Predictor& predict, RmMatch mode) {
  std::vector<TagSequence> gold, pred;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances) {
      gold.push_back(u.tags());
      pred.push_back(predict(u));
    }
  return score(gold, pred, mode);
}

Json EvalReport::to_json() const {
  auto block = [](const F1Counts& c) {
    Json j = Json::object();
    j["f1"] = c.f1();
    j["precision"] = c.precision();
    j["recall"] = c.recall();
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    return j;
  };
  Json j = Json::object();
  j["rm_match"] = std::string(rm_match_name(mode));
  j["F_e"] = edit.f1();
  j["F_rm"] = rm.f1();
  j["F_rps"] = rps.f1();
  j["span_exact_f1"] = spans.f1();
  j["accuracy"] = accuracy();
  j["tokens"] = tokens;
  j["utterances"] = utterances;
  j["dropped_predicted_tags"] = dropped;
  j["counts"] = {{"edit", block(edit)}, {"rm", block(rm)}, {"rps", block(rps)}, {"spans", block(spans)}};
  Json confusion = Json::array();
  for (int g = 0; g < Tag::kCount; ++g)
    for (int p = 0; p < Tag::kCount; ++p) {
      const std::int64_t n = this->confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
      if (n == 0) continue;
      confusion.push_back({{"gold", render_tag(Tag::from_index(g))}, {"pred", render_tag(Tag::from_index(p))},
                           {"count", n}});
    }
  j["confusion"] = std::move(confusion);
  return j;
}

std::string EvalReport::table() const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %10s\n", "metric", "P", "R", "F1", "tp/fp/fn");
  out += buf;
  auto row = [&](const char* name, const F1Counts& c) {
    std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f %lld/%lld/%lld\n", name, c.precision(), c.recall(),
                  c.f1(), static_cast<long long>(c.tp), static_cast<long long>(c.fp), static_cast<long long>(c.fn));
    out += buf;
  };
  row("F_e", edit);
  row(mode == RmMatch::Strict ? "F_rm*" : "F_rm", rm);
  row("F_rps", rps);
  row("spans", spans);
  std::snprintf(buf, sizeof buf, "accuracy   %8.4f over %lld tokens (%s matching, %lld predicted tags dropped)\n",
                accuracy(), static_cast<long long>(tokens), std::string(rm_match_name(mode)).c_str(),
                static_cast<long long>(dropped));
  out += buf;
  return out;
}

}  // namespace disfl::metrics
