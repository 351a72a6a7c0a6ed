#include "disfl/trainer.hpp"

#include <chrono>
#include <cmath>

#include "disfl/random.hpp"

namespace disfl::train {

std::string_view weight_scale_name(WeightScale scale) {
  switch (scale) {
    case WeightScale::Raw: return "raw";
    case WeightScale::TokenMean: return "token-mean";
    case WeightScale::Fluent: return "fluent";
  }
  return "?";
}

WeightScale parse_weight_scale(std::string_view name) {
  for (WeightScale s : {WeightScale::Raw, WeightScale::TokenMean, WeightScale::Fluent})
    if (weight_scale_name(s) == name) return s;
  throw ConfigError("unknown weight scale '" + std::string(name) + "' (expected raw, token-mean or fluent)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(clip_norm >= 0)) throw ConfigError("clip_norm must be >= 0");
}

Json TrainConfig::to_json() const {
  Json j = Json::object();
  j["learning_rate"] = learning_rate;
  j["lr_decay"] = lr_decay;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["seed"] = seed;
  j["weight_scale"] = std::string(weight_scale_name(weight_scale));
  j["clip_norm"] = clip_norm;
  j["rm_match"] = std::string(metrics::rm_match_name(rm_match));
  return j;
}

TrainConfig TrainConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "learning_rate")
        c.learning_rate = value.get<double>();
      else if (key == "lr_decay")
        c.lr_decay = value.get<double>();
      else if (key == "batch_size")
        c.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs")
        c.max_epochs = value.get<int>();
      else if (key == "patience")
        c.patience = value.get<int>();
      else if (key == "seed")
        c.seed = value.get<std::uint64_t>();
      else if (key == "weight_scale")
        c.weight_scale = parse_weight_scale(value.get<std::string>());
      else if (key == "clip_norm")
        c.clip_norm = value.get<double>();
      else if (key == "rm_match")
        c.rm_match = metrics::parse_rm_match(value.get<std::string>());
      else
        throw ConfigError("unknown training option '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
void sgd_step(nn::Parameters<T>& params, const nn::Parameters<T>& grads, double lr) {
  auto p = params.tensors();
  auto g = grads.tensors();
  if (p.size() != g.size()) throw ConfigError("gradient and parameter layouts differ");
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].rows != g[k].rows || p[k].cols != g[k].cols)
      throw ConfigError("gradient shape mismatch for " + p[k].name);
    for (T v : g[k].values())
      if (!std::isfinite(v)) throw NumericFault("non-finite gradient in " + p[k].name, 0);
  }
  const T step = static_cast<T>(lr);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto pv = p[k].values();
    auto gv = g[k].values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= step * gv[i];
  }
}

template void sgd_step<float>(nn::Parameters<float>&, const nn::Parameters<float>&, double);
template void sgd_step<double>(nn::Parameters<double>&, const nn::Parameters<double>&, double);

template <typename T>
double gradient_norm(const nn::Parameters<T>& grads) {
  double sum = 0;
  for (const auto& t : grads.tensors())
    for (T v : t.values()) sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum);
}

template <typename T>
bool clip_gradients(nn::Parameters<T>& grads, double max_norm) {
  if (max_norm <= 0) return false;
  const double norm = gradient_norm(grads);
  if (!(norm > max_norm)) return false;  // NaN falls through to sgd_step
  const T scale = static_cast<T>(max_norm / norm);
  for (auto& t : grads.tensors())
    for (T& v : t.values()) v *= scale;
  return true;
}

template double gradient_norm<float>(const nn::Parameters<float>&);
template double gradient_norm<double>(const nn::Parameters<double>&);
template bool clip_gradients<float>(nn::Parameters<float>&, double);
template bool clip_gradients<double>(nn::Parameters<double>&, double);

nn::TagWeights loss_weights(const TagCounts& counts, double gamma, WeightScale scale) {
  ClassWeights cw = class_weights(counts, gamma);
  nn::TagWeights w{};
  double weighted = 0, total = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = cw.weight[k];
    weighted += w[k] * static_cast<double>(counts[k]);
    total += static_cast<double>(counts[k]);
  }
  double factor = 1;
  if (scale == WeightScale::TokenMean && weighted > 0) factor = total / weighted;
  if (scale == WeightScale::Fluent) {
    if (counts[0] == 0) throw DataError("fluent weight scale needs fluent tokens in the training corpus");
    factor = 1 / w[0];
  }
  for (double& x : w) x *= factor;
  return w;
}

Json TrainReport::to_json() const {
  Json j = Json::object();
  j["setup"] = setup;
  j["best_epoch"] = best_epoch;
  j["best_dev_F_rm"] = best_dev_f_rm;
  j["stop_reason"] = stop_reason;
  Json list = Json::array();
  for (const EpochRecord& e : epochs) {
    Json r = Json::object();
    r["epoch"] = e.epoch;
    r["learning_rate"] = e.learning_rate;
    r["loss"] = {{"total", e.train_loss.total}, {"main", e.train_loss.main}, {"lm", e.train_loss.lm},
                 {"reg", e.train_loss.reg}};
    r["dev"] = {{"F_e", e.dev.edit.f1()}, {"F_rm", e.dev.rm.f1()}, {"F_rps", e.dev.rps.f1()},
                {"accuracy", e.dev.accuracy()}};
    r["clipped_steps"] = e.clipped_steps;
    r["seconds"] = e.seconds;
    list.push_back(std::move(r));
  }
  j["epochs"] = std::move(list);
  return j;
}

namespace {

std::vector<nn::Example> examples_of(const Corpus& corpus, const Vocabulary& vocab) {
  std::vector<nn::Example> out;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances)
      if (!u.tokens.empty()) out.push_back(nn::make_example(vocab, u));
  return out;
}

}  // namespace

TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus, nn::Hyperparams hyper,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_corpus.token_count() == 0) throw DataError("training corpus is empty");
  if (dev_corpus.token_count() == 0) throw DataError("dev corpus is empty");
  if (!train_corpus.fully_tagged()) throw DataError("training corpus lacks gold tags");
  if (!dev_corpus.fully_tagged()) throw DataError("dev corpus lacks gold tags");

  TrainResult result;
  nn::Model& model = result.model;
  model.vocab = Vocabulary::build(train_corpus);
  hyper.vocab_size = static_cast<int>(model.vocab.size());
  hyper.validate();
  model.hyper = hyper;
  model.params = nn::init_params<float>(hyper, hyper.seed);

  const TagCounts counts = count_tags(train_corpus);
  const nn::TagWeights weights = loss_weights(counts, hyper.gamma, config.weight_scale);
  std::vector<nn::Example> examples = examples_of(train_corpus, model.vocab);

  TrainReport& report = result.report;
  report.setup["hyperparams"] = hyper.to_json();
  report.setup["train_config"] = config.to_json();
  report.setup["train_utterances"] = examples.size();
  report.setup["train_tokens"] = train_corpus.token_count();
  report.setup["class_weights"] = weights;

  nn::Parameters<float> best = model.params;
  nn::Parameters<float> grads;
  std::vector<const nn::Example*> order;
  for (const nn::Example& e : examples) order.push_back(&e);
  int since_best = 0;
  report.best_dev_f_rm = -1;
  report.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = config.learning_rate * std::pow(config.lr_decay, epoch - 1);

    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    double tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      nn::Batch batch = nn::Batch::from_examples(std::span<const nn::Example* const>(order.data() + begin, end - begin));
      nn::LossParts parts = nn::loss_and_gradients(model.params, hyper, batch, weights, &grads);
      rec.clipped_steps += clip_gradients(grads, config.clip_norm);
      sgd_step(model.params, grads, rec.learning_rate);
      const double n = static_cast<double>(batch.active_steps());
      rec.train_loss.main += parts.main * n;
      rec.train_loss.lm += parts.lm * n;
      rec.train_loss.reg += parts.reg * n;
      rec.train_loss.total += parts.total * n;
      tokens += n;
    }
    rec.train_loss.main /= tokens;
    rec.train_loss.lm /= tokens;
    rec.train_loss.reg /= tokens;
    rec.train_loss.total /= tokens;

    rec.dev = metrics::evaluate(dev_corpus, [&](const Utterance& u) { return model.tag(u); }, config.rm_match);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double f_rm = rec.dev.rm.f1();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (f_rm > report.best_dev_f_rm) {
      report.best_dev_f_rm = f_rm;
      report.best_epoch = epoch;
      best = model.params;
      since_best = 0;
    } else if (++since_best > config.patience) {
      report.stop_reason = "patience";
      break;
    }
  }
  model.params = std::move(best);
  return result;
}

}  // namespace disfl::train
