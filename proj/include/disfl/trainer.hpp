#pragma once

// Mini-batch SGD with per-epoch learning-rate decay and early stopping on
// dev F_rm.

#include <functional>

#include "disfl/corpus.hpp"
#include "disfl/metrics.hpp"
#include "disfl/neuralnet.hpp"

namespace disfl::train {

// Common factor applied to the class weights C_k^-gamma, which fixes the
// scale of the tag loss against the LM and L2 terms.
enum class WeightScale {
  Raw,        // as computed
  TokenMean,  // token-weighted mean weight is 1
  Fluent,     // W_fluent is 1
};
std::string_view weight_scale_name(WeightScale scale);
WeightScale parse_weight_scale(std::string_view name);  // raw | token-mean | fluent

struct TrainConfig {
  double learning_rate = 0.01;
  double lr_decay = 0.9;  // per epoch
  std::size_t batch_size = 32;
  int max_epochs = 30;
  int patience = 5;  // non-improving epochs tolerated before stopping
  std::uint64_t seed = 1;
  WeightScale weight_scale = WeightScale::Fluent;
  // Rescale the whole gradient to this L2 norm when it is larger; 0 disables.
  double clip_norm = 5;
  metrics::RmMatch rm_match = metrics::RmMatch::RmOnly;

  void validate() const;
  Json to_json() const;
  static TrainConfig from_json(const Json& json);
};

// w <- w - lr * g for every tensor. Throws NumericFault when g is not finite.
template <typename T>
void sgd_step(nn::Parameters<T>& params, const nn::Parameters<T>& grads, double lr);

// Global L2 norm over every gradient tensor.
template <typename T>
double gradient_norm(const nn::Parameters<T>& grads);

// Scales `grads` to norm `max_norm` when larger. Returns true when scaled.
template <typename T>
bool clip_gradients(nn::Parameters<T>& grads, double max_norm);

// Class weights for the loss; classes absent from `counts` get 0.
nn::TagWeights loss_weights(const TagCounts& counts, double gamma, WeightScale scale);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double learning_rate = 0;
  nn::LossParts train_loss;  // token-weighted mean over the epoch
  std::size_t clipped_steps = 0;
  metrics::EvalReport dev;
  double seconds = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_f_rm = 0;
  std::string stop_reason;
  Json setup = Json::object();

  Json to_json() const;
};

struct TrainResult {
  nn::Model model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Vocabulary and class weights come from `train_corpus` alone. Returns the
// parameters of the best dev epoch.
TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus, nn::Hyperparams hyper,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace disfl::train
