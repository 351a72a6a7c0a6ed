#pragma once

// Multi-task recurrent tagger: combined word/POS embeddings feed one LSTM
// layer whose state drives two independent MLP heads, one over the 27 tags
// and one predicting the next token.
//
// Everything is templated on the scalar type. Training runs in float; the
// gradient checks instantiate double.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "disfl/corpus.hpp"
#include "disfl/tagset.hpp"

namespace disfl::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct Hyperparams {
  int vocab_size = 0;
  int embedding_size = 128;
  int hidden_size = 128;
  std::vector<int> head_layers{128};
  int context_window = 20;  // truncated-backprop length n
  double alpha = 0.1;       // LM loss coefficient
  double lambda = 0.001;    // L2 coefficient on weight matrices
  double gamma = 1.05;      // class-weight smoothing
  std::uint64_t seed = 1;

  // Throws ConfigError.
  void validate() const;
  Json to_json() const;
  // Keys absent from `json` keep their defaults; unknown keys are rejected.
  static Hyperparams from_json(const Json& json);
};

// out x in weight plus bias.
template <typename T>
struct Affine {
  Mat<T> weight;
  Vec<T> bias;
};

// Named view of one parameter tensor, row-major.
template <typename T>
struct TensorRef {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  T* data = nullptr;
  bool is_weight = true;  // false for biases (excluded from L2)

  std::span<T> values() const { return {data, static_cast<std::size_t>(rows * cols)}; }
};

template <typename T>
struct Parameters {
  Mat<T> embedding;  // vocab x E
  // Fused gate weights over [x_t; h_{t-1}], row blocks i, f, o, g.
  Mat<T> lstm_weight;  // 4H x (E + H)
  Vec<T> lstm_bias;    // 4H
  std::vector<Affine<T>> tag_head;  // last layer has 27 outputs
  std::vector<Affine<T>> lm_head;   // last layer has vocab outputs

  static Parameters zeros(const Hyperparams& hyper);
  // Stable order shared by serialization, gradient checks and SGD.
  std::vector<TensorRef<T>> tensors();
  std::vector<TensorRef<const T>> tensors() const;

  template <typename U>
  Parameters<U> cast() const;
};

// Exact element-wise equality of every tensor (shapes included).
template <typename T>
bool identical(const Parameters<T>& a, const Parameters<T>& b);

// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)) per matrix (per gate
// block for the LSTM); biases 0 except the forget gate at 1.
template <typename T>
Parameters<T> init_params(const Hyperparams& hyper, std::uint64_t seed);

template <typename T>
struct RecurrentState {
  Vec<T> h;
  Vec<T> c;
  std::size_t consumed = 0;

  static RecurrentState zeros(const Hyperparams& hyper);
};

template <typename T>
struct StepOutput {
  Vec<T> tag_probs;  // 27
  Vec<T> lm_probs;   // vocab
};

// One token through the cell and both heads; updates `state`. Throws
// NumericFault on non-finite activations.
template <typename T>
StepOutput<T> forward_step(const Parameters<T>& params, RecurrentState<T>& state, int token);

// Argmax over the 27 tag probabilities; ties go to the lower class id.
template <typename T>
Tag argmax_tag(const Vec<T>& tag_probs);

// Token-by-token tagging of one utterance through forward_step.
template <typename T>
TagSequence tag_ids(const Parameters<T>& params, std::span<const int> ids);

// One utterance ready for training: inputs[t] is the token id, tags[t] the
// gold class id and next[t] the LM target (the following id, EOS at the end).
struct Example {
  std::vector<int> inputs;
  std::vector<int> tags;
  std::vector<int> next;
};

// Requires gold tags.
Example make_example(const Vocabulary& vocab, const Utterance& utterance);

// Right-padded mini-batch; -1 marks masked targets.
struct Batch {
  std::size_t batch_size = 0;
  std::size_t steps = 0;
  std::vector<int> inputs;  // batch_size * steps, PAD where padded
  std::vector<int> tags;
  std::vector<int> next;
  std::vector<std::size_t> lengths;

  static Batch from_examples(std::span<const Example* const> examples);
  static Batch from_examples(std::span<const Example> examples);
  std::size_t index(std::size_t b, std::size_t t) const { return b * steps + t; }
  std::size_t active_steps() const;
};

struct LossParts {
  double main = 0;
  double lm = 0;
  double reg = 0;  // (lambda / 2) * sum of squared weight-matrix entries
  double total = 0;
};

using TagWeights = std::array<double, Tag::kCount>;

// Forward pass over the batch; when `grads` is non-null it is overwritten
// with dL/dparams under truncation window hyper.context_window (gradient
// into the state entering step t is cut when t is a multiple of the window).
// Throws DataError when a gold class has weight 0, NumericFault on
// non-finite values.
template <typename T>
LossParts loss_and_gradients(const Parameters<T>& params, const Hyperparams& hyper, const Batch& batch,
                             const TagWeights& weights, Parameters<T>* grads);

template <typename T>
double l2_term(const Parameters<T>& params, double lambda);

// Central-difference check on a model built from `hyper`; samples up to
// `per_tensor` entries of every tensor and returns the largest relative
// error |a - n| / max(|a| + |n|, floor).
struct GradientCheck {
  double max_relative_error = 0;
  std::string worst_tensor;
  std::size_t checked = 0;
};
GradientCheck gradient_check(const Parameters<double>& params, const Hyperparams& hyper, const Batch& batch,
                             const TagWeights& weights, double h, std::size_t per_tensor, std::uint64_t seed);

// Streaming tagger over a fixed parameter set. Tags are committed as soon
// as a token arrives and are never revised.
template <typename T>
class Session {
 public:
  Session(const Parameters<T>& params, const Hyperparams& hyper);

  Tag feed(int token);
  const StepOutput<T>& last_output() const { return last_; }
  const TagSequence& emitted() const { return emitted_; }
  void end_utterance();
  void close() { open_ = false; }
  bool is_open() const { return open_; }

 private:
  const Parameters<T>* params_;
  Hyperparams hyper_;
  RecurrentState<T> state_;
  StepOutput<T> last_;
  TagSequence emitted_;
  bool open_ = true;
};

// A trained tagger with its vocabulary.
struct Model {
  Hyperparams hyper;
  Vocabulary vocab;
  Parameters<float> params;

  TagSequence tag(const Utterance& utterance) const;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Layout: "DFLT", u32 version, u64 header length, JSON header, then the
// tensors as little-endian float32 in manifest order.
void save_model(const Model& model, const std::filesystem::path& path);
std::string serialize_model(const Model& model);
Model load_model(const std::filesystem::path& path);
Model deserialize_model(std::string_view bytes);

}  // namespace disfl::nn
