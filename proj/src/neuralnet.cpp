#include "disfl/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "disfl/random.hpp"

namespace disfl::nn {

// ---------------------------------------------------------------------------
// Hyperparams

void Hyperparams::validate() const {
  if (vocab_size < Vocabulary::kReserved) throw ConfigError("vocab_size must cover the reserved ids");
  if (embedding_size < 1 || hidden_size < 1) throw ConfigError("embedding_size and hidden_size must be >= 1");
  for (int s : head_layers)
    if (s < 1) throw ConfigError("head layer sizes must be >= 1");
  if (context_window < 1) throw ConfigError("context_window must be >= 1");
  if (!(alpha >= 0) || !(lambda >= 0)) throw ConfigError("alpha and lambda must be >= 0");
  if (!(gamma > 0)) throw ConfigError("gamma must be > 0");
}

Json Hyperparams::to_json() const {
  Json j = Json::object();
  j["vocab_size"] = vocab_size;
  j["embedding_size"] = embedding_size;
  j["hidden_size"] = hidden_size;
  j["head_layers"] = head_layers;
  j["context_window"] = context_window;
  j["alpha"] = alpha;
  j["lambda"] = lambda;
  j["gamma"] = gamma;
  j["seed"] = seed;
  return j;
}

Hyperparams Hyperparams::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("hyperparameters must be a JSON object");
  Hyperparams h;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "vocab_size")
        h.vocab_size = value.get<int>();
      else if (key == "embedding_size")
        h.embedding_size = value.get<int>();
      else if (key == "hidden_size")
        h.hidden_size = value.get<int>();
      else if (key == "head_layers")
        h.head_layers = value.get<std::vector<int>>();
      else if (key == "context_window")
        h.context_window = value.get<int>();
      else if (key == "alpha")
        h.alpha = value.get<double>();
      else if (key == "lambda")
        h.lambda = value.get<double>();
      else if (key == "gamma")
        h.gamma = value.get<double>();
      else if (key == "seed")
        h.seed = value.get<std::uint64_t>();
      else
        throw ConfigError("unknown hyperparameter '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("hyperparameters: ") + e.what());
  }
  return h;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

template <typename T>
std::vector<Affine<T>> zero_head(int in, const std::vector<int>& hidden, int out) {
  std::vector<Affine<T>> layers;
  int prev = in;
  auto add = [&](int size) {
    layers.push_back({Mat<T>::Zero(size, prev), Vec<T>::Zero(size)});
    prev = size;
  };
  for (int s : hidden) add(s);
  add(out);
  return layers;
}

template <typename P, typename T>
void collect(P& p, std::vector<TensorRef<T>>& out) {
  auto add = [&](std::string name, auto& m, bool weight) {
    out.push_back({std::move(name), m.rows(), m.cols(), m.data(), weight});
  };
  add("embedding", p.embedding, true);
  add("lstm.weight", p.lstm_weight, true);
  add("lstm.bias", p.lstm_bias, false);
  for (std::size_t k = 0; k < p.tag_head.size(); ++k) {
    add("tag." + std::to_string(k) + ".weight", p.tag_head[k].weight, true);
    add("tag." + std::to_string(k) + ".bias", p.tag_head[k].bias, false);
  }
  for (std::size_t k = 0; k < p.lm_head.size(); ++k) {
    add("lm." + std::to_string(k) + ".weight", p.lm_head[k].weight, true);
    add("lm." + std::to_string(k) + ".bias", p.lm_head[k].bias, false);
  }
}

template <typename T>
void fill_uniform(Eigen::Ref<Mat<T>> m, double scale, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<T>(uniform_real(rng, -scale, scale));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename Derived>
void softmax_inplace(Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  const T m = v.maxCoeff();
  v = (v.array() - m).exp().matrix();
  v /= v.sum();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace

template <typename T>
Parameters<T> Parameters<T>::zeros(const Hyperparams& hyper) {
  const int E = hyper.embedding_size, H = hyper.hidden_size;
  Parameters p;
  p.embedding = Mat<T>::Zero(hyper.vocab_size, E);
  p.lstm_weight = Mat<T>::Zero(4 * H, E + H);
  p.lstm_bias = Vec<T>::Zero(4 * H);
  p.tag_head = zero_head<T>(H, hyper.head_layers, Tag::kCount);
  p.lm_head = zero_head<T>(H, hyper.head_layers, hyper.vocab_size);
  return p;
}

template <typename T>
std::vector<TensorRef<T>> Parameters<T>::tensors() {
  std::vector<TensorRef<T>> out;
  collect(*this, out);
  return out;
}

template <typename T>
std::vector<TensorRef<const T>> Parameters<T>::tensors() const {
  std::vector<TensorRef<const T>> out;
  collect(*this, out);
  return out;
}

template <typename T>
template <typename U>
Parameters<U> Parameters<T>::cast() const {
  Parameters<U> p;
  p.embedding = embedding.template cast<U>();
  p.lstm_weight = lstm_weight.template cast<U>();
  p.lstm_bias = lstm_bias.template cast<U>();
  for (const auto& l : tag_head) p.tag_head.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
  for (const auto& l : lm_head) p.lm_head.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
  return p;
}

template <typename T>
bool identical(const Parameters<T>& a, const Parameters<T>& b) {
  auto ta = a.tensors(), tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].name != tb[k].name || ta[k].rows != tb[k].rows || ta[k].cols != tb[k].cols) return false;
    auto va = ta[k].values(), vb = tb[k].values();
    if (!std::equal(va.begin(), va.end(), vb.begin())) return false;
  }
  return true;
}

template <typename T>
Parameters<T> init_params(const Hyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  const int E = hyper.embedding_size, H = hyper.hidden_size;
  Parameters<T> p = Parameters<T>::zeros(hyper);
  Rng rng(seed);
  fill_uniform<T>(p.embedding, std::sqrt(6.0 / (hyper.vocab_size + E)), rng);
  const double gate_scale = std::sqrt(6.0 / (E + H + H));
  for (int g = 0; g < 4; ++g) fill_uniform<T>(p.lstm_weight.middleRows(g * H, H), gate_scale, rng);
  p.lstm_bias.segment(H, H).setConstant(T(1));
  for (auto* head : {&p.tag_head, &p.lm_head})
    for (auto& layer : *head)
      fill_uniform<T>(layer.weight, std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols())),
                      rng);
  return p;
}

template <typename T>
RecurrentState<T> RecurrentState<T>::zeros(const Hyperparams& hyper) {
  return {Vec<T>::Zero(hyper.hidden_size), Vec<T>::Zero(hyper.hidden_size), 0};
}

// ---------------------------------------------------------------------------
// Single-step inference

namespace {

template <typename T>
Vec<T> run_head(const std::vector<Affine<T>>& head, const Vec<T>& input) {
  Vec<T> v = input;
  for (std::size_t k = 0; k < head.size(); ++k) {
    Vec<T> next = head[k].weight * v + head[k].bias;
    if (k + 1 < head.size()) next = next.array().tanh().matrix();
    v = std::move(next);
  }
  softmax_inplace(v);
  return v;
}

}  // namespace

template <typename T>
StepOutput<T> forward_step(const Parameters<T>& params, RecurrentState<T>& state, int token) {
  const Eigen::Index V = params.embedding.rows(), E = params.embedding.cols(), H = state.h.size();
  if (token < 0 || token >= V) throw DataError("token id " + std::to_string(token) + " outside the vocabulary");
  Vec<T> z(E + H);
  z.head(E) = params.embedding.row(token).transpose();
  z.tail(H) = state.h;
  Vec<T> a = params.lstm_weight * z + params.lstm_bias;
  Vec<T> c(H), h(H);
  for (Eigen::Index j = 0; j < H; ++j) {
    const T i = sigmoid(a(j)), f = sigmoid(a(H + j)), o = sigmoid(a(2 * H + j)), g = std::tanh(a(3 * H + j));
    c(j) = f * state.c(j) + i * g;
    h(j) = o * std::tanh(c(j));
  }
  if (!all_finite(h) || !all_finite(c)) throw NumericFault("non-finite recurrent state", state.consumed);
  state.h = std::move(h);
  state.c = std::move(c);
  StepOutput<T> out{run_head(params.tag_head, state.h), run_head(params.lm_head, state.h)};
  if (!all_finite(out.tag_probs) || !all_finite(out.lm_probs))
    throw NumericFault("non-finite output distribution", state.consumed);
  ++state.consumed;
  return out;
}

template <typename T>
Tag argmax_tag(const Vec<T>& tag_probs) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < tag_probs.size(); ++k)
    if (tag_probs(k) > tag_probs(best)) best = k;
  return Tag::from_index(static_cast<int>(best));
}

template <typename T>
TagSequence tag_ids(const Parameters<T>& params, std::span<const int> ids) {
  RecurrentState<T> state{Vec<T>::Zero(params.lstm_weight.cols() - params.embedding.cols()),
                          Vec<T>::Zero(params.lstm_weight.cols() - params.embedding.cols()), 0};
  TagSequence out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(argmax_tag(forward_step(params, state, id).tag_probs));
  return out;
}

// ---------------------------------------------------------------------------
// Examples and batches

Example make_example(const Vocabulary& vocab, const Utterance& utterance) {
  Example ex;
  std::vector<int> ids = encode_utterance(vocab, utterance);
  ex.inputs.assign(ids.begin(), ids.end() - 1);
  ex.next.assign(ids.begin() + 1, ids.end());
  for (const Tag& t : utterance.tags()) ex.tags.push_back(t.index());
  return ex;
}

Batch Batch::from_examples(std::span<const Example* const> examples) {
  Batch b;
  b.batch_size = examples.size();
  for (const Example* e : examples) b.steps = std::max(b.steps, e->inputs.size());
  b.inputs.assign(b.batch_size * b.steps, Vocabulary::kPad);
  b.tags.assign(b.batch_size * b.steps, -1);
  b.next.assign(b.batch_size * b.steps, -1);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& e = *examples[i];
    if (e.tags.size() != e.inputs.size() || e.next.size() != e.inputs.size())
      throw DataError("example inputs, tags and LM targets differ in length");
    b.lengths.push_back(e.inputs.size());
    for (std::size_t t = 0; t < e.inputs.size(); ++t) {
      b.inputs[b.index(i, t)] = e.inputs[t];
      b.tags[b.index(i, t)] = e.tags[t];
      b.next[b.index(i, t)] = e.next[t];
    }
  }
  return b;
}

Batch Batch::from_examples(std::span<const Example> examples) {
  std::vector<const Example*> ptrs;
  for (const Example& e : examples) ptrs.push_back(&e);
  return from_examples(std::span<const Example* const>(ptrs));
}

std::size_t Batch::active_steps() const {
  std::size_t n = 0;
  for (std::size_t l : lengths) n += l;
  return n;
}

// ---------------------------------------------------------------------------
// Batched loss and gradients

template <typename T>
double l2_term(const Parameters<T>& params, double lambda) {
  double sum = 0;
  for (const auto& t : params.tensors())
    if (t.is_weight)
      for (T v : t.values()) sum += static_cast<double>(v) * static_cast<double>(v);
  return 0.5 * lambda * sum;
}

namespace {

// Per-step activations, rows indexed by batch element.
template <typename T>
struct StepCache {
  Mat<T> z;      // B x (E + H): [x_t, h_{t-1}]
  Mat<T> gates;  // B x 4H: sigmoid(i), sigmoid(f), sigmoid(o), tanh(g)
  Mat<T> c;      // B x H
  Mat<T> tanh_c;
};

template <typename T>
struct HeadCache {
  std::vector<Mat<T>> activations;  // input, then each hidden layer
  Mat<T> probs;
};

template <typename T>
HeadCache<T> head_forward(const std::vector<Affine<T>>& head, const Mat<T>& input) {
  HeadCache<T> cache;
  cache.activations.push_back(input);
  for (std::size_t k = 0; k < head.size(); ++k) {
    Mat<T> y = cache.activations.back() * head[k].weight.transpose();
    y.rowwise() += head[k].bias.transpose();
    if (k + 1 < head.size()) {
      cache.activations.push_back(y.array().tanh().matrix());
    } else {
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        softmax_inplace(row);
      }
      cache.probs = std::move(y);
    }
  }
  return cache;
}

// Backpropagates dlogits through the head, accumulating into `grads` and
// returning the gradient with respect to the head input.
template <typename T>
Mat<T> head_backward(const std::vector<Affine<T>>& head, const HeadCache<T>& cache, Mat<T> dy,
                     std::vector<Affine<T>>& grads) {
  for (std::size_t k = head.size(); k-- > 0;) {
    const Mat<T>& input = cache.activations[k];
    grads[k].weight.noalias() += dy.transpose() * input;
    grads[k].bias += dy.colwise().sum().transpose();
    Mat<T> dx = dy * head[k].weight;
    if (k > 0) dx.array() *= (T(1) - input.array().square());
    dy = std::move(dx);
  }
  return dy;
}

}  // namespace

template <typename T>
LossParts loss_and_gradients(const Parameters<T>& params, const Hyperparams& hyper, const Batch& batch,
                             const TagWeights& weights, Parameters<T>* grads) {
  const Eigen::Index B = static_cast<Eigen::Index>(batch.batch_size);
  const Eigen::Index S = static_cast<Eigen::Index>(batch.steps);
  const Eigen::Index E = params.embedding.cols(), H = params.lstm_bias.size() / 4;
  const Eigen::Index V = params.embedding.rows();
  const std::size_t active = batch.active_steps();
  if (active == 0) throw DataError("batch has no tokens");

  // Recurrence, rows of `hidden` are ordered step-major (t * B + b).
  std::vector<StepCache<T>> steps(static_cast<std::size_t>(S));
  Mat<T> hidden(S * B, H);
  Mat<T> h = Mat<T>::Zero(B, H), c = Mat<T>::Zero(B, H);
  for (Eigen::Index t = 0; t < S; ++t) {
    StepCache<T>& sc = steps[static_cast<std::size_t>(t)];
    sc.z.resize(B, E + H);
    for (Eigen::Index b = 0; b < B; ++b) {
      const int id = batch.inputs[batch.index(static_cast<std::size_t>(b), static_cast<std::size_t>(t))];
      if (id < 0 || id >= V) throw DataError("token id " + std::to_string(id) + " outside the vocabulary");
      sc.z.row(b).head(E) = params.embedding.row(id);
    }
    sc.z.rightCols(H) = h;
    Mat<T> a = sc.z * params.lstm_weight.transpose();
    a.rowwise() += params.lstm_bias.transpose();
    sc.gates.resize(B, 4 * H);
    sc.gates.leftCols(3 * H) = (T(1) / (T(1) + (-a.leftCols(3 * H).array()).exp())).matrix();
    sc.gates.rightCols(H) = a.rightCols(H).array().tanh().matrix();
    c = (sc.gates.middleCols(H, H).array() * c.array() +
         sc.gates.leftCols(H).array() * sc.gates.rightCols(H).array())
            .matrix();
    sc.c = c;
    sc.tanh_c = c.array().tanh().matrix();
    h = (sc.gates.middleCols(2 * H, H).array() * sc.tanh_c.array()).matrix();
    if (!all_finite(h)) throw NumericFault("non-finite recurrent state", static_cast<std::size_t>(t));
    hidden.middleRows(t * B, B) = h;
  }

  HeadCache<T> tag_cache = head_forward(params.tag_head, hidden);
  HeadCache<T> lm_cache = head_forward(params.lm_head, hidden);

  const double n = static_cast<double>(active);
  double main = 0, lm = 0;
  Mat<T> d_tag, d_lm;
  if (grads) {
    d_tag = tag_cache.probs;
    d_lm = lm_cache.probs;
  }
  for (Eigen::Index t = 0; t < S; ++t)
    for (Eigen::Index b = 0; b < B; ++b) {
      const std::size_t i = batch.index(static_cast<std::size_t>(b), static_cast<std::size_t>(t));
      const Eigen::Index row = t * B + b;
      const int y = batch.tags[i];
      if (y < 0) {
        if (grads) {
          d_tag.row(row).setZero();
          d_lm.row(row).setZero();
        }
        continue;
      }
      const double w = weights[static_cast<std::size_t>(y)];
      if (!(w > 0)) throw DataError("gold class " + render_tag(Tag::from_index(y)) + " has weight 0");
      const int next = batch.next[i];
      const double p_tag = static_cast<double>(tag_cache.probs(row, y));
      const double p_lm = static_cast<double>(lm_cache.probs(row, next));
      main += w * -std::log(p_tag);
      lm += -std::log(p_lm);
      if (grads) {
        d_tag(row, y) -= T(1);
        d_tag.row(row) *= static_cast<T>(w / n);
        d_lm(row, next) -= T(1);
        d_lm.row(row) *= static_cast<T>(hyper.alpha / n);
      }
    }
  LossParts parts;
  parts.main = main / n;
  parts.lm = lm / n;
  parts.reg = l2_term(params, hyper.lambda);
  parts.total = parts.main + hyper.alpha * parts.lm + parts.reg;
  if (!std::isfinite(parts.total)) throw NumericFault("non-finite loss", 0);
  if (!grads) return parts;

  Parameters<T>& g = *grads;
  g = Parameters<T>::zeros(hyper);
  Mat<T> d_hidden = head_backward(params.tag_head, tag_cache, std::move(d_tag), g.tag_head);
  d_hidden += head_backward(params.lm_head, lm_cache, std::move(d_lm), g.lm_head);

  // Truncated BPTT: the state entering step t is a constant whenever t is a
  // multiple of the window.
  const Eigen::Index window = hyper.context_window;
  Mat<T> dh_next = Mat<T>::Zero(B, H), dc_next = Mat<T>::Zero(B, H);
  Mat<T> da(B, 4 * H);
  for (Eigen::Index t = S; t-- > 0;) {
    const StepCache<T>& sc = steps[static_cast<std::size_t>(t)];
    const Mat<T> c_prev = t > 0 ? steps[static_cast<std::size_t>(t - 1)].c : Mat<T>::Zero(B, H);
    Mat<T> dh = d_hidden.middleRows(t * B, B) + dh_next;
    auto i = sc.gates.leftCols(H).array();
    auto f = sc.gates.middleCols(H, H).array();
    auto o = sc.gates.middleCols(2 * H, H).array();
    auto gg = sc.gates.rightCols(H).array();
    Mat<T> dc = (dh.array() * o * (T(1) - sc.tanh_c.array().square())).matrix() + dc_next;
    da.leftCols(H) = (dc.array() * gg * i * (T(1) - i)).matrix();
    da.middleCols(H, H) = (dc.array() * c_prev.array() * f * (T(1) - f)).matrix();
    da.middleCols(2 * H, H) = (dh.array() * sc.tanh_c.array() * o * (T(1) - o)).matrix();
    da.rightCols(H) = (dc.array() * i * (T(1) - gg.square())).matrix();

    g.lstm_weight.noalias() += da.transpose() * sc.z;
    g.lstm_bias += da.colwise().sum().transpose();
    Mat<T> dz = da * params.lstm_weight;
    for (Eigen::Index b = 0; b < B; ++b) {
      const std::size_t idx = batch.index(static_cast<std::size_t>(b), static_cast<std::size_t>(t));
      if (batch.tags[idx] < 0) continue;
      g.embedding.row(batch.inputs[idx]) += dz.row(b).head(E);
    }
    if (t % window == 0) {
      dh_next.setZero();
      dc_next.setZero();
    } else {
      dh_next = dz.rightCols(H);
      dc_next = (dc.array() * f).matrix();
    }
  }

  if (hyper.lambda > 0) {
    const T lambda = static_cast<T>(hyper.lambda);
    auto gt = g.tensors();
    auto pt = params.tensors();
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (!gt[k].is_weight) continue;
      auto gv = gt[k].values();
      auto pv = pt[k].values();
      for (std::size_t e = 0; e < gv.size(); ++e) gv[e] += lambda * pv[e];
    }
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Gradient check

GradientCheck gradient_check(const Parameters<double>& params, const Hyperparams& hyper, const Batch& batch,
                             const TagWeights& weights, double h, std::size_t per_tensor, std::uint64_t seed) {
  Parameters<double> analytic;
  loss_and_gradients(params, hyper, batch, weights, &analytic);
  Parameters<double> probe = params;
  auto probe_tensors = probe.tensors();
  auto grad_tensors = std::as_const(analytic).tensors();
  Rng rng(seed);
  GradientCheck result;
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    auto values = probe_tensors[k].values();
    std::vector<std::size_t> entries(values.size());
    for (std::size_t e = 0; e < entries.size(); ++e) entries[e] = e;
    if (entries.size() > per_tensor) {
      shuffle(entries, rng);
      entries.resize(per_tensor);
    }
    for (std::size_t e : entries) {
      const double saved = values[e];
      values[e] = saved + h;
      const double plus = loss_and_gradients<double>(probe, hyper, batch, weights, nullptr).total;
      values[e] = saved - h;
      const double minus = loss_and_gradients<double>(probe, hyper, batch, weights, nullptr).total;
      values[e] = saved;
      const double numeric = (plus - minus) / (2 * h);
      const double a = grad_tensors[k].values()[e];
      const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-10);
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = probe_tensors[k].name;
      }
      ++result.checked;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Session and Model

template <typename T>
Session<T>::Session(const Parameters<T>& params, const Hyperparams& hyper)
    : params_(&params), hyper_(hyper), state_(RecurrentState<T>::zeros(hyper)) {}

template <typename T>
Tag Session<T>::feed(int token) {
  if (!open_) throw Error("session is closed");
  last_ = forward_step(*params_, state_, token);
  emitted_.push_back(argmax_tag(last_.tag_probs));
  return emitted_.back();
}

template <typename T>
void Session<T>::end_utterance() {
  state_ = RecurrentState<T>::zeros(hyper_);
  emitted_.clear();
}

TagSequence Model::tag(const Utterance& utterance) const {
  std::vector<int> ids;
  ids.reserve(utterance.tokens.size());
  for (const Token& t : utterance.tokens) ids.push_back(vocab.lookup(t));
  return tag_ids(params, ids);
}

// ---------------------------------------------------------------------------
// Instantiations

#define DISFL_INSTANTIATE(T)                                                                            \
  template struct Parameters<T>;                                                                        \
  template bool identical<T>(const Parameters<T>&, const Parameters<T>&);                              \
  template Parameters<T> init_params<T>(const Hyperparams&, std::uint64_t);                             \
  template struct RecurrentState<T>;                                                                    \
  template StepOutput<T> forward_step<T>(const Parameters<T>&, RecurrentState<T>&, int);                \
  template Tag argmax_tag<T>(const Vec<T>&);                                                            \
  template TagSequence tag_ids<T>(const Parameters<T>&, std::span<const int>);                          \
  template LossParts loss_and_gradients<T>(const Parameters<T>&, const Hyperparams&, const Batch&,      \
                                           const TagWeights&, Parameters<T>*);                          \
  template double l2_term<T>(const Parameters<T>&, double);                                             \
  template class Session<T>;

DISFL_INSTANTIATE(float)
DISFL_INSTANTIATE(double)
#undef DISFL_INSTANTIATE

template Parameters<double> Parameters<float>::cast<double>() const;
template Parameters<float> Parameters<double>::cast<float>() const;
template Parameters<float> Parameters<float>::cast<float>() const;
template Parameters<double> Parameters<double>::cast<double>() const;

}  // namespace disfl::nn
