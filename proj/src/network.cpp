#include "ppdl/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "parallel.hpp"
#include "ppdl/error.hpp"
#include "ppdl/rng.hpp"

namespace ppdl::nn {

namespace {

std::string shape_str(Shape s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

bool has_params(LayerKind k) { return k == LayerKind::Conv2d || k == LayerKind::Dense; }

// Activations of one example: acts[0] is the input, acts[i + 1] the output of layer i.
struct Trace {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<std::uint32_t>> pool_index;  // per layer, source index of each pooled value
};

void conv_forward(const Layer& L, const double* w, const double* b, const double* in, double* out) {
  const int H = L.in.height, W = L.in.width, C = L.in.channels;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int o = 0; o < L.out.channels; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, b[o]);
    for (int i = 0; i < C; ++i) {
      const double* src = in + i * plane;
      const double* k = w + (static_cast<std::size_t>(o) * C + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = k[ky * 3 + kx];
          const int x0 = std::max(0, 1 - kx), x1 = std::min(W, W + 1 - kx);
          for (int y = std::max(0, 1 - ky); y < std::min(H, H + 1 - ky); ++y) {
            double* drow = dst + static_cast<std::size_t>(y) * W;
            const double* srow = src + static_cast<std::size_t>(y + ky - 1) * W + (kx - 1);
            for (int x = x0; x < x1; ++x) drow[x] += kv * srow[x];
          }
        }
      }
    }
  }
}

void conv_backward(const Layer& L, const double* w, const double* in, const double* dout, double* dw, double* db,
                   double* din) {
  const int H = L.in.height, W = L.in.width, C = L.in.channels;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int o = 0; o < L.out.channels; ++o) {
    const double* g = dout + o * plane;
    double bsum = 0;
    for (std::size_t j = 0; j < plane; ++j) bsum += g[j];
    db[o] += bsum;
    for (int i = 0; i < C; ++i) {
      const double* src = in + i * plane;
      const double* k = w + (static_cast<std::size_t>(o) * C + i) * 9;
      double* dk = dw + (static_cast<std::size_t>(o) * C + i) * 9;
      double* dsrc = din ? din + i * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = k[ky * 3 + kx];
          const int x0 = std::max(0, 1 - kx), x1 = std::min(W, W + 1 - kx);
          double acc = 0;
          for (int y = std::max(0, 1 - ky); y < std::min(H, H + 1 - ky); ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * W;
            const std::size_t off = static_cast<std::size_t>(y + ky - 1) * W + (kx - 1);
            const double* srow = src + off;
            for (int x = x0; x < x1; ++x) acc += grow[x] * srow[x];
            if (dsrc) {
              double* drow = dsrc + off;
              for (int x = x0; x < x1; ++x) drow[x] += kv * grow[x];
            }
          }
          dk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

void dense_forward(const Layer& L, const double* w, const double* b, const double* in, double* out) {
  const std::size_t n_in = L.in.size();
  for (int j = 0; j < L.out.channels; ++j) {
    const double* row = w + static_cast<std::size_t>(j) * n_in;
    double acc = b[j];
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[j] = acc;
  }
}

void dense_backward(const Layer& L, const double* w, const double* in, const double* dout, double* dw, double* db,
                    double* din) {
  const std::size_t n_in = L.in.size();
  for (int j = 0; j < L.out.channels; ++j) {
    const double g = dout[j];
    db[j] += g;
    double* drow = dw + static_cast<std::size_t>(j) * n_in;
    const double* row = w + static_cast<std::size_t>(j) * n_in;
    for (std::size_t i = 0; i < n_in; ++i) drow[i] += g * in[i];
    if (din) {
      for (std::size_t i = 0; i < n_in; ++i) din[i] += g * row[i];
    }
  }
}

void maxpool_forward(const Layer& L, const double* in, double* out, std::uint32_t* index) {
  const int H = L.in.height, W = L.in.width;
  const int OH = L.out.height, OW = L.out.width;
  for (int c = 0; c < L.in.channels; ++c) {
    for (int y = 0; y < OH; ++y) {
      for (int x = 0; x < OW; ++x) {
        std::size_t best = (static_cast<std::size_t>(c) * H + 2 * y) * W + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t s = (static_cast<std::size_t>(c) * H + 2 * y + dy) * W + 2 * x + dx;
            if (in[s] > in[best]) best = s;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(c) * OH + y) * OW + x;
        out[o] = in[best];
        index[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

// Logits are the input of the terminal softmax.
void softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) sum += (out[k] = std::exp(logits[k] - mx));
  for (auto& v : out) v /= sum;
}

double cross_entropy(std::span<const double> logits, std::uint32_t label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double z : logits) sum += std::exp(z - mx);
  return mx + std::log(sum) - logits[label];
}

void run_forward(const Network& net, std::span<const double> input, Trace& t) {
  if (input.size() != net.input_shape().size()) {
    throw Error(Errc::ShapeError, "input has " + std::to_string(input.size()) + " values, network expects " +
                                      shape_str(net.input_shape()));
  }
  const auto& layers = net.layers();
  const auto params = net.params();
  t.acts.resize(layers.size() + 1);
  t.pool_index.resize(layers.size());
  t.acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    const auto& in = t.acts[l];
    auto& out = t.acts[l + 1];
    out.resize(L.out.size());
    switch (L.kind) {
      case LayerKind::Conv2d:
        conv_forward(L, params.data() + L.weight_offset, params.data() + L.bias_offset, in.data(), out.data());
        break;
      case LayerKind::Dense:
        dense_forward(L, params.data() + L.weight_offset, params.data() + L.bias_offset, in.data(), out.data());
        break;
      case LayerKind::Relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0 ? in[i] : 0.0;
        break;
      case LayerKind::MaxPool2x2:
        t.pool_index[l].resize(L.out.size());
        maxpool_forward(L, in.data(), out.data(), t.pool_index[l].data());
        break;
      case LayerKind::Flatten:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case LayerKind::Softmax:
        softmax(in, out);
        break;
    }
  }
}

// Accumulates d(loss)/d(params) for one example into `grad`; returns the loss.
double run_backward(const Network& net, const Trace& t, std::uint32_t label, std::span<double> grad) {
  const auto& layers = net.layers();
  const auto params = net.params();
  const std::size_t last = layers.size() - 1;
  const auto& logits = t.acts[last];
  const auto& probs = t.acts[last + 1];
  const double loss = cross_entropy(logits, label);

  // softmax + cross-entropy: dL/dlogits = p - onehot
  std::vector<double> dout(probs.begin(), probs.end());
  dout[label] -= 1.0;
  std::vector<double> din;
  for (std::size_t l = last; l-- > 0;) {
    const Layer& L = layers[l];
    const auto& in = t.acts[l];
    const bool need_din = l > 0;
    din.assign(need_din ? L.in.size() : 0, 0.0);
    switch (L.kind) {
      case LayerKind::Conv2d:
        conv_backward(L, params.data() + L.weight_offset, in.data(), dout.data(), grad.data() + L.weight_offset,
                      grad.data() + L.bias_offset, need_din ? din.data() : nullptr);
        break;
      case LayerKind::Dense:
        dense_backward(L, params.data() + L.weight_offset, in.data(), dout.data(), grad.data() + L.weight_offset,
                       grad.data() + L.bias_offset, need_din ? din.data() : nullptr);
        break;
      case LayerKind::Relu:
        if (need_din) {
          for (std::size_t i = 0; i < in.size(); ++i) din[i] = in[i] > 0 ? dout[i] : 0.0;
        }
        break;
      case LayerKind::MaxPool2x2:
        if (need_din) {
          const auto& idx = t.pool_index[l];
          for (std::size_t o = 0; o < idx.size(); ++o) din[idx[o]] += dout[o];
        }
        break;
      case LayerKind::Flatten:
        if (need_din) din = dout;
        break;
      case LayerKind::Softmax:
        throw Error(Errc::ShapeError, "softmax must be the terminal layer");
    }
    dout.swap(din);
  }
  return loss;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ---------------------------------------------------------------------------

Network Network::build(Shape input, const std::vector<LayerSpec>& specs) {
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0) {
    throw Error(Errc::ShapeError, "input shape must be positive, got " + shape_str(input));
  }
  if (specs.empty() || specs.back().kind != LayerKind::Softmax) {
    throw Error(Errc::ShapeError, "network must end with softmax");
  }
  Network net;
  net.input_ = input;
  Shape cur = input;
  std::size_t offset = 0;
  bool flat = false;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    Layer L{s.kind, cur, cur};
    switch (s.kind) {
      case LayerKind::Conv2d:
        if (flat) throw Error(Errc::ShapeError, "conv2d after flatten");
        if (s.units <= 0) throw Error(Errc::ShapeError, "conv2d needs a positive channel count");
        L.out = Shape{s.units, cur.height, cur.width};
        L.weight_count = static_cast<std::size_t>(s.units) * cur.channels * 9;
        L.bias_count = static_cast<std::size_t>(s.units);
        break;
      case LayerKind::Dense:
        if (!flat) throw Error(Errc::ShapeError, "dense layer needs a flattened input");
        if (s.units <= 0) throw Error(Errc::ShapeError, "dense needs a positive width");
        L.out = Shape{s.units, 1, 1};
        L.weight_count = static_cast<std::size_t>(s.units) * cur.size();
        L.bias_count = static_cast<std::size_t>(s.units);
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool2x2:
        if (flat || cur.height < 2 || cur.width < 2) {
          throw Error(Errc::ShapeError, "maxpool needs a spatial input of at least 2x2, got " + shape_str(cur));
        }
        L.out = Shape{cur.channels, cur.height / 2, cur.width / 2};
        break;
      case LayerKind::Flatten:
        L.out = Shape{static_cast<int>(cur.size()), 1, 1};
        flat = true;
        break;
      case LayerKind::Softmax:
        if (i + 1 != specs.size()) throw Error(Errc::ShapeError, "softmax must be the terminal layer");
        if (!flat || cur.channels < 1) throw Error(Errc::ShapeError, "softmax needs a flat input");
        break;
      default:
        throw Error(Errc::ShapeError, "unknown layer kind");
    }
    L.weight_offset = offset;
    offset += L.weight_count;
    L.bias_offset = offset;
    offset += L.bias_count;
    net.layers_.push_back(L);
    cur = L.out;
  }
  net.params_.assign(offset, 0.0);
  return net;
}

void init_he(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  auto p = net.params();
  for (const Layer& L : net.layers()) {
    if (!has_params(L.kind)) continue;
    const double fan_in = L.kind == LayerKind::Conv2d ? L.in.channels * 9.0 : static_cast<double>(L.in.size());
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < L.weight_count; ++i) p[L.weight_offset + i] = stddev * rng.normal();
    std::fill_n(p.begin() + static_cast<std::ptrdiff_t>(L.bias_offset), L.bias_count, 0.0);
  }
}

Network build_default_net(int input_size, int channels, int num_classes, std::uint64_t seed) {
  if (input_size < 8) throw Error(Errc::ShapeError, "default network needs input_size >= 8");
  if (channels != 1 && channels != 3) throw Error(Errc::ShapeError, "channels must be 1 or 3");
  if (num_classes < 1) throw Error(Errc::ShapeError, "need at least one class");
  Network net = Network::build(Shape{channels, input_size, input_size},
                               {{LayerKind::Conv2d, 8},
                                {LayerKind::Relu},
                                {LayerKind::MaxPool2x2},
                                {LayerKind::Conv2d, 16},
                                {LayerKind::Relu},
                                {LayerKind::MaxPool2x2},
                                {LayerKind::Flatten},
                                {LayerKind::Dense, 64},
                                {LayerKind::Relu},
                                {LayerKind::Dense, num_classes},
                                {LayerKind::Softmax}});
  init_he(net, seed);
  return net;
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
  Trace t;
  run_forward(net, input, t);
  return std::move(t.acts.back());
}

std::vector<std::vector<double>> forward(const Network& net, const std::vector<std::vector<double>>& batch) {
  std::vector<std::vector<double>> out(batch.size());
  detail::parallel_for(batch.size(), [&](std::size_t i) { out[i] = forward(net, batch[i]); });
  return out;
}

double batch_loss(const Network& net, const std::vector<std::vector<double>>& batch,
                  std::span<const std::uint32_t> labels) {
  if (batch.size() != labels.size() || batch.empty()) throw Error(Errc::ShapeError, "batch/label size mismatch");
  std::vector<double> losses(batch.size());
  detail::parallel_for(batch.size(), [&](std::size_t i) {
    Trace t;
    run_forward(net, batch[i], t);
    losses[i] = cross_entropy(t.acts[t.acts.size() - 2], labels[i]);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(batch.size());
}

Gradient loss_and_gradient(const Network& net, const std::vector<std::vector<double>>& batch,
                           std::span<const std::uint32_t> labels) {
  if (batch.size() != labels.size() || batch.empty()) throw Error(Errc::ShapeError, "batch/label size mismatch");
  const auto k = static_cast<std::uint32_t>(net.num_classes());
  for (auto y : labels) {
    if (y >= k) throw Error(Errc::ShapeError, "label " + std::to_string(y) + " out of range");
  }
  const std::size_t P = net.param_count();
  std::vector<std::vector<double>> per_example(batch.size());
  std::vector<double> losses(batch.size());
  std::vector<char> hits(batch.size());
  detail::parallel_for(batch.size(), [&](std::size_t i) {
    Trace t;
    run_forward(net, batch[i], t);
    per_example[i].assign(P, 0.0);
    losses[i] = run_backward(net, t, labels[i], per_example[i]);
    hits[i] = argmax(t.acts.back()) == labels[i];
  });

  Gradient g;
  g.grad.assign(P, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* src = per_example[i].data();
    for (std::size_t j = 0; j < P; ++j) g.grad[j] += src[j];
    g.loss += losses[i];
    g.correct += static_cast<std::size_t>(hits[i]);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : g.grad) v *= inv;
  g.loss *= inv;
  return g;
}

// ---------------------------------------------------------------------------

std::string_view optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::Adam: return "adam";
  }
  return "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "momentum" || name == "sgd_momentum") return OptimizerKind::Momentum;
  if (name == "adam") return OptimizerKind::Adam;
  throw Error(Errc::BadArgument, "unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t param_count) : config_(config) {
  if (!(config_.learning_rate > 0)) throw Error(Errc::BadArgument, "learning rate must be positive");
  if (config_.kind != OptimizerKind::Sgd) m_.assign(param_count, 0.0);
  if (config_.kind == OptimizerKind::Adam) v_.assign(param_count, 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw Error(Errc::ShapeError, "gradient size mismatch");
  ++t_;
  const double lr = config_.learning_rate;
  switch (config_.kind) {
    case OptimizerKind::Sgd:
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
      break;
    case OptimizerKind::Momentum:
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.momentum * m_[i] + grad[i];
        params[i] -= lr * m_[i];
      }
      break;
    case OptimizerKind::Adam: {
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1 - b2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
      }
      break;
    }
  }
}

double train_step(Network& net, const std::vector<std::vector<double>>& batch, std::span<const std::uint32_t> labels,
                  Optimizer& opt) {
  Gradient g = loss_and_gradient(net, batch, labels);
  if (!std::isfinite(g.loss) || !all_finite(g.grad)) {
    throw Error(Errc::NumericalDivergence, "non-finite loss or gradient; lower the learning rate");
  }
  opt.step(net.params(), g.grad);
  if (!all_finite(net.params())) throw Error(Errc::NumericalDivergence, "parameters became non-finite");
  return g.loss;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(Errc::BadArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(Errc::BadArgument, "batch_size must be >= 1");
  if (!(optimizer.learning_rate > 0)) throw Error(Errc::BadArgument, "learning rate must be positive");
  if (input_size < 8) throw Error(Errc::BadArgument, "input_size must be >= 8");
  if (channels != 1 && channels != 3) throw Error(Errc::BadArgument, "channels must be 1 or 3");
}

std::vector<double> to_input(const ImageTensor& img, int input_size, int channels) {
  ImageTensor src = img;
  if (channels == 1) {
    src = to_gray(src);
  } else if (src.channels == 1) {
    ImageTensor rgb(src.width, src.height, 3);
    for (std::size_t i = 0; i < src.pixels.size(); ++i) {
      rgb.pixels[3 * i] = rgb.pixels[3 * i + 1] = rgb.pixels[3 * i + 2] = src.pixels[i];
    }
    src = std::move(rgb);
  }
  src = resize_nearest(src, input_size, input_size);
  // planar [channel][y][x] layout
  std::vector<double> out(static_cast<std::size_t>(channels) * input_size * input_size);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < input_size; ++y) {
      for (int x = 0; x < input_size; ++x) {
        out[(static_cast<std::size_t>(c) * input_size + y) * input_size + x] = src.at(x, y, c) / 255.0;
      }
    }
  }
  return out;
}

LabeledSet load_split(const dataset::Manifest& manifest, const std::filesystem::path& root, dataset::Split split,
                      int input_size, int channels) {
  const auto entries = manifest.in_split(split);
  LabeledSet set;
  set.inputs.resize(entries.size());
  set.labels.resize(entries.size());
  set.paths.resize(entries.size());
  detail::parallel_for(entries.size(), [&](std::size_t i) {
    const auto path = root / entries[i].path;
    ImageTensor img;
    try {
      img = read_image(path);
    } catch (const Error& e) {
      throw Error(Errc::BadImage, path.string() + ": " + e.what());
    }
    set.inputs[i] = to_input(img, input_size, channels);
    set.labels[i] = entries[i].label;
    set.paths[i] = entries[i].path;
  });
  return set;
}

std::uint32_t argmax(std::span<const double> probs) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

Predictions predict(const Network& net, const LabeledSet& samples) {
  Predictions p;
  p.probabilities = forward(net, samples.inputs);
  p.labels.reserve(samples.size());
  for (const auto& row : p.probabilities) p.labels.push_back(argmax(row));
  return p;
}

Predictions predict(const Network& net, const dataset::Manifest& manifest, const std::filesystem::path& root,
                    dataset::Split split) {
  const Shape s = net.input_shape();
  if (s.height != s.width) throw Error(Errc::ShapeError, "network input must be square");
  return predict(net, load_split(manifest, root, split, s.height, s.channels));
}

namespace {

double accuracy_of(const Network& net, const LabeledSet& set) {
  if (set.size() == 0) return 0.0;
  const auto p = predict(net, set);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) hits += p.labels[i] == set.labels[i];
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

}  // namespace

TrainReport train(Network& net, const LabeledSet& train_set, const LabeledSet& val_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw Error(Errc::EmptyEvaluation, "training split is empty");
  if (val_set.size() == 0) throw Error(Errc::EmptyEvaluation, "validation split is empty");

  Optimizer opt(config.optimizer, net.param_count());
  Rng rng(mix_seed(config.seed, 0x73687566666c65ULL));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.best_weights = net;
  double best_val = -1;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle_each_epoch) rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<std::vector<double>> batch;
      std::vector<std::uint32_t> labels;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train_set.inputs[order[i]]);
        labels.push_back(train_set.labels[order[i]]);
      }
      Gradient g = loss_and_gradient(net, batch, labels);
      if (!std::isfinite(g.loss) || !all_finite(g.grad)) {
        throw Error(Errc::NumericalDivergence,
                    "non-finite loss or gradient at epoch " + std::to_string(epoch) + "; lower the learning rate");
      }
      opt.step(net.params(), g.grad);
      loss_sum += g.loss * static_cast<double>(end - start);
      hits += g.correct;
    }
    if (!all_finite(net.params())) throw Error(Errc::NumericalDivergence, "parameters became non-finite");

    EpochStats s;
    s.train_loss = loss_sum / static_cast<double>(order.size());
    s.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    s.val_accuracy = accuracy_of(net, val_set);
    report.epochs.push_back(s);
    if (s.val_accuracy > best_val) {
      best_val = s.val_accuracy;
      report.best_epoch = epoch;
      report.best_weights = net;
    }
  }
  report.optimizer_steps = opt.steps();
  return report;
}

TrainReport train(Network& net, const dataset::Manifest& manifest, const std::filesystem::path& root,
                  const TrainConfig& config) {
  config.validate();
  const auto tr = load_split(manifest, root, dataset::Split::Train, config.input_size, config.channels);
  const auto va = load_split(manifest, root, dataset::Split::Val, config.input_size, config.channels);
  return train(net, tr, va, config);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kWeightsMagic[8] = {'P', 'P', 'D', 'L', 'W', 'T', 'S', '\0'};
constexpr std::uint32_t kWeightsVersion = 1;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool match(const char* p, std::size_t n) {
    need(n);
    bool ok = std::memcmp(in_.data() + pos_, p, n) == 0;
    pos_ += n;
    return ok;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(Errc::WeightsParseError, "truncated weights file");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::vector<std::uint32_t> weight_dims(const Layer& L) {
  if (L.kind == LayerKind::Conv2d) {
    return {static_cast<std::uint32_t>(L.out.channels), static_cast<std::uint32_t>(L.in.channels), 3, 3};
  }
  return {static_cast<std::uint32_t>(L.out.channels), static_cast<std::uint32_t>(L.in.size())};
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const Network& net) {
  ByteWriter w;
  w.raw(kWeightsMagic, sizeof(kWeightsMagic));
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  const Shape in = net.input_shape();
  w.u32(static_cast<std::uint32_t>(in.channels));
  w.u32(static_cast<std::uint32_t>(in.height));
  w.u32(static_cast<std::uint32_t>(in.width));
  const auto p = net.params();
  for (const Layer& L : net.layers()) {
    w.u8(static_cast<std::uint8_t>(L.kind));
    if (!has_params(L.kind)) {
      w.u32(0);
      continue;
    }
    w.u32(2);
    const auto dims = weight_dims(L);
    w.u32(static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) w.u32(d);
    for (std::size_t i = 0; i < L.weight_count; ++i) w.f64(p[L.weight_offset + i]);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(L.bias_count));
    for (std::size_t i = 0; i < L.bias_count; ++i) w.f64(p[L.bias_offset + i]);
  }
  return w.take();
}

Network deserialize_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.match(kWeightsMagic, sizeof(kWeightsMagic))) throw Error(Errc::WeightsParseError, "bad magic");
  if (r.u32() != kWeightsVersion) throw Error(Errc::WeightsParseError, "unsupported weights version");
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 4096) throw Error(Errc::WeightsParseError, "implausible layer count");
  Shape in;
  in.channels = static_cast<int>(r.u32());
  in.height = static_cast<int>(r.u32());
  in.width = static_cast<int>(r.u32());

  struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
  };
  std::vector<LayerSpec> specs;
  std::vector<std::vector<Tensor>> tensors;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint8_t tag = r.u8();
    if (tag < 1 || tag > 6) throw Error(Errc::WeightsParseError, "unknown layer tag " + std::to_string(tag));
    const auto kind = static_cast<LayerKind>(tag);
    const std::uint32_t nt = r.u32();
    if (nt != (has_params(kind) ? 2u : 0u)) throw Error(Errc::WeightsParseError, "unexpected tensor count");
    std::vector<Tensor> ts(nt);
    for (auto& t : ts) {
      const std::uint32_t nd = r.u32();
      if (nd == 0 || nd > 4) throw Error(Errc::WeightsParseError, "bad tensor rank");
      std::size_t n = 1;
      for (std::uint32_t d = 0; d < nd; ++d) {
        t.dims.push_back(r.u32());
        n *= t.dims.back();
        if (n > (std::size_t{1} << 32)) throw Error(Errc::WeightsParseError, "tensor too large");
      }
      t.values.resize(n);
      for (auto& v : t.values) v = r.f64();
    }
    specs.push_back(LayerSpec{kind, nt ? static_cast<int>(ts[0].dims[0]) : 0});
    tensors.push_back(std::move(ts));
  }
  if (!r.done()) throw Error(Errc::WeightsParseError, "trailing bytes");

  Network net = [&] {
    try {
      return Network::build(in, specs);
    } catch (const Error& e) {
      throw Error(Errc::WeightsParseError, e.what());
    }
  }();
  auto p = net.params();
  for (std::size_t l = 0; l < count; ++l) {
    const Layer& L = net.layers()[l];
    if (!has_params(L.kind)) continue;
    const auto& ts = tensors[l];
    if (ts[0].dims != weight_dims(L) || ts[1].values.size() != L.bias_count) {
      throw Error(Errc::WeightsParseError, "tensor shape does not match layer " + std::to_string(l));
    }
    std::copy(ts[0].values.begin(), ts[0].values.end(), p.begin() + static_cast<std::ptrdiff_t>(L.weight_offset));
    std::copy(ts[1].values.begin(), ts[1].values.end(), p.begin() + static_cast<std::ptrdiff_t>(L.bias_offset));
  }
  return net;
}

void save_weights(const std::filesystem::path& path, const Network& net) {
  const auto bytes = serialize_weights(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

Network load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_weights(bytes);
}

std::string report_to_json(const TrainReport& report, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["format"] = "ppdl-train-report";
  j["version"] = 1;
  nlohmann::ordered_json cfg;
  cfg["epochs"] = config.epochs;
  cfg["batch_size"] = config.batch_size;
  cfg["optimizer"] = optimizer_name(config.optimizer.kind);
  cfg["learning_rate"] = config.optimizer.learning_rate;
  cfg["momentum"] = config.optimizer.momentum;
  cfg["beta1"] = config.optimizer.beta1;
  cfg["beta2"] = config.optimizer.beta2;
  cfg["epsilon"] = config.optimizer.epsilon;
  cfg["input_size"] = config.input_size;
  cfg["channels"] = config.channels;
  cfg["seed"] = config.seed;
  cfg["shuffle_each_epoch"] = config.shuffle_each_epoch;
  j["config"] = cfg;
  j["best_epoch"] = report.best_epoch;
  j["optimizer_steps"] = report.optimizer_steps;
  auto& rows = j["epochs"] = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    nlohmann::ordered_json row;
    row["epoch"] = e + 1;
    row["train_loss"] = report.epochs[e].train_loss;
    row["train_accuracy"] = report.epochs[e].train_accuracy;
    row["val_accuracy"] = report.epochs[e].val_accuracy;
    rows.push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const TrainReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,train_accuracy,val_accuracy\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& s = report.epochs[e];
    os << e + 1 << ',' << s.train_loss << ',' << s.train_accuracy << ',' << s.val_accuracy << '\n';
  }
  return os.str();
}

}  // namespace ppdl::nn
