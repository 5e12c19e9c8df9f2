#include "tempgen/nets.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "tempgen/error.hpp"

namespace tempgen {

namespace {

constexpr std::size_t kGeneratorSignal = 100;  // length after the last dense layer
constexpr std::size_t kImageSide = 28;
constexpr std::size_t kConv1dStride = 4;

enum class Activation { relu, leaky, tanh, linear };

// Centred uniform fan-in scaling.
double init_bound(Activation act, std::size_t fan_in, std::size_t fan_out) {
  const double in = static_cast<double>(fan_in);
  switch (act) {
    case Activation::relu:
      return std::sqrt(6.0 / in);
    case Activation::leaky:
      return std::sqrt(6.0 / ((1.0 + kCriticSlope * kCriticSlope) * in));
    case Activation::tanh:
      return std::sqrt(6.0 / (in + static_cast<double>(fan_out)));
    case Activation::linear:
      return std::sqrt(3.0 / in);
  }
  return 0.0;
}

Tensor uniform(const Shape& shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(shape, std::move(v));
}

void add_dense(ParameterSet& p, const std::string& name, std::size_t in, std::size_t out, Activation act,
               std::mt19937_64& rng) {
  p.add(name + ".weight", uniform({out, in}, init_bound(act, in, out), rng));
  p.add(name + ".bias", Tensor::zeros({out}));
}

void add_conv2d(ParameterSet& p, const std::string& name, std::size_t in, std::size_t out, std::size_t kh,
                std::size_t kw, Activation act, std::mt19937_64& rng) {
  p.add(name + ".weight", uniform({out, in, kh, kw}, init_bound(act, in * kh * kw, out * kh * kw), rng));
  p.add(name + ".bias", Tensor::zeros({out}));
}

BatchNormState add_batch_norm(ParameterSet& p, const std::string& name, std::size_t channels) {
  p.add(name + ".gamma", Tensor::full({channels}, 1.0));
  p.add(name + ".beta", Tensor::zeros({channels}));
  BatchNormState state;
  state.running_mean = p.add_buffer(name + ".running_mean", Tensor::zeros({channels}));
  state.running_var = p.add_buffer(name + ".running_var", Tensor::full({channels}, 1.0));
  return state;
}

Tensor apply_dense(const ParameterSet& p, const std::string& name, const Tensor& x) {
  return dense(x, p.at(name + ".weight"), p.at(name + ".bias"));
}

Tensor apply_conv2d(const ParameterSet& p, const std::string& name, const Tensor& x,
                    const Conv2dGeometry& geom = {}) {
  return add_channel(conv2d(x, p.at(name + ".weight"), geom), p.at(name + ".bias"));
}

void record(ShapeTrace* trace, const Tensor& t) {
  if (trace) trace->push_back(t.shape());
}

void require_sample_batch(const char* who, const Tensor& x, const Tensor& labels) {
  const Shape expected{x.rank() ? x.dim(0) : 0, kHoursPerDay, kRegionCells, kRegionCells};
  if (x.shape() != expected) {
    throw ShapeError(std::string(who) + ": expected input (N, 24, 8, 8), got " + to_string(x.shape()));
  }
  if (labels.shape() != Shape{x.dim(0), kLabelDim}) {
    throw ShapeError(std::string(who) + ": expected labels (N, 15), got " + to_string(labels.shape()));
  }
}

}  // namespace

// --- configuration --------------------------------------------------------------------

NetConfig NetConfig::paper() { return NetConfig{}; }

NetConfig NetConfig::toy() {
  NetConfig c;
  c.generator.fc1 = 64;
  c.generator.fc2 = 64;
  c.generator.convt = {4, 4, 8, 16};
  c.generator.conv = {2, 4, 8, 8};
  c.spatial.conv = 8;
  c.spatial.fc_in = 32;
  c.spatial.fc1 = 48;
  c.spatial.fc2 = 16;
  c.temporal.conv1 = 8;
  c.temporal.conv2 = 4;
  c.temporal.fc1 = 64;
  c.temporal.fc2 = 64;
  c.temporal.fc3 = 32;
  return c;
}

std::string NetConfig::to_json() const {
  nlohmann::ordered_json j;
  j["generator"] = {{"fc1", generator.fc1},
                    {"fc2", generator.fc2},
                    {"convt", generator.convt},
                    {"conv", generator.conv}};
  j["spatial"] = {{"conv", spatial.conv}, {"fc_in", spatial.fc_in}, {"fc1", spatial.fc1}, {"fc2", spatial.fc2}};
  j["temporal"] = {{"conv1", temporal.conv1}, {"conv2", temporal.conv2}, {"fc1", temporal.fc1},
                   {"fc2", temporal.fc2},     {"fc3", temporal.fc3}};
  j["embedding"] = {{"month", kMonthEmbedding},
                    {"region", kRegionEmbedding},
                    {"period", kPeriodEmbedding},
                    {"region_scale", kRegionInputScale},
                    {"period_scale", kPeriodInputScale}};
  j["init"] = "centred uniform: relu sqrt(6/fan_in), leaky_relu(0.2) sqrt(6/(1.04 fan_in)), "
              "tanh sqrt(6/(fan_in+fan_out)), linear sqrt(3/fan_in); zero biases";
  j["batch_norm"] = {{"momentum", 0.1}, {"eps", 1e-5}};
  return j.dump(2);
}

NetConfig NetConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetConfig c;
    const auto& g = j.at("generator");
    g.at("fc1").get_to(c.generator.fc1);
    g.at("fc2").get_to(c.generator.fc2);
    g.at("convt").get_to(c.generator.convt);
    g.at("conv").get_to(c.generator.conv);
    const auto& s = j.at("spatial");
    s.at("conv").get_to(c.spatial.conv);
    s.at("fc_in").get_to(c.spatial.fc_in);
    s.at("fc1").get_to(c.spatial.fc1);
    s.at("fc2").get_to(c.spatial.fc2);
    const auto& t = j.at("temporal");
    t.at("conv1").get_to(c.temporal.conv1);
    t.at("conv2").get_to(c.temporal.conv2);
    t.at("fc1").get_to(c.temporal.fc1);
    t.at("fc2").get_to(c.temporal.fc2);
    t.at("fc3").get_to(c.temporal.fc3);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid network configuration: ") + e.what());
  }
}

// --- labels -----------------------------------------------------------------------------

Tensor label_tensor(const std::vector<ConditionLabel>& labels) {
  std::vector<double> v;
  v.reserve(labels.size() * kLabelDim);
  for (const auto& label : labels) {
    const auto raw = label.raw();
    ConditionLabel::from_raw(raw);  // validates the one-hot block
    v.insert(v.end(), raw.begin(), raw.end());
  }
  return Tensor::from({labels.size(), kLabelDim}, std::move(v));
}

LabelEmbedding::LabelEmbedding(ParameterSet& params, const std::string& prefix, std::mt19937_64& rng)
    : prefix_(prefix) {
  add_dense(params, prefix + ".month", 12, kMonthEmbedding, Activation::leaky, rng);
  add_dense(params, prefix + ".region", 2, kRegionEmbedding, Activation::leaky, rng);
  add_dense(params, prefix + ".period", 1, kPeriodEmbedding, Activation::leaky, rng);
}

Tensor LabelEmbedding::forward(const ParameterSet& params, const Tensor& labels) const {
  if (labels.rank() != 2 || labels.dim(1) != kLabelDim) {
    throw ShapeError("label embedding: expected (N, 15), got " + to_string(labels.shape()));
  }
  const Tensor month = slice(labels, 1, 0, 12);
  const Tensor region = scale(slice(labels, 1, 12, 2), kRegionInputScale);
  const Tensor period = scale(slice(labels, 1, 14, 1), kPeriodInputScale);
  return concat({leaky_relu(apply_dense(params, prefix_ + ".month", month), kCriticSlope),
                 leaky_relu(apply_dense(params, prefix_ + ".region", region), kCriticSlope),
                 leaky_relu(apply_dense(params, prefix_ + ".period", period), kCriticSlope)},
                1);
}

Tensor hourly_differences(const Tensor& x) {
  if (x.rank() < 2 || x.dim(1) != kHoursPerDay) {
    throw ShapeError("hourly_differences: expected 24 frames on axis 1, got " + to_string(x.shape()));
  }
  return sub(slice(x, 1, 1, kHoursPerDay - 1), slice(x, 1, 0, kHoursPerDay - 1));
}

// --- generator ------------------------------------------------------------------------------

Generator::Generator(const GeneratorWidths& widths, std::uint64_t seed) : widths_(widths) {
  std::mt19937_64 rng(seed);
  embedding_ = LabelEmbedding(params_, "G.embed", rng);
  add_dense(params_, "G.fc1", kNoiseDim + kEmbeddingDim, widths.fc1, Activation::relu, rng);
  add_dense(params_, "G.fc2", widths.fc1, widths.fc2, Activation::relu, rng);
  add_dense(params_, "G.fc3", widths.fc2, kGeneratorSignal, Activation::relu, rng);

  const std::array<std::size_t, 4> kernels{3, 3, 5, 5};
  std::size_t in = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "G.convt" + std::to_string(i + 1);
    const std::size_t out = widths.convt[i];
    params_.add(name + ".weight",
                uniform({in, out, kernels[i]}, init_bound(Activation::relu, in * kernels[i], out * kernels[i]), rng));
    params_.add(name + ".bias", Tensor::zeros({out}));
    norms_[name + ".bn"] = add_batch_norm(params_, name + ".bn", out);
    in = out;
  }
  params_.add("G.conv1d.weight", uniform({kImageSide, in, 1}, init_bound(Activation::linear, in, kImageSide), rng));
  params_.add("G.conv1d.bias", Tensor::zeros({kImageSide}));

  in = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "G.conv" + std::to_string(i + 1);
    const std::size_t out = widths.conv[i];
    add_conv2d(params_, name, in, out, 5, 5, i == 0 ? Activation::relu : Activation::tanh, rng);
    norms_[name + ".bn"] = add_batch_norm(params_, name + ".bn", out);
    in = out;
  }
  add_conv2d(params_, "G.out", in, kHoursPerDay, 5, 5, Activation::linear, rng);
}

Tensor Generator::forward(const Tensor& z, const Tensor& labels, bool training, ShapeTrace* trace) {
  if (z.rank() != 2 || z.dim(1) != kNoiseDim) {
    throw ShapeError("generator: noise must be (N, 100), got " + to_string(z.shape()));
  }
  if (labels.shape() != Shape{z.dim(0), kLabelDim}) {
    throw ShapeError("generator: expected labels (N, 15), got " + to_string(labels.shape()));
  }
  Tensor h = concat({z, embedding_.forward(params_, labels)}, 1);
  record(trace, h);
  h = relu(apply_dense(params_, "G.fc1", h));
  record(trace, h);
  h = relu(apply_dense(params_, "G.fc2", h));
  record(trace, h);
  h = relu(apply_dense(params_, "G.fc3", h));
  record(trace, h);
  h = unsqueeze(h, 1);
  record(trace, h);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "G.convt" + std::to_string(i + 1);
    h = add_channel(conv_transpose1d(h, params_.at(name + ".weight")), params_.at(name + ".bias"));
    h = relu(batch_norm(h, params_.at(name + ".bn.gamma"), params_.at(name + ".bn.beta"),
                        norms_.at(name + ".bn"), training));
    record(trace, h);
  }
  h = add_channel(conv1d(h, params_.at("G.conv1d.weight"), kConv1dStride), params_.at("G.conv1d.bias"));
  record(trace, h);
  h = unsqueeze(h, 1);
  record(trace, h);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string name = "G.conv" + std::to_string(i + 1);
    h = apply_conv2d(params_, name, h);
    h = batch_norm(h, params_.at(name + ".bn.gamma"), params_.at(name + ".bn.beta"), norms_.at(name + ".bn"),
                   training);
    h = i == 0 ? relu(h) : tempgen::tanh(h);
    record(trace, h);
  }
  h = apply_conv2d(params_, "G.out", h);
  record(trace, h);
  return h;
}

TemperatureSample Generator::generate(const std::vector<double>& z, const ConditionLabel& label) {
  if (z.size() != kNoiseDim) {
    throw ShapeError("generator: noise must have 100 entries, got " + std::to_string(z.size()));
  }
  NoGradGuard no_grad;
  const Tensor out = forward(Tensor::from({1, kNoiseDim}, z), label_tensor({label}), false);
  return tensor_samples(out, {label}).front();
}

std::size_t Generator::table_parameter_count() const {
  return params_.parameter_count() - params_.parameter_count("G.embed.");
}

// --- critics ------------------------------------------------------------------------------------

SpatialCritic::SpatialCritic(const SpatialCriticWidths& widths, std::uint64_t seed) : widths_(widths) {
  std::mt19937_64 rng(seed);
  embedding_ = LabelEmbedding(params_, "Ds.embed", rng);
  const std::size_t c = widths.conv;
  add_conv2d(params_, "Ds.conv1", kHoursPerDay, c, 3, 3, Activation::leaky, rng);
  for (int i = 2; i <= 5; ++i) add_conv2d(params_, "Ds.conv" + std::to_string(i), c, c, 3, 3, Activation::leaky, rng);
  add_conv2d(params_, "Ds.conv6", c, c, 2, 2, Activation::leaky, rng);
  add_dense(params_, "Ds.fc_in", c, widths.fc_in, Activation::leaky, rng);
  add_dense(params_, "Ds.fc1", widths.fc_in + kEmbeddingDim, widths.fc1, Activation::leaky, rng);
  add_dense(params_, "Ds.fc2", widths.fc1, widths.fc2, Activation::leaky, rng);
  add_dense(params_, "Ds.out", widths.fc2, 1, Activation::linear, rng);
}

Tensor SpatialCritic::forward(const Tensor& x, const Tensor& labels, ShapeTrace* trace) const {
  require_sample_batch("spatial critic", x, labels);
  record(trace, x);
  Tensor h = x;
  for (int i = 1; i <= 6; ++i) {
    const Conv2dGeometry geom = i <= 2 ? Conv2dGeometry{1, 1, 1, 1} : Conv2dGeometry{};
    h = leaky_relu(apply_conv2d(params_, "Ds.conv" + std::to_string(i), h, geom), kCriticSlope);
    record(trace, h);
  }
  h = flatten(h);
  record(trace, h);
  h = leaky_relu(apply_dense(params_, "Ds.fc_in", h), kCriticSlope);
  record(trace, h);
  h = concat({h, embedding_.forward(params_, labels)}, 1);
  record(trace, h);
  h = leaky_relu(apply_dense(params_, "Ds.fc1", h), kCriticSlope);
  record(trace, h);
  h = leaky_relu(apply_dense(params_, "Ds.fc2", h), kCriticSlope);
  record(trace, h);
  h = apply_dense(params_, "Ds.out", h);
  record(trace, h);
  return h;
}

double SpatialCritic::score(const TemperatureSample& sample, const ConditionLabel& label) const {
  NoGradGuard no_grad;
  return forward(sample_tensor({sample}), label_tensor({label})).item();
}

TemporalCritic::TemporalCritic(const TemporalCriticWidths& widths, std::uint64_t seed) : widths_(widths) {
  std::mt19937_64 rng(seed);
  embedding_ = LabelEmbedding(params_, "Dt.embed", rng);
  add_conv2d(params_, "Dt.conv1", kHoursPerDay - 1, widths.conv1, 3, 3, Activation::leaky, rng);
  add_conv2d(params_, "Dt.conv2", widths.conv1, widths.conv2, 3, 3, Activation::leaky, rng);
  const std::size_t flat = widths.conv2 * 4 * 4;
  add_dense(params_, "Dt.fc1", flat + kEmbeddingDim, widths.fc1, Activation::leaky, rng);
  add_dense(params_, "Dt.fc2", widths.fc1, widths.fc2, Activation::leaky, rng);
  add_dense(params_, "Dt.fc3", widths.fc2, widths.fc3, Activation::leaky, rng);
  add_dense(params_, "Dt.out", widths.fc3, 1, Activation::linear, rng);
}

Tensor TemporalCritic::forward(const Tensor& x, const Tensor& labels, ShapeTrace* trace) const {
  require_sample_batch("temporal critic", x, labels);
  record(trace, x);
  Tensor h = hourly_differences(x);
  record(trace, h);
  h = leaky_relu(apply_conv2d(params_, "Dt.conv1", h), kCriticSlope);
  record(trace, h);
  h = leaky_relu(apply_conv2d(params_, "Dt.conv2", h), kCriticSlope);
  record(trace, h);
  h = flatten(h);
  record(trace, h);
  h = concat({h, embedding_.forward(params_, labels)}, 1);
  record(trace, h);
  for (const char* layer : {"Dt.fc1", "Dt.fc2", "Dt.fc3"}) {
    h = leaky_relu(apply_dense(params_, layer, h), kCriticSlope);
    record(trace, h);
  }
  h = apply_dense(params_, "Dt.out", h);
  record(trace, h);
  return h;
}

double TemporalCritic::score(const TemperatureSample& sample, const ConditionLabel& label) const {
  NoGradGuard no_grad;
  return forward(sample_tensor({sample}), label_tensor({label})).item();
}

// --- conversions ---------------------------------------------------------------------------------

Tensor sample_tensor(const std::vector<TemperatureSample>& samples) {
  std::vector<double> v;
  v.reserve(samples.size() * kSampleValues);
  for (const auto& s : samples) {
    if (s.values.size() != kSampleValues) {
      throw ShapeError("sample has " + std::to_string(s.values.size()) + " values, expected 1536");
    }
    v.insert(v.end(), s.values.begin(), s.values.end());
  }
  return Tensor::from({samples.size(), kHoursPerDay, kRegionCells, kRegionCells}, std::move(v));
}

std::vector<TemperatureSample> tensor_samples(const Tensor& x, const std::vector<ConditionLabel>& labels) {
  if (x.rank() != 4 || x.dim(0) != labels.size() || x.numel() != labels.size() * kSampleValues) {
    throw ShapeError("tensor_samples: shape " + to_string(x.shape()) + " does not hold " +
                     std::to_string(labels.size()) + " samples");
  }
  std::vector<TemperatureSample> out(labels.size());
  const auto d = x.data();
  for (std::size_t n = 0; n < labels.size(); ++n) {
    out[n].values.assign(d.begin() + n * kSampleValues, d.begin() + (n + 1) * kSampleValues);
    out[n].label = labels[n];
  }
  return out;
}

}  // namespace tempgen
