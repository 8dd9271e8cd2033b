#include "cdpauth/nn/networks.hpp"

#include "cdpauth/error.hpp"
#include "cdpauth/rng.hpp"

namespace cdpauth::nn {
namespace {

std::size_t strided_size(std::size_t n) { return (n + 2 - 3) / 2 + 1; }

}  // namespace

Tensor to_batch(std::span<const Image* const> images) {
  if (images.empty()) throw ShapeError("to_batch: no images");
  const Image& first = *images.front();
  Tensor out({images.size(), first.channels(), first.height(), first.width()});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i]->same_geometry(first)) {
      throw ShapeError("to_batch: images differ in geometry");
    }
    std::copy(images[i]->values().begin(), images[i]->values().end(),
              out.data() + i * first.size());
  }
  return out;
}

Tensor to_batch(const Image& image) {
  const Image* ptr = &image;
  return to_batch(std::span<const Image* const>(&ptr, 1));
}

Image sample_image(const Tensor& batch, std::size_t n) {
  if (batch.rank() != 4 || n >= batch.dim(0)) {
    throw ShapeError("sample_image: bad batch " + to_string(batch.shape()));
  }
  const std::size_t per = batch.size() / batch.dim(0);
  std::vector<double> values(batch.data() + n * per,
                             batch.data() + (n + 1) * per);
  return Image(batch.dim(1), batch.dim(2), batch.dim(3), std::move(values));
}

ImageGeometry geometry_of(const Image& image) {
  return {image.channels(), image.height(), image.width()};
}

ConvClassifier::ConvClassifier(const Config& config, std::uint64_t seed)
    : config_(config) {
  std::size_t channels = config.input.channels;
  std::size_t h = config.input.height;
  std::size_t w = config.input.width;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i] = Conv2d("classifier.conv" + std::to_string(i), channels,
                       config.widths[i], 3, {1, 1},
                       derive_seed(seed, "classifier.conv", i));
    channels = config.widths[i];
    h /= 2;
    w /= 2;
  }
  if (h == 0 || w == 0) {
    throw InvalidInput("classifier input " + std::to_string(config.input.height) +
                       "x" + std::to_string(config.input.width) +
                       " is too small for three pooling stages");
  }
  head_ = Dense("classifier.head", channels * h * w, config.classes,
                derive_seed(seed, "classifier.head"));
}

template <typename Self>
Var ConvClassifier::run(Self& self, Graph& g, Var x, bool with_head) {
  Var h = x;
  for (std::size_t i = 0; i < 3; ++i) {
    Graph::Scope scope(g, "classifier.block" + std::to_string(i));
    h = max_pool2d(g, relu(g, self.convs_[i](g, h)), 2);
  }
  h = flatten(g, h);
  if (!with_head) return h;
  Graph::Scope scope(g, "classifier.head");
  return self.head_(g, h);
}

Var ConvClassifier::forward(Graph& g, Var x) { return run(*this, g, x, true); }

Var ConvClassifier::forward(Graph& g, Var x) const {
  return run(*this, g, x, true);
}

Var ConvClassifier::features(Graph& g, Var x) const {
  return run(*this, g, x, false);
}

ParameterList ConvClassifier::parameters() {
  ParameterList out;
  for (auto& c : convs_) c.append_parameters(out);
  head_.append_parameters(out);
  return out;
}

UNet::UNet(const Config& config, std::uint64_t seed, const std::string& name)
    : config_(config) {
  const std::size_t w = config.base_width;
  const std::array<std::size_t, 3> widths{w, 2 * w, 4 * w};
  std::size_t in = config.in_channels;
  for (std::size_t i = 0; i < 3; ++i) {
    down_[i] = Conv2d(name + ".down" + std::to_string(i), in, widths[i], 3,
                      {1, 1}, derive_seed(seed, name + ".down", i));
    in = widths[i];
  }
  bottleneck_ = Conv2d(name + ".bottleneck", widths[2], widths[2], 3, {1, 1},
                       derive_seed(seed, name + ".bottleneck"));
  // up_[0] works at the coarsest level.
  up_[0] = Conv2d(name + ".up0", 2 * widths[2], widths[1], 3, {1, 1},
                  derive_seed(seed, name + ".up", 0));
  up_[1] = Conv2d(name + ".up1", 2 * widths[1], widths[0], 3, {1, 1},
                  derive_seed(seed, name + ".up", 1));
  up_[2] = Conv2d(name + ".up2", 2 * widths[0], widths[0], 3, {1, 1},
                  derive_seed(seed, name + ".up", 2));
  head_ = Conv2d(name + ".head", widths[0], config.out_channels, 1, {1, 0},
                 derive_seed(seed, name + ".head"));
}

Var UNet::forward(Graph& g, Var x) { return run(*this, g, x); }

Var UNet::forward(Graph& g, Var x) const { return run(*this, g, x); }

template <typename Self>
Var UNet::run(Self& self, Graph& g, Var x) {
  std::array<Var, 3> skips;
  Var h = x;
  for (std::size_t i = 0; i < 3; ++i) {
    Graph::Scope scope(g, "down" + std::to_string(i));
    skips[i] = relu(g, self.down_[i](g, h));
    h = max_pool2d(g, skips[i], 2);
  }
  {
    Graph::Scope scope(g, "bottleneck");
    h = relu(g, self.bottleneck_(g, h));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    Graph::Scope scope(g, "up" + std::to_string(i));
    const Var skip = skips[2 - i];
    const Tensor& sv = g.value(skip);
    h = upsample_nearest(g, h, sv.dim(2), sv.dim(3));
    h = relu(g, self.up_[i](g, concat_channels(g, h, skip)));
  }
  Graph::Scope scope(g, "head");
  return sigmoid(g, self.head_(g, h));
}

ParameterList UNet::parameters() {
  ParameterList out;
  for (auto& c : down_) c.append_parameters(out);
  bottleneck_.append_parameters(out);
  for (auto& c : up_) c.append_parameters(out);
  head_.append_parameters(out);
  return out;
}

Discriminator::Discriminator(const Config& config, std::uint64_t seed,
                             const std::string& name)
    : config_(config) {
  const std::size_t w = config.width;
  const std::array<std::size_t, 3> widths{w, 2 * w, 2 * w};
  std::size_t in = config.input.channels;
  std::size_t h = config.input.height;
  std::size_t wd = config.input.width;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i] = Conv2d(name + ".conv" + std::to_string(i), in, widths[i], 3,
                       {2, 1}, derive_seed(seed, name + ".conv", i));
    in = widths[i];
    h = strided_size(h);
    wd = strided_size(wd);
  }
  head_ = Dense(name + ".head", in * h * wd, 1, derive_seed(seed, name + ".head"));
}

Var Discriminator::forward(Graph& g, Var x) { return run(*this, g, x); }

Var Discriminator::forward(Graph& g, Var x) const { return run(*this, g, x); }

template <typename Self>
Var Discriminator::run(Self& self, Graph& g, Var x) {
  Var h = x;
  for (std::size_t i = 0; i < 3; ++i) {
    Graph::Scope scope(g, "block" + std::to_string(i));
    h = relu(g, self.convs_[i](g, h));
  }
  Graph::Scope scope(g, "head");
  return self.head_(g, flatten(g, h));
}

ParameterList Discriminator::parameters() {
  ParameterList out;
  for (auto& c : convs_) c.append_parameters(out);
  head_.append_parameters(out);
  return out;
}

void Discriminator::zero_head() {
  head_.weight().value().fill(0.0);
  head_.bias().value().fill(0.0);
}

}  // namespace cdpauth::nn
