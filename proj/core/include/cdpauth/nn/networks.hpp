#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cdpauth/image.hpp"
#include "cdpauth/nn/layers.hpp"

namespace cdpauth::nn {

/// Packs equally sized images into an N x C x H x W tensor.
Tensor to_batch(std::span<const Image* const> images);
Tensor to_batch(const Image& image);
/// Extracts sample `n` of an N x C x H x W tensor.
Image sample_image(const Tensor& batch, std::size_t n);

struct ImageGeometry {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

ImageGeometry geometry_of(const Image& image);

/// Three conv(3x3)-ReLU-maxpool blocks and a dense head.
class ConvClassifier {
 public:
  struct Config {
    ImageGeometry input;
    std::array<std::size_t, 3> widths{8, 16, 16};
    std::size_t classes = 2;
  };

  ConvClassifier() = default;
  ConvClassifier(const Config& config, std::uint64_t seed);

  Var forward(Graph& g, Var x);
  Var forward(Graph& g, Var x) const;
  /// Flattened output of the last pooling block.
  Var features(Graph& g, Var x) const;
  ParameterList parameters();
  const Config& config() const { return config_; }

 private:
  template <typename Self>
  static Var run(Self& self, Graph& g, Var x, bool with_head);

  Config config_;
  std::array<Conv2d, 3> convs_;
  Dense head_;
};

/// U-Net style image-to-image network: three down blocks, a bottleneck and
/// three up blocks with skip concatenations, 1x1 head and sigmoid output.
/// Odd sizes are handled by resizing each up-sampled map to its skip.
class UNet {
 public:
  struct Config {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t base_width = 4;
  };

  UNet() = default;
  UNet(const Config& config, std::uint64_t seed, const std::string& name);

  Var forward(Graph& g, Var x);
  Var forward(Graph& g, Var x) const;
  ParameterList parameters();
  const Config& config() const { return config_; }

 private:
  template <typename Self>
  static Var run(Self& self, Graph& g, Var x);

  Config config_;
  std::array<Conv2d, 3> down_;
  Conv2d bottleneck_;
  std::array<Conv2d, 3> up_;
  Conv2d head_;
};

/// Strided conv net ending in a single logit.
class Discriminator {
 public:
  struct Config {
    ImageGeometry input;
    std::size_t width = 4;
  };

  Discriminator() = default;
  Discriminator(const Config& config, std::uint64_t seed,
                const std::string& name);

  Var forward(Graph& g, Var x);
  Var forward(Graph& g, Var x) const;
  ParameterList parameters();
  const Config& config() const { return config_; }
  /// Sets the final dense layer to zero, making every logit 0.
  void zero_head();

 private:
  template <typename Self>
  static Var run(Self& self, Graph& g, Var x);

  Config config_;
  std::array<Conv2d, 3> convs_;
  Dense head_;
};

}  // namespace cdpauth::nn
