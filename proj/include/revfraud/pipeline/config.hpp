#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "revfraud/ndmath/adam.hpp"
#include "revfraud/ndmath/mlp.hpp"

namespace revfraud::pipeline {

struct TrainConfig {
  std::size_t epochs = 30;
  double split_ratio = 0.8;
  std::size_t batch_size = 64;
  double margin = 1.0;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::size_t text_dim = 768;
  std::vector<std::size_t> text_hidden{256};
  std::vector<std::size_t> attribute_hidden{128};
  std::size_t output_dim = 64;
  double dropout = 0.3;
  bool batch_norm = true;
  ndmath::AdamConfig adam;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  /// Canonical `key = value` text, one key per line, parseable by parse().
  std::string to_text() const;

  /// Flat `key = value` document; '#' starts a comment. Unknown keys and
  /// malformed values are ConfigErrors. Missing keys keep their defaults.
  static TrainConfig parse(std::istream& in);
  static TrainConfig load(const std::string& path);
};

/// One block per width in `hidden`: dropout on the block input, then
/// linear -> batchnorm -> relu; closed by a linear layer to `output_dim`.
/// Dropout or batch norm is omitted when disabled.
std::vector<ndmath::LayerSpec> branch_specs(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                            std::size_t output_dim, double dropout, bool batch_norm);

}  // namespace revfraud::pipeline
