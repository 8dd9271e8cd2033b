#pragma once

#include <cstddef>
#include <vector>

namespace cdpauth {

/// Per-epoch losses of a training run.
struct TrainingHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;

  friend bool operator==(const TrainingHistory&,
                         const TrainingHistory&) = default;
};

}  // namespace cdpauth
