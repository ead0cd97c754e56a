#pragma once

#include <cstddef>
#include <vector>

namespace tuplex {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;  // epoch 0 is the initialization
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

}  // namespace tuplex
