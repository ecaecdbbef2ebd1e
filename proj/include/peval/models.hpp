#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "peval/ingest.hpp"
#include "peval/kernels.hpp"
#include "peval/network.hpp"

namespace peval {

// 0.05 for Sigmoid/Tanh, 0.005 for ReLU/Linear.
double default_learning_rate(Activation activation) noexcept;

struct TrainConfig {
  std::size_t epochs = 0;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  ModelSpec spec;
  ParameterSet<double> parameters;
  std::vector<double> loss_curve;  // mean training MSE at the start of each epoch
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on the training MSE for exactly
// `config.epochs` steps, starting from init_parameters(spec, config.seed).
// Throws Errc::NonFiniteLoss (index = epoch) on divergence.
TrainedModel train(const ModelSpec& spec, const TrainConfig& config, const WindowedDataset& data);

struct PredictionPair {
  double predicted = 0.0;
  double actual = 0.0;
};

std::vector<PredictionPair> predict_series(const TrainedModel& model, const WindowedDataset& data);
Eigen::VectorXd predict(const TrainedModel& model, const Eigen::MatrixXd& inputs);

// Text format:
//   peval-model 1
//   architecture <tag>
//   window_length <L>
//   hidden_nodes <N>
//   activation <tag>
//   seed <u64>
//   parameters <count>
//   <one value per line, %.17g, flattening order>
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);

}  // namespace peval
