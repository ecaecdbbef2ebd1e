#include "peval/models.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace peval {

std::string_view architecture_tag(Architecture a) noexcept {
  switch (a) {
    case Architecture::MLP: return "mlp";
    case Architecture::RNN: return "rnn";
    case Architecture::LSTM: return "lstm";
    case Architecture::GRU: return "gru";
    case Architecture::BiRNN: return "birnn";
    case Architecture::BiLSTM: return "bilstm";
  }
  return "mlp";
}

std::optional<Architecture> parse_architecture(std::string_view tag) noexcept {
  for (Architecture a : kAllArchitectures)
    if (architecture_tag(a) == tag) return a;
  return std::nullopt;
}

std::string_view activation_tag(Activation a) noexcept {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
  }
  return "linear";
}

std::optional<Activation> parse_activation(std::string_view tag) noexcept {
  for (Activation a : kAllActivations)
    if (activation_tag(a) == tag) return a;
  return std::nullopt;
}

void validate(const ModelSpec& spec) {
  if (spec.window_length < 1 || spec.hidden_nodes < 1)
    throw Error(Errc::BadSpec, "window length and hidden nodes must be at least 1");
}

std::vector<BlockShape> parameter_layout(const ModelSpec& spec) {
  validate(spec);
  const auto L = static_cast<Eigen::Index>(spec.window_length);
  const auto N = static_cast<Eigen::Index>(spec.hidden_nodes);
  const auto G = static_cast<Eigen::Index>(gate_count(spec.architecture));
  std::vector<BlockShape> out;
  auto cell = [&](const std::string& prefix) {
    out.push_back({prefix + "Wx", G * N, 1, false});
    out.push_back({prefix + "Wh", G * N, N, false});
    out.push_back({prefix + "b", G * N, 1, true});
  };
  switch (spec.architecture) {
    case Architecture::MLP:
      out.push_back({"W1", N, L, false});
      out.push_back({"b1", N, 1, true});
      out.push_back({"W2", 1, N, false});
      out.push_back({"b2", 1, 1, true});
      return out;
    case Architecture::RNN:
    case Architecture::LSTM:
    case Architecture::GRU:
      cell("");
      out.push_back({"Wo", 1, N, false});
      break;
    case Architecture::BiRNN:
    case Architecture::BiLSTM:
      cell("fwd.");
      cell("bwd.");
      out.push_back({"Wo", 1, 2 * N, false});
      break;
  }
  out.push_back({"bo", 1, 1, true});
  return out;
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& s : parameter_layout(spec)) n += static_cast<std::size_t>(s.rows * s.cols);
  return n;
}

double default_learning_rate(Activation activation) noexcept {
  return activation == Activation::Sigmoid || activation == Activation::Tanh ? 0.05 : 0.005;
}

TrainedModel train(const ModelSpec& spec, const TrainConfig& config, const WindowedDataset& data) {
  if (data.window_length != spec.window_length)
    throw Error(Errc::ShapeMismatch, "dataset window length does not match the model");
  if (data.size() == 0) throw Error(Errc::EmptyInput, "training dataset is empty");
  if (!(config.learning_rate > 0.0)) throw Error(Errc::BadSpec, "learning rate must be positive");

  TrainedModel model{spec, init_parameters<double>(spec, config.seed), {}, config.seed};
  model.loss_curve.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto step = backward_batch<double>(spec, model.parameters, data.inputs, data.targets);
    if (!std::isfinite(step.loss) || !step.gradient.all_finite())
      throw Error(Errc::NonFiniteLoss, "training loss became non-finite at epoch " + std::to_string(epoch), epoch);
    model.loss_curve.push_back(step.loss);
    model.parameters.axpy(-config.learning_rate, step.gradient);
    if (!model.parameters.all_finite())
      throw Error(Errc::NonFiniteLoss, "parameters became non-finite at epoch " + std::to_string(epoch), epoch);
  }
  return model;
}

Eigen::VectorXd predict(const TrainedModel& model, const Eigen::MatrixXd& inputs) {
  return forward_batch<double>(model.spec, model.parameters, inputs);
}

std::vector<PredictionPair> predict_series(const TrainedModel& model, const WindowedDataset& data) {
  if (data.window_length != model.spec.window_length)
    throw Error(Errc::ShapeMismatch, "dataset window length does not match the model");
  if (data.size() == 0) throw Error(Errc::EmptyInput, "prediction dataset is empty");
  const Eigen::VectorXd yhat = predict(model, data.inputs);
  std::vector<PredictionPair> out(data.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = {yhat[static_cast<Eigen::Index>(k)], data.targets[static_cast<Eigen::Index>(k)]};
  return out;
}

void write_model(std::ostream& out, const TrainedModel& model) {
  const Eigen::VectorXd flat = model.parameters.flat();
  out << "peval-model 1\n"
      << "architecture " << architecture_tag(model.spec.architecture) << '\n'
      << "window_length " << model.spec.window_length << '\n'
      << "hidden_nodes " << model.spec.hidden_nodes << '\n'
      << "activation " << activation_tag(model.spec.activation) << '\n'
      << "seed " << model.seed << '\n'
      << "parameters " << flat.size() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", flat[i]);
    out << buf;
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing model");
}

TrainedModel read_model(std::istream& in) {
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw Error(Errc::ConfigError, std::string("model file: expected '") + key + "'");
  };
  std::string token;
  expect("peval-model");
  int version = 0;
  if (!(in >> version) || version != 1) throw Error(Errc::ConfigError, "model file: unsupported version");
  TrainedModel model;
  expect("architecture");
  in >> token;
  auto arch = parse_architecture(token);
  if (!arch) throw Error(Errc::ConfigError, "model file: unknown architecture " + token);
  model.spec.architecture = *arch;
  expect("window_length");
  in >> model.spec.window_length;
  expect("hidden_nodes");
  in >> model.spec.hidden_nodes;
  expect("activation");
  in >> token;
  auto activation = parse_activation(token);
  if (!activation) throw Error(Errc::ConfigError, "model file: unknown activation " + token);
  model.spec.activation = *activation;
  expect("seed");
  in >> model.seed;
  expect("parameters");
  Eigen::Index count = 0;
  in >> count;
  if (!in) throw Error(Errc::ConfigError, "model file: truncated header");
  model.parameters = ParameterSet<double>(model.spec);
  if (count != model.parameters.size()) throw Error(Errc::ConfigError, "model file: parameter count mismatch");
  Eigen::VectorXd flat(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> token)) throw Error(Errc::ConfigError, "model file: truncated parameters");
    flat[i] = std::strtod(token.c_str(), nullptr);
  }
  model.parameters.assign_flat(flat);
  return model;
}

}  // namespace peval
