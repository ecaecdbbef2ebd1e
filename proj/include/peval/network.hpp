#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "peval/error.hpp"

namespace peval {

// Declaration order is the tie-break order used when ranking runs.
enum class Architecture { MLP, RNN, LSTM, GRU, BiRNN, BiLSTM };
enum class Activation { Linear, Sigmoid, Tanh, ReLU };

inline constexpr Architecture kAllArchitectures[] = {Architecture::MLP,  Architecture::RNN,   Architecture::LSTM,
                                                     Architecture::GRU,  Architecture::BiRNN, Architecture::BiLSTM};
inline constexpr Activation kAllActivations[] = {Activation::Linear, Activation::Sigmoid, Activation::Tanh,
                                                 Activation::ReLU};

std::string_view architecture_tag(Architecture a) noexcept;
std::optional<Architecture> parse_architecture(std::string_view tag) noexcept;
std::string_view activation_tag(Activation a) noexcept;
std::optional<Activation> parse_activation(std::string_view tag) noexcept;

inline bool is_bidirectional(Architecture a) noexcept {
  return a == Architecture::BiRNN || a == Architecture::BiLSTM;
}

struct ModelSpec {
  Architecture architecture = Architecture::MLP;
  std::size_t window_length = 1;
  std::size_t hidden_nodes = 1;
  Activation activation = Activation::Tanh;
};

struct BlockShape {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool is_bias = false;
};

// Blocks in flattening order; each block flattens column-major.
//   MLP:          W1 (N x L), b1 (N), W2 (1 x N), b2 (1)
//   RNN/LSTM/GRU: Wx (gN x 1), Wh (gN x N), b (gN), Wo (1 x N), bo (1)
//   BiRNN/BiLSTM: forward Wx, Wh, b; backward Wx, Wh, b; Wo (1 x 2N), bo (1)
// with g = 1 (RNN), 4 (LSTM gates i, f, g, o), 3 (GRU gates z, r, n).
std::vector<BlockShape> parameter_layout(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);
void validate(const ModelSpec& spec);

inline constexpr std::size_t gate_count(Architecture a) noexcept {
  switch (a) {
    case Architecture::LSTM:
    case Architecture::BiLSTM: return 4;
    case Architecture::GRU: return 3;
    default: return 1;
  }
}

template <typename Scalar>
class ParameterSet {
 public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ParameterSet() = default;

  // All-zero parameters with the layout of `spec`.
  explicit ParameterSet(const ModelSpec& spec) : layout_(parameter_layout(spec)) {
    blocks_.reserve(layout_.size());
    for (const auto& shape : layout_) blocks_.push_back(MatrixType::Zero(shape.rows, shape.cols));
  }

  std::size_t block_count() const noexcept { return blocks_.size(); }
  MatrixType& block(std::size_t i) { return blocks_[i]; }
  const MatrixType& block(std::size_t i) const { return blocks_[i]; }
  const std::vector<BlockShape>& layout() const noexcept { return layout_; }

  Eigen::Index size() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks_) n += b.size();
    return n;
  }

  VectorType flat() const {
    VectorType out(size());
    Eigen::Index pos = 0;
    for (const auto& b : blocks_) {
      out.segment(pos, b.size()) = b.reshaped();
      pos += b.size();
    }
    return out;
  }

  void assign_flat(const Eigen::Ref<const VectorType>& values) {
    if (values.size() != size()) throw Error(Errc::ShapeMismatch, "flat parameter vector has the wrong length");
    Eigen::Index pos = 0;
    for (auto& b : blocks_) {
      b.reshaped() = values.segment(pos, b.size());
      pos += b.size();
    }
  }

  bool all_finite() const {
    for (const auto& b : blocks_)
      if (!b.array().isFinite().all()) return false;
    return true;
  }

  void set_zero() {
    for (auto& b : blocks_) b.setZero();
  }

  // this += alpha * other
  void axpy(Scalar alpha, const ParameterSet& other) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += alpha * other.blocks_[i];
  }

  template <typename NewScalar>
  ParameterSet<NewScalar> cast() const {
    ParameterSet<NewScalar> out;
    out.layout_ = layout_;
    for (const auto& b : blocks_) out.blocks_.push_back(b.template cast<NewScalar>());
    return out;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.blocks_.size() != b.blocks_.size()) return false;
    for (std::size_t i = 0; i < a.blocks_.size(); ++i)
      if (a.blocks_[i].rows() != b.blocks_[i].rows() || a.blocks_[i].cols() != b.blocks_[i].cols() ||
          a.blocks_[i] != b.blocks_[i])
        return false;
    return true;
  }

 private:
  template <typename>
  friend class ParameterSet;

  std::vector<BlockShape> layout_;
  std::vector<MatrixType> blocks_;
};

// Uniform double in [0, 1) from the top 53 bits; std::uniform_real_distribution
// is implementation-defined, this is not.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Weights ~ U(-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))) per block,
// filled in flattening order from mt19937_64(seed). Biases are zero except
// the LSTM forget-gate rows, which start at 1.
template <typename Scalar>
ParameterSet<Scalar> init_parameters(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  ParameterSet<Scalar> params(spec);
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(spec.hidden_nodes);
  const bool lstm = spec.architecture == Architecture::LSTM || spec.architecture == Architecture::BiLSTM;
  for (std::size_t i = 0; i < params.block_count(); ++i) {
    const BlockShape& shape = params.layout()[i];
    auto& block = params.block(i);
    if (shape.is_bias) {
      if (lstm && shape.rows == 4 * n) block.middleRows(n, n).setOnes();
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(shape.rows + shape.cols));
    for (Eigen::Index k = 0; k < block.size(); ++k)
      block.reshaped()[k] = static_cast<Scalar>((2.0 * unit_uniform(rng) - 1.0) * bound);
  }
  return params;
}

namespace act {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Mat<Scalar> sigmoid(const Mat<Scalar>& x) {
  using std::exp;
  return x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + exp(-v)); });
}

template <typename Scalar>
Mat<Scalar> apply(Activation kind, const Mat<Scalar>& x) {
  using std::tanh;
  switch (kind) {
    case Activation::Linear: return x;
    case Activation::Sigmoid: return sigmoid<Scalar>(x);
    case Activation::Tanh: return x.unaryExpr([](Scalar v) { return tanh(v); });
    case Activation::ReLU: return x.cwiseMax(Scalar(0));
  }
  return x;
}

// Derivative evaluated from the pre-activation and its activated value.
template <typename Scalar>
Mat<Scalar> derivative(Activation kind, const Mat<Scalar>& pre, const Mat<Scalar>& post) {
  switch (kind) {
    case Activation::Linear: return Mat<Scalar>::Ones(pre.rows(), pre.cols());
    case Activation::Sigmoid: return post.array() * (Scalar(1) - post.array());
    case Activation::Tanh: return Scalar(1) - post.array().square();
    case Activation::ReLU: return (pre.array() > Scalar(0)).template cast<Scalar>();
  }
  return Mat<Scalar>::Ones(pre.rows(), pre.cols());
}

}  // namespace act

}  // namespace peval
