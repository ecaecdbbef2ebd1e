#pragma once

// Batched forward and backward passes. A batch is a (window_length x B)
// matrix holding one sample per column; recurrent cells read one row per
// timestep, so the input dimension is 1.

#include <vector>

#include <Eigen/Dense>

#include "peval/network.hpp"

namespace peval {
namespace kernels {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct CellParams {
  const Mat<Scalar>& wx;
  const Mat<Scalar>& wh;
  const Mat<Scalar>& b;
};

template <typename Scalar>
struct CellGrads {
  Mat<Scalar>& wx;
  Mat<Scalar>& wh;
  Mat<Scalar>& b;
};

// Elman cell: h_t = f(Wx x_t + Wh h_{t-1} + b).
template <typename Scalar>
class SimpleCell {
 public:
  Mat<Scalar> run(const CellParams<Scalar>& p, Activation f, const Mat<Scalar>& x) {
    const Eigen::Index n = p.wh.rows(), batch = x.cols();
    activation_ = f;
    x_ = x;
    h_.assign(1, Mat<Scalar>::Zero(n, batch));
    pre_.clear();
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      Mat<Scalar> a = p.wx * x.row(t) + p.wh * h_.back();
      a.colwise() += p.b.col(0);
      h_.push_back(act::apply<Scalar>(f, a));
      pre_.push_back(std::move(a));
    }
    return h_.back();
  }

  void backprop(const CellParams<Scalar>& p, Mat<Scalar> dh, CellGrads<Scalar> g) const {
    for (Eigen::Index t = x_.rows() - 1; t >= 0; --t) {
      const auto ut = static_cast<std::size_t>(t);
      const Mat<Scalar> da = dh.cwiseProduct(act::derivative<Scalar>(activation_, pre_[ut], h_[ut + 1]));
      g.wx.noalias() += da * x_.row(t).transpose();
      g.wh.noalias() += da * h_[ut].transpose();
      g.b += da.rowwise().sum();
      dh.noalias() = p.wh.transpose() * da;
    }
  }

 private:
  Activation activation_ = Activation::Tanh;
  Mat<Scalar> x_;
  std::vector<Mat<Scalar>> h_;
  std::vector<Mat<Scalar>> pre_;
};

// LSTM with sigmoid gates (i, f, o) and the configured activation on the
// candidate and on the cell state read-out:
//   c_t = f * c_{t-1} + i * act(z_g),  h_t = o * act(c_t)
template <typename Scalar>
class LstmCell {
 public:
  Mat<Scalar> run(const CellParams<Scalar>& p, Activation f, const Mat<Scalar>& x) {
    const Eigen::Index n = p.wh.cols(), batch = x.cols();
    activation_ = f;
    x_ = x;
    steps_.clear();
    Mat<Scalar> h = Mat<Scalar>::Zero(n, batch), c = Mat<Scalar>::Zero(n, batch);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      Step s;
      s.h_prev = h;
      s.c_prev = c;
      Mat<Scalar> z = p.wx * x.row(t) + p.wh * h;
      z.colwise() += p.b.col(0);
      s.i = act::sigmoid<Scalar>(z.topRows(n));
      s.f = act::sigmoid<Scalar>(z.middleRows(n, n));
      s.zg = z.middleRows(2 * n, n);
      s.g = act::apply<Scalar>(f, s.zg);
      s.o = act::sigmoid<Scalar>(z.bottomRows(n));
      c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
      s.c = c;
      s.ac = act::apply<Scalar>(f, c);
      h = s.o.cwiseProduct(s.ac);
      steps_.push_back(std::move(s));
    }
    return h;
  }

  void backprop(const CellParams<Scalar>& p, Mat<Scalar> dh, CellGrads<Scalar> g) const {
    const Eigen::Index n = p.wh.cols(), batch = dh.cols();
    Mat<Scalar> dc = Mat<Scalar>::Zero(n, batch);
    Mat<Scalar> dz(4 * n, batch);
    for (Eigen::Index t = x_.rows() - 1; t >= 0; --t) {
      const Step& s = steps_[static_cast<std::size_t>(t)];
      const Mat<Scalar> dct =
          dc + dh.cwiseProduct(s.o).cwiseProduct(act::derivative<Scalar>(activation_, s.c, s.ac));
      const auto sig = [](const Mat<Scalar>& y) { return (y.array() * (Scalar(1) - y.array())).matrix(); };
      dz.topRows(n) = dct.cwiseProduct(s.g).cwiseProduct(sig(s.i));
      dz.middleRows(n, n) = dct.cwiseProduct(s.c_prev).cwiseProduct(sig(s.f));
      dz.middleRows(2 * n, n) = dct.cwiseProduct(s.i).cwiseProduct(act::derivative<Scalar>(activation_, s.zg, s.g));
      dz.bottomRows(n) = dh.cwiseProduct(s.ac).cwiseProduct(sig(s.o));
      dc = dct.cwiseProduct(s.f);
      g.wx.noalias() += dz * x_.row(t).transpose();
      g.wh.noalias() += dz * s.h_prev.transpose();
      g.b += dz.rowwise().sum();
      dh.noalias() = p.wh.transpose() * dz;
    }
  }

 private:
  struct Step {
    Mat<Scalar> h_prev, c_prev, i, f, zg, g, o, c, ac;
  };
  Activation activation_ = Activation::Tanh;
  Mat<Scalar> x_;
  std::vector<Step> steps_;
};

// GRU (reset applied before the candidate's recurrent product):
//   n_t = act(Wx_n x_t + Wh_n (r * h_{t-1}) + b_n)
//   h_t = (1 - z) * h_{t-1} + z * n_t
template <typename Scalar>
class GruCell {
 public:
  Mat<Scalar> run(const CellParams<Scalar>& p, Activation f, const Mat<Scalar>& x) {
    const Eigen::Index n = p.wh.cols(), batch = x.cols();
    activation_ = f;
    x_ = x;
    steps_.clear();
    Mat<Scalar> h = Mat<Scalar>::Zero(n, batch);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      Step s;
      s.h_prev = h;
      Mat<Scalar> zx = p.wx * x.row(t);
      zx.colwise() += p.b.col(0);
      s.z = act::sigmoid<Scalar>(zx.topRows(n) + p.wh.topRows(n) * h);
      s.r = act::sigmoid<Scalar>(zx.middleRows(n, n) + p.wh.middleRows(n, n) * h);
      s.rh = s.r.cwiseProduct(h);
      s.an = zx.bottomRows(n) + p.wh.bottomRows(n) * s.rh;
      s.cand = act::apply<Scalar>(f, s.an);
      h = (Scalar(1) - s.z.array()).matrix().cwiseProduct(h) + s.z.cwiseProduct(s.cand);
      steps_.push_back(std::move(s));
    }
    return h;
  }

  void backprop(const CellParams<Scalar>& p, Mat<Scalar> dh, CellGrads<Scalar> g) const {
    const Eigen::Index n = p.wh.cols(), batch = dh.cols();
    Mat<Scalar> dz(3 * n, batch);
    for (Eigen::Index t = x_.rows() - 1; t >= 0; --t) {
      const Step& s = steps_[static_cast<std::size_t>(t)];
      const auto sig = [](const Mat<Scalar>& y) { return (y.array() * (Scalar(1) - y.array())).matrix(); };
      const Mat<Scalar> dan =
          dh.cwiseProduct(s.z).cwiseProduct(act::derivative<Scalar>(activation_, s.an, s.cand));
      const Mat<Scalar> drh = p.wh.bottomRows(n).transpose() * dan;
      dz.topRows(n) = dh.cwiseProduct(s.cand - s.h_prev).cwiseProduct(sig(s.z));
      dz.middleRows(n, n) = drh.cwiseProduct(s.h_prev).cwiseProduct(sig(s.r));
      dz.bottomRows(n) = dan;

      g.wx.noalias() += dz * x_.row(t).transpose();
      g.b += dz.rowwise().sum();
      g.wh.topRows(n).noalias() += dz.topRows(n) * s.h_prev.transpose();
      g.wh.middleRows(n, n).noalias() += dz.middleRows(n, n) * s.h_prev.transpose();
      g.wh.bottomRows(n).noalias() += dan * s.rh.transpose();

      Mat<Scalar> dprev = dh.cwiseProduct((Scalar(1) - s.z.array()).matrix()) + drh.cwiseProduct(s.r);
      dprev.noalias() += p.wh.topRows(2 * n).transpose() * dz.topRows(2 * n);
      dh = std::move(dprev);
    }
  }

 private:
  struct Step {
    Mat<Scalar> h_prev, z, r, rh, an, cand;
  };
  Activation activation_ = Activation::Tanh;
  Mat<Scalar> x_;
  std::vector<Step> steps_;
};

// Forward pass over a batch plus whatever the backward pass needs.
template <typename Scalar>
class Tape {
 public:
  Tape(const ModelSpec& spec, const ParameterSet<Scalar>& params) : spec_(spec), params_(params) {}

  // x: window_length x B. Returns 1 x B predictions.
  Mat<Scalar> forward(const Mat<Scalar>& x) {
    const auto& P = params_;
    switch (spec_.architecture) {
      case Architecture::MLP: {
        x_ = x;
        pre_ = P.block(0) * x;
        pre_.colwise() += P.block(1).col(0);
        hidden_ = act::apply<Scalar>(spec_.activation, pre_);
        break;
      }
      case Architecture::RNN: hidden_ = simple_[0].run(cell(0), spec_.activation, x); break;
      case Architecture::LSTM: hidden_ = lstm_[0].run(cell(0), spec_.activation, x); break;
      case Architecture::GRU: hidden_ = gru_[0].run(cell(0), spec_.activation, x); break;
      case Architecture::BiRNN:
      case Architecture::BiLSTM: {
        const Mat<Scalar> reversed = x.colwise().reverse();
        const bool lstm = spec_.architecture == Architecture::BiLSTM;
        Mat<Scalar> hf = lstm ? lstm_[0].run(cell(0), spec_.activation, x) : simple_[0].run(cell(0), spec_.activation, x);
        Mat<Scalar> hb = lstm ? lstm_[1].run(cell(3), spec_.activation, reversed)
                              : simple_[1].run(cell(3), spec_.activation, reversed);
        hidden_.resize(hf.rows() + hb.rows(), x.cols());
        hidden_ << hf, hb;
        break;
      }
    }
    const std::size_t head = P.block_count() - 2;
    Mat<Scalar> y = P.block(head) * hidden_;
    y.array() += P.block(head + 1)(0, 0);
    return y;
  }

  // Accumulates d(sum_b w_b * y_b)/d(theta) into `grad` given dy = (w_b).
  void backward(const Mat<Scalar>& dy, ParameterSet<Scalar>& grad) const {
    const auto& P = params_;
    const std::size_t head = P.block_count() - 2;
    grad.block(head).noalias() += dy * hidden_.transpose();
    grad.block(head + 1)(0, 0) += dy.sum();
    const Mat<Scalar> dh = P.block(head).transpose() * dy;
    switch (spec_.architecture) {
      case Architecture::MLP: {
        const Mat<Scalar> da = dh.cwiseProduct(act::derivative<Scalar>(spec_.activation, pre_, hidden_));
        grad.block(0).noalias() += da * x_.transpose();
        grad.block(1) += da.rowwise().sum();
        break;
      }
      case Architecture::RNN: simple_[0].backprop(cell(0), dh, cell_grads(grad, 0)); break;
      case Architecture::LSTM: lstm_[0].backprop(cell(0), dh, cell_grads(grad, 0)); break;
      case Architecture::GRU: gru_[0].backprop(cell(0), dh, cell_grads(grad, 0)); break;
      case Architecture::BiRNN:
      case Architecture::BiLSTM: {
        const Eigen::Index n = static_cast<Eigen::Index>(spec_.hidden_nodes);
        if (spec_.architecture == Architecture::BiLSTM) {
          lstm_[0].backprop(cell(0), dh.topRows(n), cell_grads(grad, 0));
          lstm_[1].backprop(cell(3), dh.bottomRows(n), cell_grads(grad, 3));
        } else {
          simple_[0].backprop(cell(0), dh.topRows(n), cell_grads(grad, 0));
          simple_[1].backprop(cell(3), dh.bottomRows(n), cell_grads(grad, 3));
        }
        break;
      }
    }
  }

 private:
  CellParams<Scalar> cell(std::size_t first) const {
    return {params_.block(first), params_.block(first + 1), params_.block(first + 2)};
  }
  static CellGrads<Scalar> cell_grads(ParameterSet<Scalar>& g, std::size_t first) {
    return {g.block(first), g.block(first + 1), g.block(first + 2)};
  }

  const ModelSpec& spec_;
  const ParameterSet<Scalar>& params_;
  Mat<Scalar> x_, pre_, hidden_;
  SimpleCell<Scalar> simple_[2];
  LstmCell<Scalar> lstm_[2];
  GruCell<Scalar> gru_[1];
};

}  // namespace kernels

template <typename Scalar>
struct GradientResult {
  ParameterSet<Scalar> gradient;
  Scalar loss{};
};

// Predictions for a (B x window_length) sample matrix, one row per sample.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward_batch(const ModelSpec& spec, const ParameterSet<Scalar>& params,
                                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& inputs) {
  if (inputs.cols() != static_cast<Eigen::Index>(spec.window_length))
    throw Error(Errc::ShapeMismatch, "input width does not match the window length");
  kernels::Tape<Scalar> tape(spec, params);
  return tape.forward(inputs.transpose()).transpose();
}

template <typename Scalar>
Scalar forward(const ModelSpec& spec, const ParameterSet<Scalar>& params,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& input) {
  if (input.size() != static_cast<Eigen::Index>(spec.window_length))
    throw Error(Errc::ShapeMismatch, "input length does not match the window length");
  kernels::Tape<Scalar> tape(spec, params);
  return tape.forward(input)(0, 0);
}

// Gradient of (prediction - target)^2 for one sample.
template <typename Scalar>
GradientResult<Scalar> backward(const ModelSpec& spec, const ParameterSet<Scalar>& params,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& input, Scalar target) {
  if (input.size() != static_cast<Eigen::Index>(spec.window_length))
    throw Error(Errc::ShapeMismatch, "input length does not match the window length");
  kernels::Tape<Scalar> tape(spec, params);
  const Scalar residual = tape.forward(input)(0, 0) - target;
  GradientResult<Scalar> out{ParameterSet<Scalar>(spec), residual * residual};
  kernels::Mat<Scalar> dy(1, 1);
  dy(0, 0) = Scalar(2) * residual;
  tape.backward(dy, out.gradient);
  return out;
}

// Gradient of the mean squared error over a batch (one sample per row).
template <typename Scalar>
GradientResult<Scalar> backward_batch(const ModelSpec& spec, const ParameterSet<Scalar>& params,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& inputs,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& targets) {
  if (inputs.cols() != static_cast<Eigen::Index>(spec.window_length) || inputs.rows() != targets.size())
    throw Error(Errc::ShapeMismatch, "batch shape does not match the model");
  if (inputs.rows() == 0) throw Error(Errc::EmptyInput, "empty batch");
  kernels::Tape<Scalar> tape(spec, params);
  const kernels::Mat<Scalar> residual = tape.forward(inputs.transpose()) - targets.transpose();
  const Scalar count = static_cast<Scalar>(inputs.rows());
  GradientResult<Scalar> out{ParameterSet<Scalar>(spec), residual.squaredNorm() / count};
  tape.backward((Scalar(2) / count) * residual, out.gradient);
  return out;
}

}  // namespace peval
