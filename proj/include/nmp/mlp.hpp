#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nmp/rng.hpp"

namespace nmp {

/// Fully connected tanh network whose output is a * tanh(z).
///
/// Parameters live in one flat vector: for each layer the weight matrix
/// (out x in, column-major) followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> widths, double output_scale);

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(std::vector<int> widths, double output_scale, Rng& rng);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  double output_scale() const { return output_scale_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);

  /// Column-per-sample forward pass. Throws DimensionMismatch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd forward_one(const Eigen::VectorXd& x) const;

  /// Mean over samples of ||(f(x) - y) / a||^2, and its gradient.
  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const;
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::VectorXd& grad) const;

 private:
  struct Layer {
    std::size_t w_offset;
    std::size_t b_offset;
    int in;
    int out;
  };
  void build_layout();

  std::vector<int> widths_;
  double output_scale_ = 1.0;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

struct BcHyper {
  std::vector<int> hidden{256, 256};
  int epochs = 60;
  int batch_size = 256;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int smoothing_window = 10;
};

struct BcTrainResult {
  Mlp net;
  std::vector<double> loss_curve;      // mean minibatch loss per epoch
  std::vector<double> smoothed_curve;  // trailing moving average
  std::size_t samples = 0;
};

/// Trailing moving average over `window` entries.
std::vector<double> smooth_curve(const std::vector<double>& values, int window);

/// Mini-batch SGD with momentum on MSE; the step halves after each third of
/// the epochs. Inputs are column samples. Throws DimensionMismatch.
BcTrainResult bc_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, double output_scale,
                     const BcHyper& hyper);

}  // namespace nmp
