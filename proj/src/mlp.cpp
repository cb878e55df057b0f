#include "nmp/mlp.hpp"

#include <cmath>
#include <numeric>

#include "nmp/errors.hpp"

namespace nmp {

Mlp::Mlp(std::vector<int> widths, double output_scale) : widths_(std::move(widths)), output_scale_(output_scale) {
  if (widths_.size() < 2) throw InvalidArgument("an MLP needs at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw InvalidArgument("layer widths must be positive");
  }
  if (!(output_scale > 0.0)) throw InvalidArgument("output scale must be positive");
  build_layout();
}

void Mlp::build_layout() {
  layers_.clear();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    Layer L{off, 0, widths_[l], widths_[l + 1]};
    off += static_cast<std::size_t>(L.in) * L.out;
    L.b_offset = off;
    off += L.out;
    layers_.push_back(L);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

Mlp Mlp::glorot(std::vector<int> widths, double output_scale, Rng& rng) {
  Mlp net(std::move(widths), output_scale);
  for (const Layer& L : net.layers_) {
    const double limit = std::sqrt(6.0 / (L.in + L.out));
    for (std::size_t i = 0; i < static_cast<std::size_t>(L.in) * L.out; ++i) {
      net.params_[static_cast<Eigen::Index>(L.w_offset + i)] = rng.uniform(-limit, limit);
    }
  }
  return net;
}

void Mlp::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) {
    throw DimensionMismatch("expected " + std::to_string(params_.size()) + " parameters, got " +
                            std::to_string(p.size()));
  }
  if (!p.allFinite()) throw InvalidArgument("parameters must be finite");
  params_ = p;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) {
    throw DimensionMismatch("network expects input of size " + std::to_string(input_dim()) + ", got " +
                            std::to_string(x.rows()));
  }
  Eigen::MatrixXd h = x;
  for (const Layer& L : layers_) {
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + L.w_offset, L.out, L.in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + L.b_offset, L.out);
    Eigen::MatrixXd z = W * h;
    z.colwise() += b;
    h = z.array().tanh().matrix();
  }
  return h * output_scale_;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& x) const { return forward(x); }

double Mlp::loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) const {
  const Eigen::MatrixXd diff = (forward(x) - y) / output_scale_;
  return diff.squaredNorm() / static_cast<double>(x.cols());
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::VectorXd& grad) const {
  if (x.rows() != input_dim() || y.rows() != output_dim() || x.cols() != y.cols()) {
    throw DimensionMismatch("batch shapes do not match the network");
  }
  const double n = static_cast<double>(x.cols());
  std::vector<Eigen::MatrixXd> acts{x};
  acts.reserve(layers_.size() + 1);
  for (const Layer& L : layers_) {
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + L.w_offset, L.out, L.in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + L.b_offset, L.out);
    Eigen::MatrixXd z = W * acts.back();
    z.colwise() += b;
    acts.push_back(z.array().tanh().matrix());
  }
  const double a = output_scale_;
  const Eigen::MatrixXd diff = (acts.back() * a - y) / a;
  const double loss = diff.squaredNorm() / n;

  grad.setZero(params_.size());
  // d loss / d tanh-output = 2 diff / n (the 1/a and a cancel).
  Eigen::MatrixXd delta = (2.0 / n) * diff.array() * (1.0 - acts.back().array().square());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& L = layers_[l];
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + L.w_offset, L.out, L.in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + L.b_offset, L.out);
    gW.noalias() = delta * acts[l].transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const Eigen::MatrixXd> W(params_.data() + L.w_offset, L.out, L.in);
      Eigen::MatrixXd back = W.transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return loss;
}

std::vector<double> smooth_curve(const std::vector<double>& values, int window) {
  if (window < 1) throw InvalidArgument("smoothing window must be >= 1");
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t from = i + 1 > static_cast<std::size_t>(window) ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = from; k <= i; ++k) sum += values[k];
    out.push_back(sum / static_cast<double>(i + 1 - from));
  }
  return out;
}

BcTrainResult bc_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, double output_scale,
                     const BcHyper& hyper) {
  if (inputs.cols() == 0) throw InvalidArgument("no training samples");
  if (inputs.cols() != targets.cols()) throw DimensionMismatch("inputs and targets differ in sample count");
  if (hyper.epochs < 1 || hyper.batch_size < 1) throw InvalidArgument("epochs and batch size must be >= 1");

  Rng rng(hyper.seed);
  std::vector<int> widths{static_cast<int>(inputs.rows())};
  widths.insert(widths.end(), hyper.hidden.begin(), hyper.hidden.end());
  widths.push_back(static_cast<int>(targets.rows()));

  BcTrainResult result;
  result.net = Mlp::glorot(widths, output_scale, rng);
  result.samples = static_cast<std::size_t>(inputs.cols());
  Mlp& net = result.net;

  const Eigen::Index n = inputs.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  Eigen::VectorXd grad;
  Eigen::MatrixXd bx(inputs.rows(), hyper.batch_size);
  Eigen::MatrixXd by(targets.rows(), hyper.batch_size);
  const int third = std::max(1, hyper.epochs / 3);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double lr = hyper.learning_rate * std::pow(0.5, std::min(epoch / third, 2));
    for (Eigen::Index i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += hyper.batch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(hyper.batch_size, n - start);
      bx.resize(inputs.rows(), m);
      by.resize(targets.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j) {
        bx.col(j) = inputs.col(order[start + j]);
        by.col(j) = targets.col(order[start + j]);
      }
      epoch_loss += net.loss_and_gradient(bx, by, grad);
      ++batches;
      velocity = hyper.momentum * velocity - lr * grad;
      net.params() += velocity;
    }
    result.loss_curve.push_back(epoch_loss / batches);
  }
  if (!net.params().allFinite()) throw Error("training diverged: non-finite parameters");
  result.smoothed_curve = smooth_curve(result.loss_curve, hyper.smoothing_window);
  return result;
}

}  // namespace nmp
