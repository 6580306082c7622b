#pragma once

#include <cmath>

#include "texrand/error.hpp"
#include "texrand/trainer/config.hpp"
#include "texrand/trainer/seg_model.hpp"

namespace texrand::trainer {

// lr(t) = lr0 * (1 - t / T)^power
inline double poly_lr(double lr0, int iteration, int total, double power) {
  detail::require(total >= 1 && iteration >= 0 && iteration < total, ErrorKind::invalid_parameter,
                  "poly_lr: iteration must lie in [0, total)");
  return lr0 * std::pow(1.0 - static_cast<double>(iteration) / total, power);
}

// SGD with heavy-ball momentum and L2 weight decay folded into the velocity:
//   v = momentum * v + grad + weight_decay * param;  param -= lr(t) * v
class Sgd {
 public:
  explicit Sgd(const SegModel& model) : velocity_(model) {}

  // Returns the learning rate used for this step.
  double step(SegModel& model, const ModelGrad& grad, int iteration, const TrainConfig& cfg) {
    const double lr = poly_lr(cfg.lr0, iteration, cfg.iterations, cfg.poly_power);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weight, grad.layers[l].weight, velocity_.layers[l].weight, lr, cfg);
      update(model.layers[l].bias, grad.layers[l].bias, velocity_.layers[l].bias, lr, cfg);
    }
    return lr;
  }

 private:
  static void update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& vel, double lr,
                     const TrainConfig& cfg) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = cfg.momentum * vel[i] + grad[i] + cfg.weight_decay * param[i];
      param[i] -= lr * vel[i];
    }
  }

  ModelGrad velocity_;
};

}  // namespace texrand::trainer
