#pragma once

// Reference losses and learning-rate schedules for crack segmentation.
//
// Losses take any pair of same-shaped Eigen array expressions (ground truth
// y, prediction yhat) and reduce over all pixels; batch reduction is left
// to the caller.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crackseg/error.hpp"
#include "crackseg/raster.hpp"

namespace crackseg {

struct LossConfig {
  double epsilon = 1.0;             // Dice smoothing term
  double dice_numerator_factor = 2.0;  // 2 = Sorensen-Dice, 1 = literal variant without the factor
  double clamp = 1e-7;              // yhat is clipped to [clamp, 1 - clamp] before logarithms

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("LossConfig: epsilon must be positive");
    if (dice_numerator_factor != 1.0 && dice_numerator_factor != 2.0) {
      throw std::invalid_argument("LossConfig: dice_numerator_factor must be 1 or 2");
    }
    if (!(clamp > 0.0 && clamp < 0.5)) throw std::invalid_argument("LossConfig: clamp must lie in (0, 0.5)");
  }
};

struct TverskyConfig {
  double alpha = 0.5;  // false-positive weight
  double beta = 0.5;   // false-negative weight

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("TverskyConfig: weights must be >= 0");
  }
};

namespace detail {

template <typename A, typename B>
void check_same_shape(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const char* op) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
    throw ShapeError(std::string(op) + ": ground truth is " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()) + ", prediction is " + std::to_string(yhat.rows()) + "x" +
                     std::to_string(yhat.cols()));
  }
}

}  // namespace detail

/// Mean binary cross entropy.
template <typename A, typename B>
double bce_loss(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const LossConfig& cfg = {}) {
  detail::check_same_shape(y, yhat, "bce_loss");
  cfg.validate();
  const auto p = yhat.template cast<double>().max(cfg.clamp).min(1.0 - cfg.clamp);
  const auto t = y.template cast<double>();
  const double n = static_cast<double>(y.size());
  return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).sum() / n;
}

/// 1 - (c * sum(y*yhat) + eps) / (sum(y) + sum(yhat) + eps)
template <typename A, typename B>
double dice_loss(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const LossConfig& cfg = {}) {
  detail::check_same_shape(y, yhat, "dice_loss");
  cfg.validate();
  const auto t = y.template cast<double>();
  const auto p = yhat.template cast<double>();
  const double overlap = (t * p).sum();
  return 1.0 - (cfg.dice_numerator_factor * overlap + cfg.epsilon) / (t.sum() + p.sum() + cfg.epsilon);
}

template <typename A, typename B>
double dice_bce_loss(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const LossConfig& cfg = {}) {
  return bce_loss(y, yhat, cfg) + dice_loss(y, yhat, cfg);
}

/// Dice+BCE that evaluates background patches (no crack pixel) on the
/// inverted maps 1 - y, 1 - yhat, so background mistakes move the Dice term.
template <typename A, typename B>
double inversion_loss(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const LossConfig& cfg = {}) {
  detail::check_same_shape(y, yhat, "inversion_loss");
  const auto t = y.template cast<double>();
  if (t.sum() == 0.0) {
    const auto p = yhat.template cast<double>();
    return dice_bce_loss((1.0 - t).eval(), (1.0 - p).eval(), cfg);
  }
  return dice_bce_loss(y, yhat, cfg);
}

/// 1 - (TP + eps) / (TP + alpha * FP + beta * FN + eps) with soft counts.
template <typename A, typename B>
double tversky_loss(const Eigen::ArrayBase<A>& y, const Eigen::ArrayBase<B>& yhat, const TverskyConfig& tcfg,
                    const LossConfig& cfg = {}) {
  detail::check_same_shape(y, yhat, "tversky_loss");
  tcfg.validate();
  cfg.validate();
  const auto t = y.template cast<double>();
  const auto p = yhat.template cast<double>();
  const double tp = (t * p).sum();
  const double fp = ((1.0 - t) * p).sum();
  const double fn = (t * (1.0 - p)).sum();
  return 1.0 - (tp + cfg.epsilon) / (tp + tcfg.alpha * fp + tcfg.beta * fn + cfg.epsilon);
}

// Container overloads.
inline double bce_loss(const BinaryMask& y, const ProbabilityMap& yhat, const LossConfig& cfg = {}) {
  return bce_loss(y.as_plane(), yhat.values(), cfg);
}
inline double dice_loss(const BinaryMask& y, const ProbabilityMap& yhat, const LossConfig& cfg = {}) {
  return dice_loss(y.as_plane(), yhat.values(), cfg);
}
inline double dice_bce_loss(const BinaryMask& y, const ProbabilityMap& yhat, const LossConfig& cfg = {}) {
  return dice_bce_loss(y.as_plane(), yhat.values(), cfg);
}
inline double inversion_loss(const BinaryMask& y, const ProbabilityMap& yhat, const LossConfig& cfg = {}) {
  return inversion_loss(y.as_plane(), yhat.values(), cfg);
}
inline double tversky_loss(const BinaryMask& y, const ProbabilityMap& yhat, const TverskyConfig& tcfg,
                           const LossConfig& cfg = {}) {
  return tversky_loss(y.as_plane(), yhat.values(), tcfg, cfg);
}

struct DeepSupervisionWeights {
  std::vector<double> w;
};

/// target + sum_i w_i * companion_i; an empty weight list means all ones.
double deep_supervision_total(double target_loss, const std::vector<double>& companion_losses,
                              const DeepSupervisionWeights& weights = {});

struct ScheduleConfig {
  double lambda_initial = 0.001;
  double gamma = 0.99;
  double k = 0.7;
  int n_stages = 4;
  double weight_decay = 1e-5;

  void validate() const;
};

/// lambda_initial * gamma^epoch
double lr_at_epoch(const ScheduleConfig& cfg, int epoch);

/// lambda * k^(N + 1 - n) for encoder stage n in 1..N
double lr_at_stage(double lambda, const ScheduleConfig& cfg, int stage);

}  // namespace crackseg
