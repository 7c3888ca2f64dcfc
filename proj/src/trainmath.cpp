#include "crackseg/trainmath.hpp"

namespace crackseg {

double deep_supervision_total(double target_loss, const std::vector<double>& companion_losses,
                              const DeepSupervisionWeights& weights) {
  if (!weights.w.empty() && weights.w.size() != companion_losses.size()) {
    throw std::invalid_argument("deep_supervision_total: " + std::to_string(weights.w.size()) + " weights for " +
                                std::to_string(companion_losses.size()) + " companion losses");
  }
  double total = target_loss;
  for (std::size_t i = 0; i < companion_losses.size(); ++i) {
    const double w = weights.w.empty() ? 1.0 : weights.w[i];
    if (!(w >= 0.0)) throw std::invalid_argument("deep_supervision_total: negative weight");
    total += w * companion_losses[i];
  }
  return total;
}

void ScheduleConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ScheduleConfig: gamma must lie in (0, 1]");
  if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("ScheduleConfig: k must lie in (0, 1]");
  if (n_stages < 1) throw std::invalid_argument("ScheduleConfig: n_stages must be >= 1");
}

double lr_at_epoch(const ScheduleConfig& cfg, int epoch) {
  cfg.validate();
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch " + std::to_string(epoch));
  return cfg.lambda_initial * std::pow(cfg.gamma, epoch);
}

double lr_at_stage(double lambda, const ScheduleConfig& cfg, int stage) {
  cfg.validate();
  if (stage < 1 || stage > cfg.n_stages) {
    throw std::out_of_range("lr_at_stage: stage " + std::to_string(stage) + " outside 1.." +
                            std::to_string(cfg.n_stages));
  }
  return lambda * std::pow(cfg.k, cfg.n_stages + 1 - stage);
}

}  // namespace crackseg
