#include "specmap/optim.hpp"

#include <cmath>
#include <ostream>

namespace specmap {

double ConsistSchedule::at(int step) const {
  if (ramp_steps <= 0 || step >= ramp_steps) return end;
  if (step <= 0) return start;
  const double t = static_cast<double>(step) / ramp_steps;
  return start * std::pow(end / start, t);
}

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

LossRecord to_record(int step, const LossBreakdown& loss) {
  return {step, loss.total, loss.orth, loss.consist, loss.lap};
}

}  // namespace

OptimResult optimize_features(const EigenBasis& basis1, const EigenBasis& basis2,
                              const DescriptorSet& descriptors1,
                              const DescriptorSet& descriptors2, const OptimConfig& config) {
  if (config.steps < 0) throw ConfigError("negative step count");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in (0, 1)");
  if (config.consist.start > config.consist.end)
    throw ConfigError("consistency schedule must be nondecreasing");
  if (config.feature_count < 1) throw ConfigError("feature count must be positive");
  if (descriptors1.count() < config.feature_count || descriptors2.count() < config.feature_count)
    throw DimensionMismatch("descriptor sets narrower than the requested feature count");
  if (descriptors1.values.rows() != basis1.n() || descriptors2.values.rows() != basis2.n())
    throw DimensionMismatch("descriptor sets and bases disagree on vertex counts");

  ZoomOutConfig zoom = config.zoomout;
  zoom.mode = ZoomOutConfig::Mode::Soft;
  zoom.keep_snapshots = true;

  OptimResult result;
  result.f1 = descriptors1.values.leftCols(config.feature_count);
  result.f2 = descriptors2.values.leftCols(config.feature_count);

  Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(result.f1.rows(), result.f1.cols());
  Eigen::MatrixXd v1 = m1, m2 = Eigen::MatrixXd::Zero(result.f2.rows(), result.f2.cols()),
                  v2 = m2;

  LossWeights weights;
  weights.orth = config.w_orth;
  weights.lap = config.w_lap;

  for (int step = 0; step < config.steps; ++step) {
    weights.consist = config.consist.at(step);
    LossGradients grad = loss_gradients(result.f1, result.f2, basis1, basis2, zoom, weights,
                                        config.stop_refined_gradient);
    result.history.push_back(to_record(step, grad.loss));
    if (!std::isfinite(grad.loss.total) || !all_finite(grad.df1) || !all_finite(grad.df2))
      throw NonFiniteLoss("loss diverged at step " + std::to_string(step), result.history);
    if (config.on_step) config.on_step(step, grad.df1, grad.df2, grad.loss);

    const double correction1 = 1.0 - std::pow(config.beta1, step + 1);
    const double correction2 = 1.0 - std::pow(config.beta2, step + 1);
    auto adam_update = [&](Eigen::MatrixXd& param, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                           const Eigen::MatrixXd& g) {
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
      param.array() -= config.learning_rate * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + config.epsilon);
    };
    adam_update(result.f1, m1, v1, grad.df1);
    adam_update(result.f2, m2, v2, grad.df2);
  }

  // Final forward with the optimized features; its loss closes the history.
  weights.consist = config.consist.at(config.steps);
  LossGradients final_state =
      loss_gradients(result.f1, result.f2, basis1, basis2, zoom, weights,
                     config.stop_refined_gradient);
  result.history.push_back(to_record(config.steps, final_state.loss));
  if (!std::isfinite(final_state.loss.total))
    throw NonFiniteLoss("loss diverged after the last step", result.history);
  result.trace = std::move(final_state.forward.trace);
  return result;
}

void write_loss_csv(std::ostream& out, const std::vector<LossRecord>& history) {
  out << "step,total,orth,consist,lap\n";
  char line[160];
  for (const auto& rec : history) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", rec.step, rec.total,
                  rec.orth, rec.consist, rec.lap);
    out << line;
  }
}

}  // namespace specmap
