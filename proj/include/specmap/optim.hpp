#pragma once

#include <functional>
#include <vector>

#include "specmap/descriptors.hpp"
#include "specmap/zoomout.hpp"

namespace specmap {

struct LossRecord {
  int step = 0;
  double total = 0.0;
  double orth = 0.0;
  double consist = 0.0;
  double lap = 0.0;
};

// Multiplicative ramp of the consistency weight: start * (end/start)^(t/ramp),
// clamped at end once t >= ramp_steps.
struct ConsistSchedule {
  double start = 1e-4;
  double end = 1e-1;
  int ramp_steps = 100;

  double at(int step) const;
};

struct OptimConfig {
  int steps = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double w_orth = 1.0;
  double w_lap = 1e2;
  ConsistSchedule consist;
  int feature_count = 32;  // p: number of descriptor columns kept as parameters
  ZoomOutConfig zoomout;   // forced to soft mode
  bool stop_refined_gradient = false;

  // Instrumentation hook, called once per step with the gradients actually
  // used by the update.
  std::function<void(int step, const Eigen::MatrixXd& df1, const Eigen::MatrixXd& df2,
                     const LossBreakdown& loss)>
      on_step;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& message, std::vector<LossRecord> history)
      : Error("E_NONFINITE_LOSS", message), history_(std::move(history)) {}
  const std::vector<LossRecord>& history() const { return history_; }

 private:
  std::vector<LossRecord> history_;
};

struct OptimResult {
  Eigen::MatrixXd f1;
  Eigen::MatrixXd f2;
  RefinementTrace trace;             // refinement of the optimized features
  std::vector<LossRecord> history;   // per-step losses plus a final entry
};

// Direct feature optimization: initializes per-vertex feature matrices from
// the first feature_count columns of the given descriptor sets and runs Adam
// (bias-corrected moments) on the three-term refinement objective with the
// scheduled consistency weight. Aborts with NonFiniteLoss if the loss or a
// gradient stops being finite.
OptimResult optimize_features(const EigenBasis& basis1, const EigenBasis& basis2,
                              const DescriptorSet& descriptors1,
                              const DescriptorSet& descriptors2, const OptimConfig& config);

// Loss history as "step,total,orth,consist,lap" CSV.
void write_loss_csv(std::ostream& out, const std::vector<LossRecord>& history);

}  // namespace specmap
