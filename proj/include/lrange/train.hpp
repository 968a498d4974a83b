#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lrange/graph.hpp"
#include "lrange/linalg.hpp"
#include "lrange/matrix.hpp"
#include "lrange/model.hpp"
#include "lrange/tasks.hpp"

namespace lrange {

struct Sample {
  Matrix x;       // n x in_channels
  Matrix target;  // n x out (node task) or 1 x out (graph task)
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};

/// Maps node features to targets.
using TargetFn = std::function<Matrix(const Matrix&)>;

TargetFn node_target(const LinearTask& task);
TargetFn node_target(const PairwiseTaskSpec& spec);
/// 1 x channels row of pooled outputs.
TargetFn graph_target(const PairwiseTaskSpec& spec);

/// `num_samples` draws of iid N(0, 1) features; the first 80% (rounded down)
/// train, the rest validate.
Dataset make_dataset(const Graph& g, const TargetFn& task, std::size_t num_samples,
                     std::uint64_t seed, std::size_t in_channels = 1);

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch = 32;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  /// Validation samples used for the per-epoch range; 0 disables tracking.
  std::size_t range_samples = 4;
  /// Track the Hessian range each epoch (pooled heads only).
  bool track_hessian = false;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = at initialization
  double mse_train = 0.0;
  double mse_val = 0.0;
  double range_spd = 0.0;  // dataset-level normalized range (pre-pooling for pooled heads)
  double range_res = 0.0;
  std::optional<double> eta_res;
  double wall_seconds = 0.0;  // since the start of training
};

struct TrainTrace {
  std::vector<EpochRecord> records;
};

struct TrainResult {
  Parameters params;
  TrainTrace trace;
};

/// Thrown when the loss stops being finite; carries the trace so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, TrainTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

/// Mean squared error of the model over `samples`.
double evaluate_mse(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                    const std::vector<Sample>& samples);

/// Per-sample dataset ranges: mean graph range of model_jacobian over the samples.
struct ModelRanges {
  double spd = 0.0;
  double res = 0.0;
};
ModelRanges model_dataset_range(const ModelConfig& cfg, const Parameters& params,
                                const Propagation& prop, const std::vector<Sample>& samples,
                                const DistanceMatrix& spd, const DistanceMatrix& res);
/// Mean Hessian range (resistance) over the samples; pooled heads only.
double model_dataset_eta(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                         const std::vector<Sample>& samples, const DistanceMatrix& res);

/// Minibatch training on MSE. Initialization and shuffling derive from
/// `tc.seed`; per-sample gradients are reduced in index order, so the trace
/// does not depend on the worker count.
TrainResult train(const ModelConfig& cfg, const Graph& g, const Dataset& data, const TrainConfig& tc);

}  // namespace lrange
