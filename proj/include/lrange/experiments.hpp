#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrange/config.hpp"
#include "lrange/distances.hpp"
#include "lrange/estimator.hpp"
#include "lrange/graph.hpp"
#include "lrange/model.hpp"
#include "lrange/tasks.hpp"
#include "lrange/train.hpp"

namespace lrange {

using Json = nlohmann::ordered_json;

/// Named base configurations: fig2_topology, fig3_task_families,
/// fig4_node_level, fig5_graph_level, ablation_gelu, ablation_vn.
Config preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Keys every command accepts.
const std::vector<std::string>& known_config_keys();

/// graph.family in {line, cycle, grid, er, sbm, edge_list}. Random families
/// draw from graph.seed + seed_offset.
Graph build_graph(const Config& cfg, std::uint64_t seed_offset = 0);
std::vector<Metric> config_metrics(const Config& cfg);
std::vector<std::uint64_t> config_seeds(const Config& cfg);

/// A task resolved against a graph: exactly one of the three is set.
struct ResolvedTask {
  std::string family;
  unsigned k = 0;
  std::optional<LinearTask> linear;
  std::optional<PairwiseTaskSpec> node_pairwise;
  std::optional<PairwiseTaskSpec> graph_pairwise;

  bool graph_level() const { return graph_pairwise.has_value(); }
  TargetFn target() const;
};

/// task.family in {k_power, k_rectangle, k_dirac, custom,
/// squared_difference_node, squared_difference_graph, power_graph}.
ResolvedTask resolve_task(const std::string& family, unsigned k, const Config& cfg, const Graph& g);
ModelConfig model_config(const Config& cfg, std::size_t depth);
TrainConfig train_config(const Config& cfg, std::uint64_t seed);
SamplingConfig sampling_config(const Config& cfg);

/// Dense numeric CSV (no header) to a matrix.
Matrix matrix_from_csv(std::string_view text);

// task-range ---------------------------------------------------------------

struct TaskRangeRow {
  std::string family;
  unsigned k = 0;
  std::uint64_t seed = 0;
  Metric metric = Metric::kSpd;
  double graph_range = 0.0;
  std::size_t degenerate_count = 0;
};

std::vector<TaskRangeRow> compute_task_ranges(const Config& cfg);
std::string task_range_csv(const std::vector<TaskRangeRow>& rows);
std::vector<TaskRangeRow> parse_task_range_csv(std::string_view text);
/// Mean, min and max over seeds per (family, k, metric).
Json summarize_task_ranges(const std::vector<TaskRangeRow>& rows);

// train-range --------------------------------------------------------------

struct TraceRow {
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  std::size_t depth = 0;
  double mse_train = 0.0;
  double mse_val = 0.0;
  double range_spd = 0.0;
  double range_res = 0.0;
  std::optional<double> eta_res;
};

std::string trace_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> parse_trace_csv(std::string_view text);
/// Per depth: per-epoch min/max/mean envelopes over seeds, final-epoch means,
/// and (when eta is present) the Pearson correlation between the
/// seed-averaged range_res and eta_res curves, per depth and pooled.
Json summarize_traces(const std::vector<TraceRow>& rows);

/// 0 when either series is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct TrainRun {
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  ModelConfig model;
  Parameters params;
  std::vector<TraceRow> rows;
  std::vector<double> epoch_wall_seconds;  // kept out of the CSV so its bytes are reproducible
  bool diverged = false;
  std::string error;
};

struct TrainRangeResult {
  std::vector<TrainRun> runs;
  Json summary;    // summarize_traces over all rows
  Json reference;  // exact task ranges and preset checks
  bool diverged = false;
};

/// Exact ranges of the configured task: for node-level tasks the dataset
/// range under each metric (and, for k_power, both self-loop variants); for
/// graph-level tasks the exact Hessian range.
Json task_reference(const Config& cfg, const Graph& g);

TrainRangeResult run_train_range(const Config& cfg);

// estimate -----------------------------------------------------------------

struct EstimateRow {
  std::uint64_t mask_seed = 0;
  Metric metric = Metric::kSpd;
  double estimate = 0.0;  // dataset range over the evaluation samples
  double exact = 0.0;
  std::size_t selected_out_nodes = 0;
  std::size_t selected_out_channels = 0;
  std::size_t selected_in_channels = 0;
  bool input_masking_bias = false;
};

/// Estimated vs exact dataset range for each mask seed and metric.
std::vector<EstimateRow> compare_estimates(const ModelConfig& model, const Parameters& params,
                                           const Graph& g, const std::vector<Sample>& samples,
                                           const std::vector<Metric>& metrics,
                                           const SamplingConfig& sampling,
                                           const std::vector<std::uint64_t>& mask_seeds);
std::string estimate_csv(const std::vector<EstimateRow>& rows);

// commands -----------------------------------------------------------------

struct CommandOutput {
  std::vector<std::string> files;
  /// Nonzero when a run failed numerically but partial output was written.
  int status = 0;
};

CommandOutput cmd_task_range(const Config& cfg);
CommandOutput cmd_train_range(const Config& cfg);
CommandOutput cmd_exact(const Config& cfg);
CommandOutput cmd_estimate(const Config& cfg);
CommandOutput cmd_gen_graph(const Config& cfg);

}  // namespace lrange
