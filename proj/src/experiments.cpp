#include "lrange/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "lrange/format.hpp"
#include "lrange/linalg.hpp"
#include "lrange/parallel.hpp"
#include "lrange/range.hpp"
#include "lrange/rng.hpp"

namespace lrange {

namespace {

const char* kFig4 = R"(
command = train-range
seeds = 0:3
metrics = spd,res
[graph]
family = line
n = 100
[task]
family = k_power
k = 5
self_loops = true
[model]
depth = 1,3,5,7
hidden_dim = 64
activation = identity
residual = true
virtual_node = false
head = node
self_loops = true
[train]
lr = 0.001
epochs = 50
batch = 32
optimizer = adam
samples = 500
data_seed = 0
range_samples = 1
[reference]
paper_range = 1.33
tolerance = 0.1
)";

const char* kFig5 = R"(
command = train-range
seeds = 0:3
metrics = spd,res
[graph]
family = line
n = 30
[task]
family = power_graph
k = 5
self_loops = true
[model]
depth = 1,3,5
hidden_dim = 64
activation = gelu
residual = true
virtual_node = false
head = mean_pool
self_loops = true
[train]
lr = 0.001
epochs = 100
batch = 16
optimizer = adam
samples = 500
data_seed = 0
range_samples = 1
track_hessian = true
)";

const char* kFig3 = R"(
command = task-range
seeds = 0
metrics = spd,res
[graph]
family = line
n = 100
[task]
families = k_power,k_rectangle,k_dirac
k = 1:10
self_loops = true
)";

const char* kFig2 = R"(
command = task-range
seeds = 0:4
metrics = spd,res
graphs = line,er_dense,er_sparse,sbm_dense,sbm_sparse
[graph.line]
family = line
n = 100
[graph.er_dense]
family = er
n = 100
p = 0.3
[graph.er_sparse]
family = er
n = 100
p = 0.1
[graph.sbm_dense]
family = sbm
blocks = 50,50
p_intra = 0.75
p_inter = 0.25
[graph.sbm_sparse]
family = sbm
blocks = 50,50
p_intra = 0.3
p_inter = 0.1
[task]
families = k_power
k = 1:10
self_loops = true
)";

std::string metric_column(Metric m) { return m == Metric::kSpd ? "spd" : "res"; }

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& files) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  files.push_back(path.string());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path out_dir(const Config& cfg) { return cfg.str("out", "out"); }

// Splits a CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) return out;
    line = line.substr(comma + 1);
  }
}

std::vector<std::string_view> csv_lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const std::string_view line = trim(text.substr(0, eol));
    if (!line.empty()) out.push_back(line);
    if (eol == std::string_view::npos) break;
    text = text.substr(eol + 1);
  }
  return out;
}

struct Stats {
  double min = 0.0, max = 0.0, mean = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s{v.front(), v.front(), 0.0};
  for (double x : v) {
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
    s.mean += x;
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

Json stats_json(const std::vector<double>& v) {
  const Stats s = stats(v);
  return Json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}};
}

// Graph spec prefixes: "graph." for a single graph, "graph.<name>." when
// `graphs` lists several.
std::vector<std::pair<std::string, std::string>> graph_prefixes(const Config& cfg) {
  if (!cfg.has("graphs")) return {{cfg.str("graph.family", "line"), "graph."}};
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& name : cfg.strings("graphs", {})) out.emplace_back(name, "graph." + name + ".");
  return out;
}

Graph build_graph_at(const Config& cfg, const std::string& prefix, std::uint64_t seed_offset) {
  const std::string family = cfg.str(prefix + "family", "line");
  const std::uint64_t seed = cfg.count(prefix + "seed", 0) + seed_offset;
  if (family == "line") return build_line(cfg.count(prefix + "n", 100));
  if (family == "cycle") return build_cycle(cfg.count(prefix + "n", 100));
  if (family == "grid") return build_grid2d(cfg.count(prefix + "rows", 10), cfg.count(prefix + "cols", 10));
  if (family == "er") return build_erdos_renyi(cfg.count(prefix + "n", 100), cfg.number(prefix + "p", 0.3), seed);
  if (family == "sbm") {
    const auto blocks = cfg.counts(prefix + "blocks", {50, 50});
    return build_sbm(blocks, cfg.number(prefix + "p_intra", 0.75), cfg.number(prefix + "p_inter", 0.25), seed);
  }
  if (family == "edge_list") {
    const auto parsed = from_edge_list(read_file(cfg.require(prefix + "path")));
    return parsed.graph;
  }
  throw ConfigError("unknown graph family '" + family + "'");
}

std::vector<Sample> range_subset(const Dataset& data, std::size_t count) {
  const auto& pool = data.validation.empty() ? data.train : data.validation;
  return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(count, pool.size()))};
}

Json parse_json(const std::string& text) { return Json::parse(text); }

}  // namespace

Config preset_config(const std::string& name) {
  if (name == "fig4_node_level") return Config::parse(kFig4, "preset:" + name);
  if (name == "fig5_graph_level") return Config::parse(kFig5, "preset:" + name);
  if (name == "fig3_task_families") return Config::parse(kFig3, "preset:" + name);
  if (name == "fig2_topology") return Config::parse(kFig2, "preset:" + name);
  if (name == "ablation_gelu") {
    Config c = Config::parse(kFig4, "preset:" + name);
    c.set("model.activation", "gelu");
    c.set("train.range_samples", "4");
    return c;
  }
  if (name == "ablation_vn") {
    Config c = Config::parse(kFig4, "preset:" + name);
    c.set("model.virtual_node", "true");
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"fig2_topology", "fig3_task_families", "fig4_node_level", "fig5_graph_level", "ablation_gelu",
          "ablation_vn"};
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "command", "seeds", "metrics", "out", "graphs", "graph.*", "task.*", "model.*", "train.*",
      "sampling.*", "estimate.*", "exact.*", "reference.*"};
  return keys;
}

Graph build_graph(const Config& cfg, std::uint64_t seed_offset) {
  return build_graph_at(cfg, "graph.", seed_offset);
}

std::vector<Metric> config_metrics(const Config& cfg) {
  std::vector<Metric> out;
  for (const auto& m : cfg.strings("metrics", {"spd", "res"})) {
    if (m == "spd" || m == "SPD") {
      out.push_back(Metric::kSpd);
    } else if (m == "res" || m == "RES") {
      out.push_back(Metric::kResistance);
    } else {
      throw ConfigError("metrics: unknown metric '" + m + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> config_seeds(const Config& cfg) {
  std::vector<std::uint64_t> out;
  for (auto s : cfg.counts("seeds", {0})) out.push_back(s);
  if (out.empty()) throw ConfigError("seeds: empty list");
  return out;
}

TargetFn ResolvedTask::target() const {
  if (linear) return node_target(*linear);
  if (node_pairwise) return node_target(*node_pairwise);
  return graph_target(*graph_pairwise);
}

ResolvedTask resolve_task(const std::string& family, unsigned k, const Config& cfg, const Graph& g) {
  ResolvedTask t;
  t.family = family;
  t.k = k;
  const bool loops = cfg.flag("task.self_loops", true);
  if (family == "k_power") {
    t.linear = k_power(g, k, loops);
  } else if (family == "k_rectangle") {
    t.linear = k_rectangle(g, k);
  } else if (family == "k_dirac") {
    t.linear = k_dirac(g, k);
  } else if (family == "custom") {
    Matrix w = matrix_from_csv(read_file(cfg.require("task.weights")));
    if (w.rows() != g.num_nodes()) {
      throw ConfigError("task.weights: " + shape_string(w) + " matrix for a graph with " +
                        std::to_string(g.num_nodes()) + " nodes");
    }
    t.linear = custom_task(std::move(w));
  } else if (family == "squared_difference_node") {
    t.node_pairwise = squared_difference_node_spec(g, k);
  } else if (family == "squared_difference_graph") {
    t.graph_pairwise = squared_difference_graph_spec(g, k);
  } else if (family == "power_graph") {
    t.graph_pairwise = power_weighted_graph_spec(g, k, loops);
  } else {
    throw ConfigError("unknown task family '" + family + "'");
  }
  return t;
}

ModelConfig model_config(const Config& cfg, std::size_t depth) {
  ModelConfig m;
  m.depth = depth;
  m.hidden_dim = cfg.count("model.hidden_dim", 64);
  m.in_channels = 1;
  m.out_channels = 1;
  const std::string act = cfg.str("model.activation", "identity");
  if (act != "identity" && act != "gelu") throw ConfigError("model.activation: expected identity or gelu");
  m.activation = act == "gelu" ? Activation::kGelu : Activation::kIdentity;
  m.residual = cfg.flag("model.residual", true);
  m.virtual_node = cfg.flag("model.virtual_node", false);
  const std::string head = cfg.str("model.head", "node");
  if (head != "node" && head != "mean_pool") throw ConfigError("model.head: expected node or mean_pool");
  m.head = head == "mean_pool" ? Head::kMeanPool : Head::kNodeRegression;
  m.self_loops = cfg.flag("model.self_loops", true);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

TrainConfig train_config(const Config& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.lr = cfg.number("train.lr", 1e-3);
  t.epochs = cfg.count("train.epochs", 20);
  t.batch = cfg.count("train.batch", 32);
  const std::string opt = cfg.str("train.optimizer", "adam");
  if (opt != "adam" && opt != "sgd") throw ConfigError("train.optimizer: expected adam or sgd");
  t.optimizer = opt == "adam" ? Optimizer::kAdam : Optimizer::kSgd;
  t.seed = seed;
  t.range_samples = cfg.count("train.range_samples", 4);
  t.track_hessian = cfg.flag("train.track_hessian", false);
  if (t.batch == 0) throw ConfigError("train.batch must be >= 1");
  return t;
}

SamplingConfig sampling_config(const Config& cfg) {
  SamplingConfig s;
  s.p_node_in = cfg.number("sampling.p_node_in", 1.0);
  s.p_node_out = cfg.number("sampling.p_node_out", 1.0);
  s.p_chan_in = cfg.number("sampling.p_chan_in", 1.0);
  s.p_chan_out = cfg.number("sampling.p_chan_out", 1.0);
  s.min_nodes = cfg.count("sampling.min_nodes", 16);
  s.max_nodes = cfg.count("sampling.max_nodes", 256);
  s.seed = cfg.count("sampling.seed", 0);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  for (std::string_view line : csv_lines(text)) {
    if (line.front() == '#') continue;
    const auto fields = split_csv(line);
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw std::invalid_argument("matrix csv: row " + std::to_string(rows + 1) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    }
    for (auto f : fields) values.push_back(parse_double(f));
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("matrix csv: no rows");
  return Matrix(rows, cols, std::move(values));
}

// task-range ---------------------------------------------------------------

std::vector<TaskRangeRow> compute_task_ranges(const Config& cfg) {
  const auto families = cfg.strings("task.families", {cfg.str("task.family", "k_power")});
  const auto ks = cfg.counts("task.k", {1});
  const auto metrics = config_metrics(cfg);
  const auto seeds = config_seeds(cfg);
  for (const auto& f : families)
    if (f != "k_power" && f != "k_rectangle" && f != "k_dirac" && f != "custom")
      throw ConfigError("task-range supports linear task families only, got '" + f + "'");

  const auto prefixes = graph_prefixes(cfg);
  if (prefixes.size() != 1) throw ConfigError("compute_task_ranges: expects a single graph spec");
  std::vector<std::vector<TaskRangeRow>> per_seed(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t si) {
    const Graph g = build_graph_at(cfg, prefixes.front().second, seeds[si]);
    std::vector<DistanceMatrix> dist;
    for (Metric m : metrics) dist.push_back(distances(g, m));
    for (const auto& f : families) {
      for (auto k : ks) {
        const ResolvedTask t = resolve_task(f, static_cast<unsigned>(k), cfg, g);
        const JacobianTensor j = t.linear->jacobian();
        for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
          const RangeReport r = node_range(j, dist[mi]);
          per_seed[si].push_back({f, static_cast<unsigned>(k), seeds[si], metrics[mi], r.graph_range,
                                  r.degenerate_count});
        }
      }
    }
  });
  std::vector<TaskRangeRow> rows;
  for (auto& v : per_seed) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

std::string task_range_csv(const std::vector<TaskRangeRow>& rows) {
  std::string out = "family,k,seed,metric,graph_range,degenerate_count\n";
  for (const auto& r : rows) {
    out += r.family + "," + std::to_string(r.k) + "," + std::to_string(r.seed) + "," + metric_column(r.metric) +
           "," + format_double(r.graph_range) + "," + std::to_string(r.degenerate_count) + "\n";
  }
  return out;
}

std::vector<TaskRangeRow> parse_task_range_csv(std::string_view text) {
  const auto lines = csv_lines(text);
  if (lines.empty() || lines.front() != "family,k,seed,metric,graph_range,degenerate_count")
    throw std::invalid_argument("task range csv: unexpected header");
  std::vector<TaskRangeRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    if (f.size() != 6) throw std::invalid_argument("task range csv: line " + std::to_string(i + 1));
    rows.push_back({std::string(f[0]), static_cast<unsigned>(parse_unsigned(f[1])), parse_unsigned(f[2]),
                    parse_metric(f[3] == "spd" ? "SPD" : "RES"), parse_double(f[4]),
                    static_cast<std::size_t>(parse_unsigned(f[5]))});
  }
  return rows;
}

Json summarize_task_ranges(const std::vector<TaskRangeRow>& rows) {
  std::map<std::tuple<std::string, unsigned, std::string>, std::vector<double>> groups;
  std::vector<std::tuple<std::string, unsigned, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.family, r.k, metric_column(r.metric));
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.graph_range);
  }
  Json out = Json::array();
  for (const auto& key : order) {
    const auto& [family, k, metric] = key;
    Json j{{"family", family}, {"k", k}, {"metric", metric}, {"seeds", groups[key].size()}};
    j["graph_range"] = stats_json(groups[key]);
    out.push_back(j);
  }
  return out;
}

// train-range --------------------------------------------------------------

namespace {
const char* kTraceHeader = "epoch,seed,depth,mse_train,mse_val,range_spd,range_res";
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  const bool eta = !rows.empty() && rows.front().eta_res.has_value();
  std::string out = std::string(kTraceHeader) + (eta ? ",eta_res\n" : "\n");
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.seed) + "," + std::to_string(r.depth) + "," +
           format_double(r.mse_train) + "," + format_double(r.mse_val) + "," + format_double(r.range_spd) +
           "," + format_double(r.range_res);
    if (eta) out += "," + format_double(r.eta_res.value_or(std::nan("")));
    out += "\n";
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  const auto lines = csv_lines(text);
  if (lines.empty()) throw std::invalid_argument("trace csv: empty");
  const bool eta = lines.front() == std::string(kTraceHeader) + ",eta_res";
  if (!eta && lines.front() != kTraceHeader) throw std::invalid_argument("trace csv: unexpected header");
  std::vector<TraceRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    if (f.size() != (eta ? 8u : 7u)) throw std::invalid_argument("trace csv: line " + std::to_string(i + 1));
    TraceRow r;
    r.epoch = parse_unsigned(f[0]);
    r.seed = parse_unsigned(f[1]);
    r.depth = parse_unsigned(f[2]);
    r.mse_train = parse_double(f[3]);
    r.mse_val = parse_double(f[4]);
    r.range_spd = parse_double(f[5]);
    r.range_res = parse_double(f[6]);
    if (eta) r.eta_res = parse_double(f[7]);
    rows.push_back(r);
  }
  return rows;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Json summarize_traces(const std::vector<TraceRow>& rows) {
  // depth -> epoch -> seed -> row
  std::map<std::size_t, std::map<std::size_t, std::map<std::uint64_t, const TraceRow*>>> grid;
  for (const auto& r : rows) grid[r.depth][r.epoch][r.seed] = &r;

  Json out;
  Json depths = Json::array();
  std::vector<double> pooled_range, pooled_eta;
  bool any_eta = false;
  for (const auto& [depth, epochs] : grid) {
    Json d{{"depth", depth}};
    Json ep = Json::array();
    std::vector<double> mean_range, mean_eta;
    bool eta = true;
    for (const auto& [epoch, seeds] : epochs) {
      std::vector<double> mse_train, mse_val, spd, res, et;
      for (const auto& [seed, r] : seeds) {
        mse_train.push_back(r->mse_train);
        mse_val.push_back(r->mse_val);
        spd.push_back(r->range_spd);
        res.push_back(r->range_res);
        if (r->eta_res) et.push_back(*r->eta_res);
      }
      Json e{{"epoch", epoch},
             {"seeds", seeds.size()},
             {"mse_train", stats_json(mse_train)},
             {"mse_val", stats_json(mse_val)},
             {"range_spd", stats_json(spd)},
             {"range_res", stats_json(res)}};
      mean_range.push_back(stats(res).mean);
      if (et.size() == seeds.size()) {
        e["eta_res"] = stats_json(et);
        mean_eta.push_back(stats(et).mean);
      } else {
        eta = false;
      }
      ep.push_back(e);
    }
    d["final"] = ep.back();
    if (eta && mean_eta.size() >= 2) {
      any_eta = true;
      d["corr_range_eta"] = pearson(mean_range, mean_eta);
      pooled_range.insert(pooled_range.end(), mean_range.begin(), mean_range.end());
      pooled_eta.insert(pooled_eta.end(), mean_eta.begin(), mean_eta.end());
    }
    d["epochs"] = ep;
    depths.push_back(d);
  }
  out["depths"] = depths;
  if (any_eta) out["pooled_corr_range_eta"] = pearson(pooled_range, pooled_eta);
  return out;
}

Json task_reference(const Config& cfg, const Graph& g) {
  const std::string family = cfg.str("task.family", "k_power");
  const unsigned k = static_cast<unsigned>(cfg.count("task.k", 1));
  const ResolvedTask task = resolve_task(family, k, cfg, g);
  const auto metrics = config_metrics(cfg);
  std::vector<DistanceMatrix> dist;
  for (Metric m : metrics) dist.push_back(distances(g, m));

  Json ref{{"family", family}, {"k", k}};
  if (task.linear) {
    auto exact_for = [&](const LinearTask& t) {
      Json j;
      const JacobianTensor jac = t.jacobian();
      for (std::size_t mi = 0; mi < metrics.size(); ++mi)
        j["range_" + metric_column(metrics[mi])] = node_range(jac, dist[mi]).graph_range;
      return j;
    };
    ref["exact"] = exact_for(*task.linear);
    if (family == "k_power") {
      Json variants = Json::array();
      for (bool loops : {true, false}) {
        Json v = exact_for(k_power(g, k, loops));
        v["self_loops"] = loops;
        variants.push_back(v);
      }
      ref["variants"] = variants;
      if (cfg.has("reference.paper_range")) {
        const double paper = cfg.number("reference.paper_range", 0.0);
        const double tol = cfg.number("reference.tolerance", 0.1);
        Json matched = Json::array();
        for (const auto& v : variants)
          if (v.contains("range_res") && std::abs(v["range_res"].get<double>() - paper) <= tol)
            matched.push_back(v["self_loops"]);
        ref["paper_range"] = paper;
        ref["tolerance"] = tol;
        ref["variants_matching_paper"] = matched;
      }
    }
    return ref;
  }

  // X-dependent tasks: average over the samples the trainer tracks.
  const Dataset data = make_dataset(g, task.target(), cfg.count("train.samples", 500),
                                    cfg.count("train.data_seed", 0));
  const auto samples = range_subset(data, std::max<std::size_t>(1, cfg.count("train.range_samples", 4)));
  Json exact;
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    std::vector<RangeReport> reports;
    for (const Sample& s : samples) {
      if (task.node_pairwise) {
        reports.push_back(node_range(pairwise_node_task(*task.node_pairwise, g, s.x).jacobian, dist[mi]));
      } else {
        reports.push_back(hessian_node_range(pairwise_graph_task(*task.graph_pairwise, g, s.x).hessian, dist[mi]));
      }
    }
    exact[(task.graph_level() ? "eta_" : "range_") + metric_column(metrics[mi])] = dataset_range(reports);
  }
  ref["exact"] = exact;
  return ref;
}

TrainRangeResult run_train_range(const Config& cfg) {
  const Graph g = build_graph(cfg);
  const std::string family = cfg.str("task.family", "k_power");
  const unsigned k = static_cast<unsigned>(cfg.count("task.k", 1));
  const ResolvedTask task = resolve_task(family, k, cfg, g);
  const auto depths = cfg.counts("model.depth", {1});
  const auto seeds = config_seeds(cfg);

  const Dataset data = make_dataset(g, task.target(), cfg.count("train.samples", 500),
                                    cfg.count("train.data_seed", 0));
  TrainRangeResult result;
  for (std::size_t depth : depths) {
    const ModelConfig mc = model_config(cfg, depth);
    if (task.graph_level() != (mc.head == Head::kMeanPool)) {
      throw ConfigError("model.head must be mean_pool exactly when the task is graph-level");
    }
    for (std::uint64_t seed : seeds) {
      TrainConfig tc = train_config(cfg, seed);
      if (tc.track_hessian && mc.head != Head::kMeanPool)
        throw ConfigError("train.track_hessian requires model.head = mean_pool");
      TrainRun run;
      run.depth = depth;
      run.seed = seed;
      run.model = mc;
      TrainTrace trace;
      try {
        TrainResult tr = train(mc, g, data, tc);
        run.params = std::move(tr.params);
        trace = std::move(tr.trace);
      } catch (const TrainingDiverged& e) {
        run.diverged = true;
        run.error = e.what();
        trace = e.trace();
        result.diverged = true;
      }
      for (const auto& rec : trace.records) {
        run.rows.push_back({rec.epoch, seed, depth, rec.mse_train, rec.mse_val, rec.range_spd, rec.range_res,
                            rec.eta_res});
        run.epoch_wall_seconds.push_back(rec.wall_seconds);
      }
      result.runs.push_back(std::move(run));
    }
  }
  std::vector<TraceRow> all;
  for (const auto& r : result.runs) all.insert(all.end(), r.rows.begin(), r.rows.end());
  result.summary = summarize_traces(all);
  result.reference = task_reference(cfg, g);
  return result;
}

// estimate -----------------------------------------------------------------

std::vector<EstimateRow> compare_estimates(const ModelConfig& model, const Parameters& params,
                                           const Graph& g, const std::vector<Sample>& samples,
                                           const std::vector<Metric>& metrics,
                                           const SamplingConfig& sampling,
                                           const std::vector<std::uint64_t>& mask_seeds) {
  if (samples.empty()) throw std::invalid_argument("compare_estimates: no samples");
  const Propagation prop = make_propagation(model, g);
  std::vector<DistanceMatrix> dist;
  for (Metric m : metrics) dist.push_back(distances(g, m));

  std::vector<double> exact(metrics.size());
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    std::vector<RangeReport> reports;
    for (const Sample& s : samples) reports.push_back(node_range(model_jacobian(model, params, prop, s.x), dist[mi]));
    exact[mi] = dataset_range(reports);
  }

  std::vector<EstimateRow> rows;
  for (std::uint64_t ms : mask_seeds) {
    std::vector<std::vector<RangeReport>> reports(metrics.size());
    EstimateRow proto;
    for (std::size_t si = 0; si < samples.size(); ++si) {
      SamplingConfig sc = sampling;
      sc.seed = Philox(ms).split(si).next_u64();
      const std::size_t d_out = model.head == Head::kMeanPool ? model.hidden_dim : model.out_channels;
      const MaskSet masks = draw_masks(prop.nodes, model.in_channels, d_out, sc);
      const JacobianTensor j = model_jacobian(model, params, prop, samples[si].x, &masks);
      for (std::size_t mi = 0; mi < metrics.size(); ++mi) reports[mi].push_back(node_range(j, dist[mi]));
      if (si == 0) {
        proto.selected_out_nodes = j.selected_out_nodes();
        proto.selected_out_channels = static_cast<std::size_t>(
            std::count(j.out_channel_mask.begin(), j.out_channel_mask.end(), true));
        proto.selected_in_channels = static_cast<std::size_t>(
            std::count(j.in_channel_mask.begin(), j.in_channel_mask.end(), true));
      }
    }
    for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
      EstimateRow r = proto;
      r.mask_seed = ms;
      r.metric = metrics[mi];
      r.estimate = dataset_range(reports[mi]);
      r.exact = exact[mi];
      r.input_masking_bias = sampling.p_node_in < 1.0 || sampling.p_chan_in < 1.0;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string estimate_csv(const std::vector<EstimateRow>& rows) {
  std::string out =
      "mask_seed,metric,estimate,exact,abs_error,selected_out_nodes,selected_out_channels,"
      "selected_in_channels,input_masking_bias\n";
  for (const auto& r : rows) {
    out += std::to_string(r.mask_seed) + "," + metric_column(r.metric) + "," + format_double(r.estimate) + "," +
           format_double(r.exact) + "," + format_double(std::abs(r.estimate - r.exact)) + "," +
           std::to_string(r.selected_out_nodes) + "," + std::to_string(r.selected_out_channels) + "," +
           std::to_string(r.selected_in_channels) + "," + (r.input_masking_bias ? "1" : "0") + "\n";
  }
  return out;
}

// commands -----------------------------------------------------------------

CommandOutput cmd_task_range(const Config& cfg) {
  cfg.check_known(known_config_keys());
  CommandOutput out;
  const auto dir = out_dir(cfg);
  Json summary;
  for (const auto& [name, prefix] : graph_prefixes(cfg)) {
    // Re-root the named graph spec at "graph." for compute_task_ranges.
    Config rooted;
    for (const auto& key : cfg.keys()) {
      if (key == "graphs" || key.rfind("graph.", 0) == 0) continue;
      rooted.set(key, *cfg.get(key));
    }
    for (const auto& key : cfg.keys())
      if (key.rfind(prefix, 0) == 0) rooted.set("graph." + key.substr(prefix.size()), *cfg.get(key));
    const auto rows = compute_task_ranges(rooted);
    write_file(dir / ("task_range_" + name + ".csv"), task_range_csv(rows), out.files);
    summary[name] = summarize_task_ranges(rows);
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n", out.files);
  write_file(dir / "config.txt", cfg.echo(), out.files);
  return out;
}

CommandOutput cmd_train_range(const Config& cfg) {
  cfg.check_known(known_config_keys());
  CommandOutput out;
  const auto dir = out_dir(cfg);
  const auto start = std::chrono::steady_clock::now();
  const TrainRangeResult r = run_train_range(cfg);
  Json timing{{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  Json failures = Json::array();
  for (const auto& run : r.runs) {
    const std::string tag = "d" + std::to_string(run.depth) + "_s" + std::to_string(run.seed);
    timing["epoch_wall_seconds"][tag] = run.epoch_wall_seconds;
    write_file(dir / ("trace_" + tag + ".csv"), trace_csv(run.rows), out.files);
    if (run.diverged) {
      failures.push_back({{"depth", run.depth}, {"seed", run.seed}, {"error", run.error}});
    } else {
      write_file(dir / ("model_" + tag + ".json"), checkpoint_to_json(run.model, run.params) + "\n", out.files);
    }
  }
  write_file(dir / "summary.json", r.summary.dump(2) + "\n", out.files);
  Json reference = r.reference;
  reference["diverged_runs"] = failures;
  write_file(dir / "reference.json", reference.dump(2) + "\n", out.files);
  write_file(dir / "timing.json", timing.dump(2) + "\n", out.files);
  write_file(dir / "config.txt", cfg.echo(), out.files);
  if (r.diverged) out.status = 3;
  return out;
}

CommandOutput cmd_exact(const Config& cfg) {
  cfg.check_known(known_config_keys());
  CommandOutput out;
  const Graph g = build_graph(cfg);
  const std::string family = cfg.str("task.family", "k_power");
  const unsigned k = static_cast<unsigned>(cfg.count("task.k", 1));
  const ResolvedTask task = resolve_task(family, k, cfg, g);

  Matrix x(g.num_nodes(), 1);
  Philox rng(cfg.count("exact.seed", 0));
  for (double& v : x.values()) v = rng.normal();

  Json reports;
  Json oracle;
  for (Metric m : config_metrics(cfg)) {
    const DistanceMatrix d = distances(g, m);
    RangeReport rep;
    if (task.linear) {
      rep = node_range(task.linear->jacobian(), d);
    } else if (task.node_pairwise) {
      rep = node_range(pairwise_node_task(*task.node_pairwise, g, x).jacobian, d);
    } else {
      rep = hessian_node_range(pairwise_graph_task(*task.graph_pairwise, g, x).hessian, d);
    }
    reports[std::string(metric_tag(m))] = parse_json(to_json(rep));

    if (m != Metric::kSpd) continue;
    // Closed forms under SPD.
    const bool graph_form = family == "squared_difference_graph";
    const bool node_form = family == "k_rectangle";
    const bool dirac = family == "k_dirac";
    if (!graph_form && !node_form && !dirac && family != "squared_difference_node") continue;
    Json nodes = Json::array();
    double max_delta = 0.0;
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      if (khop_neighborhood(g, u, std::max(k, 1u)).empty()) continue;
      double value;
      if (dirac) {
        if (khop_shells(g, u, k).back().empty()) continue;
        value = k;
      } else {
        value = graph_form ? analytic_graph_range(g, u, k) : analytic_node_range(g, u, k);
      }
      const double delta = std::abs(value - rep.node_ranges[u]);
      nodes.push_back({{"node", u}, {"analytic", value}, {"delta", delta}});
      max_delta = std::max(max_delta, delta);
    }
    oracle["nodes"] = nodes;
    if (family == "squared_difference_node") {
      oracle["kind"] = "expected value over Gaussian inputs (ratio of expectations); deltas are per-draw";
    } else {
      oracle["kind"] = "exact";
      oracle["max_delta"] = max_delta;
    }
  }
  Json doc{{"task", {{"family", family}, {"k", k}}}, {"reports", reports}};
  if (!oracle.is_null()) doc["oracle"] = oracle;
  write_file(out_dir(cfg) / "exact.json", doc.dump(2) + "\n", out.files);
  return out;
}

CommandOutput cmd_estimate(const Config& cfg) {
  cfg.check_known(known_config_keys());
  CommandOutput out;
  const Graph g = build_graph(cfg);
  const auto [model, params] = checkpoint_from_json(read_file(cfg.require("estimate.checkpoint")));
  const std::string family = cfg.str("task.family", "k_power");
  const ResolvedTask task = resolve_task(family, static_cast<unsigned>(cfg.count("task.k", 1)), cfg, g);
  const Dataset data = make_dataset(g, task.target(), cfg.count("train.samples", 500),
                                    cfg.count("train.data_seed", 0));
  const auto samples = range_subset(data, cfg.count("estimate.samples", 4));
  std::vector<std::uint64_t> mask_seeds;
  for (auto s : cfg.counts("sampling.mask_seeds", {0, 1, 2, 3, 4, 5, 6, 7})) mask_seeds.push_back(s);
  const auto rows = compare_estimates(model, params, g, samples, config_metrics(cfg), sampling_config(cfg),
                                      mask_seeds);
  std::map<std::string, std::vector<double>> errors;
  for (const auto& r : rows) errors[metric_column(r.metric)].push_back(std::abs(r.estimate - r.exact));
  Json summary;
  for (const auto& [m, e] : errors) summary[m] = {{"mean_abs_error", stats(e).mean}, {"max_abs_error", stats(e).max}};
  const auto dir = out_dir(cfg);
  write_file(dir / "estimate.csv", estimate_csv(rows), out.files);
  write_file(dir / "summary.json", summary.dump(2) + "\n", out.files);
  write_file(dir / "config.txt", cfg.echo(), out.files);
  return out;
}

CommandOutput cmd_gen_graph(const Config& cfg) {
  cfg.check_known(known_config_keys());
  CommandOutput out;
  const auto dir = out_dir(cfg);
  const auto seeds = config_seeds(cfg);
  for (std::uint64_t seed : seeds) {
    const Graph g = build_graph(cfg, seed);
    const std::string tag = seeds.size() == 1 ? "" : "_s" + std::to_string(seed);
    write_file(dir / ("graph" + tag + ".txt"), to_edge_list(g), out.files);
    for (Metric m : config_metrics(cfg))
      write_file(dir / ("distances_" + metric_column(m) + tag + ".csv"), to_csv(distances(g, m)), out.files);
  }
  return out;
}

}  // namespace lrange
