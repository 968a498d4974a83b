#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lrange/config.hpp"
#include "lrange/experiments.hpp"
#include "lrange/linalg.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Options {
  std::string config_path;
  std::string preset;
  std::string out;
  std::string seeds;
  std::string metric;
};

lrange::Config load_config(const Options& o) {
  lrange::Config cfg;
  if (!o.preset.empty()) cfg = lrange::preset_config(o.preset);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw lrange::ConfigError("cannot read config '" + o.config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg.merge(ss.str(), o.config_path);
  }
  if (!o.out.empty()) cfg.set("out", o.out);
  if (!o.seeds.empty()) cfg.set("seeds", o.seeds);
  if (o.metric == "both") {
    cfg.set("metrics", "spd,res");
  } else if (o.metric == "spd" || o.metric == "res") {
    cfg.set("metrics", o.metric);
  } else if (!o.metric.empty()) {
    throw lrange::ConfigError("--metric: expected spd, res or both");
  }
  return cfg;
}

int run(const Options& o, const std::function<lrange::CommandOutput(const lrange::Config&)>& cmd) {
  try {
    const lrange::Config cfg = load_config(o);
    const lrange::CommandOutput out = cmd(cfg);
    for (const auto& f : out.files) std::cout << f << "\n";
    if (out.status != 0) std::cerr << "error: at least one run diverged; see reference.json\n";
    return out.status;
  } catch (const lrange::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const lrange::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range measures for graph operators and GNNs"};
  app.require_subcommand(1);
  Options opts;
  int status = 0;

  auto add = [&](const std::string& name, const std::string& help,
                 lrange::CommandOutput (*cmd)(const lrange::Config&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "key = value config file");
    sub->add_option("--preset", opts.preset, "named base config")
        ->check(CLI::IsMember(lrange::preset_names()));
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--seeds", opts.seeds, "comma-separated seeds, a:b ranges allowed");
    sub->add_option("--metric", opts.metric, "spd, res or both")->check(CLI::IsMember({"spd", "res", "both"}));
    sub->callback([&, cmd] { status = run(opts, cmd); });
  };
  add("task-range", "ranges of linear task families over a k sweep", lrange::cmd_task_range);
  add("train-range", "train GCNs and track their range per epoch", lrange::cmd_train_range);
  add("exact", "exact range report of a task, with closed-form comparison", lrange::cmd_exact);
  add("estimate", "subsampled range estimate of a checkpointed model", lrange::cmd_estimate);
  add("gen-graph", "write a graph and its distance matrices", lrange::cmd_gen_graph);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  return status;
}
