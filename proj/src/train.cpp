#include "lrange/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lrange/parallel.hpp"
#include "lrange/range.hpp"
#include "lrange/rng.hpp"

namespace lrange {

TargetFn node_target(const LinearTask& task) {
  return [task](const Matrix& x) { return task.apply(x); };
}

TargetFn node_target(const PairwiseTaskSpec& spec) {
  return [spec](const Matrix& x) { return pairwise_node_outputs(spec, x); };
}

TargetFn graph_target(const PairwiseTaskSpec& spec) {
  return [spec](const Matrix& x) {
    const auto y = pairwise_graph_outputs(spec, x);
    return Matrix(1, y.size(), y);
  };
}

Dataset make_dataset(const Graph& g, const TargetFn& task, std::size_t num_samples,
                     std::uint64_t seed, std::size_t in_channels) {
  Philox rng(seed);
  const std::size_t n_train = num_samples * 8 / 10;
  Dataset data;
  for (std::size_t i = 0; i < num_samples; ++i) {
    Sample s;
    s.x = Matrix(g.num_nodes(), in_channels);
    for (double& v : s.x.values()) v = rng.normal();
    s.target = task(s.x);
    (i < n_train ? data.train : data.validation).push_back(std::move(s));
  }
  return data;
}

double evaluate_mse(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                    const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const ForwardResult fr = forward(cfg, params, prop, samples[i].x);
    const Matrix& y = fr.output_value();
    const Matrix& t = samples[i].target;
    if (y.rows() != t.rows() || y.cols() != t.cols()) {
      throw std::invalid_argument("evaluate_mse: target is " + shape_string(t) + ", model output is " +
                                  shape_string(y));
    }
    double s = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double e = y.data()[k] - t.data()[k];
      s += e * e;
    }
    losses[i] = s / static_cast<double>(y.size());
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

ModelRanges model_dataset_range(const ModelConfig& cfg, const Parameters& params,
                                const Propagation& prop, const std::vector<Sample>& samples,
                                const DistanceMatrix& spd, const DistanceMatrix& res) {
  if (samples.empty()) throw std::invalid_argument("model_dataset_range: no samples");
  std::vector<RangeReport> by_spd, by_res;
  for (const Sample& s : samples) {
    const JacobianTensor j = model_jacobian(cfg, params, prop, s.x);
    by_spd.push_back(node_range(j, spd));
    by_res.push_back(node_range(j, res));
  }
  return {dataset_range(by_spd), dataset_range(by_res)};
}

double model_dataset_eta(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                         const std::vector<Sample>& samples, const DistanceMatrix& res) {
  if (samples.empty()) throw std::invalid_argument("model_dataset_eta: no samples");
  std::vector<RangeReport> reports;
  for (const Sample& s : samples)
    reports.push_back(hessian_node_range(model_hessian_scalar(cfg, params, prop, s.x), res));
  return dataset_range(reports);
}

namespace {

class AdamState {
 public:
  explicit AdamState(const Parameters& p) {
    for (const Matrix* m : p.tensors()) {
      m1_.emplace_back(m->rows(), m->cols());
      m2_.emplace_back(m->rows(), m->cols());
    }
  }

  void step(Parameters& p, const std::vector<Matrix>& grads, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    auto tensors = p.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      double* w = tensors[i]->data();
      const double* g = grads[i].data();
      double* m = m1_[i].data();
      double* v = m2_[i].data();
      for (std::size_t k = 0; k < grads[i].size(); ++k) {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    }
  }

 private:
  std::vector<Matrix> m1_, m2_;
  std::size_t t_ = 0;
};

void sgd_step(Parameters& p, const std::vector<Matrix>& grads, double lr) {
  auto tensors = p.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    double* w = tensors[i]->data();
    const double* g = grads[i].data();
    for (std::size_t k = 0; k < grads[i].size(); ++k) w[k] -= lr * g[k];
  }
}

}  // namespace

TrainResult train(const ModelConfig& cfg, const Graph& g, const Dataset& data, const TrainConfig& tc) {
  if (data.train.empty()) throw std::invalid_argument("train: empty training set");
  if (tc.batch == 0) throw std::invalid_argument("train: batch must be >= 1");
  if (tc.track_hessian && cfg.head != Head::kMeanPool)
    throw std::invalid_argument("train: Hessian tracking needs a pooled head");

  const auto start = std::chrono::steady_clock::now();
  const Propagation prop = make_propagation(cfg, g);
  TrainResult result{init_parameters(cfg, tc.seed), {}};
  Parameters& params = result.params;

  std::optional<DistanceMatrix> spd, res;
  std::vector<Sample> range_set;
  if (tc.range_samples > 0) {
    spd = spd_all_pairs(g);
    res = resistance_all_pairs(g);
    const auto& pool = data.validation.empty() ? data.train : data.validation;
    range_set.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(tc.range_samples, pool.size())));
  }

  auto record = [&](std::size_t epoch) {
    EpochRecord r;
    r.epoch = epoch;
    r.mse_train = evaluate_mse(cfg, params, prop, data.train);
    r.mse_val = evaluate_mse(cfg, params, prop, data.validation);
    if (!range_set.empty()) {
      const ModelRanges mr = model_dataset_range(cfg, params, prop, range_set, *spd, *res);
      r.range_spd = mr.spd;
      r.range_res = mr.res;
      if (tc.track_hessian) r.eta_res = model_dataset_eta(cfg, params, prop, range_set, *res);
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.records.push_back(r);
    if (!std::isfinite(r.mse_train) || !std::isfinite(r.mse_val)) {
      throw TrainingDiverged("train: loss is not finite at epoch " + std::to_string(epoch),
                             result.trace);
    }
  };

  record(0);
  AdamState adam(params);
  Philox shuffle_root = Philox(tc.seed).split(0x5348554646ULL);
  std::vector<std::size_t> order(data.train.size());
  const std::size_t num_tensors = params.tensors().size();

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Philox rng = shuffle_root.split(epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t b0 = 0; b0 < order.size(); b0 += tc.batch) {
      const std::size_t bsz = std::min(tc.batch, order.size() - b0);
      std::vector<std::vector<Matrix>> per_sample(bsz);
      parallel_for(bsz, [&](std::size_t i) {
        const Sample& s = data.train[order[b0 + i]];
        ForwardResult fr = forward(cfg, params, prop, s.x, {.input_grad = false, .param_grad = true});
        const ad::Var loss = fr.tape.squared_error(fr.output, s.target);
        auto adj = fr.tape.backward(loss, Matrix(1, 1, 1.0));
        for (const ad::Var& p : fr.params) per_sample[i].push_back(std::move(adj[p.id]));
      });
      std::vector<Matrix> grads;
      for (const Matrix* m : params.tensors()) grads.emplace_back(m->rows(), m->cols());
      for (std::size_t i = 0; i < bsz; ++i)
        for (std::size_t t = 0; t < num_tensors; ++t)
          if (!per_sample[i][t].empty()) grads[t] += per_sample[i][t];
      for (Matrix& gm : grads) gm *= 1.0 / static_cast<double>(bsz);

      if (tc.optimizer == Optimizer::kAdam) {
        adam.step(params, grads, tc.lr);
      } else {
        sgd_step(params, grads, tc.lr);
      }
    }
    record(epoch);
  }
  return result;
}

}  // namespace lrange
