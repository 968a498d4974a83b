#include "lrange/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "lrange/parallel.hpp"
#include "lrange/rng.hpp"

namespace lrange {

void ModelConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("model: depth must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("model: hidden_dim must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("model: channels must be >= 1");
}

std::vector<Matrix*> Parameters::tensors() {
  std::vector<Matrix*> out{&input_proj};
  for (auto& w : layers) out.push_back(&w);
  out.push_back(&output_weight);
  out.push_back(&output_bias);
  return out;
}

std::vector<const Matrix*> Parameters::tensors() const {
  std::vector<const Matrix*> out{&input_proj};
  for (const auto& w : layers) out.push_back(&w);
  out.push_back(&output_weight);
  out.push_back(&output_bias);
  return out;
}

std::vector<std::string> Parameters::names() const {
  std::vector<std::string> out{"input_proj"};
  for (std::size_t l = 0; l < layers.size(); ++l) out.push_back("layer" + std::to_string(l));
  out.push_back("output_weight");
  out.push_back("output_bias");
  return out;
}

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Philox root(seed);
  auto uniform_init = [&](std::size_t rows, std::size_t cols, std::uint64_t stream) {
    Philox rng = root.split(stream);
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Matrix m(rows, cols);
    for (double& v : m.values()) v = bound * (2.0 * rng.uniform() - 1.0);
    return m;
  };
  Parameters p;
  p.seed = seed;
  p.input_proj = uniform_init(cfg.in_channels, cfg.hidden_dim, 0);
  for (std::size_t l = 0; l < cfg.depth; ++l)
    p.layers.push_back(uniform_init(cfg.hidden_dim, cfg.hidden_dim, 1 + l));
  p.output_weight = uniform_init(cfg.hidden_dim, cfg.out_channels, 1 + cfg.depth);
  p.output_bias = Matrix(1, cfg.out_channels);
  return p;
}

Propagation make_propagation(const ModelConfig& cfg, const Graph& g) {
  Propagation prop;
  prop.nodes = g.num_nodes();
  if (cfg.virtual_node) {
    const std::size_t n = g.num_nodes();
    prop.adjacency = std::make_shared<SparseMatrix>(
        SparseMatrix::from_dense(sym_norm_adjacency(g.with_virtual_node(), cfg.self_loops)));
    Matrix embed(n + 1, n), strip(n, n + 1);
    for (std::size_t u = 0; u < n; ++u) embed(u, u) = strip(u, u) = 1.0;
    prop.embed = std::make_shared<SparseMatrix>(SparseMatrix::from_dense(embed));
    prop.strip = std::make_shared<SparseMatrix>(SparseMatrix::from_dense(strip));
  } else {
    prop.adjacency =
        std::make_shared<SparseMatrix>(SparseMatrix::from_dense(sym_norm_adjacency(g, cfg.self_loops)));
  }
  return prop;
}

namespace {

void check_shapes(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                  const Matrix& x) {
  cfg.validate();
  if (x.rows() != prop.nodes || x.cols() != cfg.in_channels) {
    throw std::invalid_argument("forward: X is " + shape_string(x) + ", expected " +
                                std::to_string(prop.nodes) + "x" + std::to_string(cfg.in_channels));
  }
  if (params.layers.size() != cfg.depth || params.input_proj.rows() != cfg.in_channels ||
      params.input_proj.cols() != cfg.hidden_dim || params.output_weight.rows() != cfg.hidden_dim ||
      params.output_weight.cols() != cfg.out_channels || params.output_bias.cols() != cfg.out_channels) {
    throw std::invalid_argument("forward: parameter shapes do not match the model config");
  }
  for (const auto& w : params.layers)
    if (w.rows() != cfg.hidden_dim || w.cols() != cfg.hidden_dim)
      throw std::invalid_argument("forward: layer weight is " + shape_string(w));
}

}  // namespace

ForwardResult forward(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                      const Matrix& x, ForwardOptions opts) {
  check_shapes(cfg, params, prop, x);
  ForwardResult r;
  ad::Tape& t = r.tape;
  r.input = t.leaf(x, opts.input_grad);
  for (const Matrix* m : params.tensors()) r.params.push_back(t.leaf(*m, opts.param_grad));
  const ad::Var w_in = r.params.front();
  const ad::Var w_out = r.params[cfg.depth + 1];
  const ad::Var b_out = r.params[cfg.depth + 2];

  ad::Var h = r.input;
  if (cfg.virtual_node) h = t.apply(prop.embed, h);
  h = t.matmul(h, w_in);
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    ad::Var z = t.matmul(t.apply(prop.adjacency, h), r.params[1 + l]);
    if (cfg.residual) z = t.add(h, z);
    h = cfg.activation == Activation::kGelu ? t.gelu(z) : z;
  }
  if (cfg.virtual_node) h = t.apply(prop.strip, h);
  r.prepool = h;
  if (cfg.head == Head::kNodeRegression) {
    r.output = t.matmul(h, w_out);
  } else {
    r.output = t.affine(t.mean_pool(h), w_out, b_out);
  }
  return r;
}

ForwardResult forward(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                      const Matrix& x, ForwardOptions opts) {
  return forward(cfg, params, make_propagation(cfg, g), x, opts);
}

namespace {

bool selected(const std::vector<bool>& mask, std::size_t i) { return mask.empty() || mask[i]; }

void copy_mask(std::vector<bool>& dst, const std::vector<bool>& src, std::size_t n, const char* what) {
  if (src.empty()) return;
  if (src.size() != n) {
    throw std::invalid_argument(std::string("model_jacobian: ") + what + " mask has " +
                                std::to_string(src.size()) + " entries, expected " + std::to_string(n));
  }
  dst = src;
}

}  // namespace

JacobianTensor model_jacobian(const ModelConfig& cfg, const Parameters& params,
                              const Propagation& prop, const Matrix& x, const MaskSet* masks) {
  const std::size_t n = prop.nodes, d = cfg.in_channels;
  const bool pooled = cfg.head == Head::kMeanPool;
  const std::size_t c = pooled ? cfg.hidden_dim : cfg.out_channels;

  JacobianTensor jac(n, c, d);
  Matrix xin = x;
  if (masks) {
    copy_mask(jac.out_node_mask, masks->out_nodes, n, "output node");
    copy_mask(jac.in_node_mask, masks->in_nodes, n, "input node");
    copy_mask(jac.out_channel_mask, masks->out_channels, c, "output channel");
    copy_mask(jac.in_channel_mask, masks->in_channels, d, "input channel");
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t b = 0; b < d; ++b)
        if (!selected(masks->in_nodes, v) || !selected(masks->in_channels, b)) xin(v, b) = 0.0;
  }

  const ForwardResult fr = forward(cfg, params, prop, xin, {.input_grad = true, .param_grad = false});
  const ad::Var target = pooled ? fr.prepool : fr.output;
  std::vector<std::pair<std::size_t, std::size_t>> seeds;
  for (std::size_t u = 0; u < n; ++u) {
    if (!jac.out_node_mask[u]) continue;
    for (std::size_t a = 0; a < c; ++a)
      if (jac.out_channel_mask[a]) seeds.emplace_back(u, a);
  }
  parallel_for(seeds.size(), [&](std::size_t i) {
    const auto [u, a] = seeds[i];
    Matrix seed(n, c);
    seed(u, a) = 1.0;
    const auto adj = fr.tape.backward(target, seed);
    const Matrix& gx = adj[fr.input.id];
    auto blk = jac.block(u, a);
    if (!gx.empty()) std::copy(gx.values().begin(), gx.values().end(), blk.begin());
  });
  return jac;
}

JacobianTensor model_jacobian(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                              const Matrix& x, const MaskSet* masks) {
  return model_jacobian(cfg, params, make_propagation(cfg, g), x, masks);
}

HessianTensor model_hessian_scalar(const ModelConfig& cfg, const Parameters& params,
                                   const Propagation& prop, const Matrix& x, HessianOptions opts) {
  if (cfg.head != Head::kMeanPool) {
    throw std::invalid_argument("model_hessian_scalar: needs a pooled (graph-level) head");
  }
  const std::size_t n = prop.nodes, d = cfg.in_channels, c = cfg.out_channels;
  const double step = opts.rel_step * std::max(1.0, x.max_abs());

  auto gradients = [&](const Matrix& xp) {
    const ForwardResult fr = forward(cfg, params, prop, xp, {.input_grad = true, .param_grad = false});
    std::vector<Matrix> out;
    for (std::size_t g = 0; g < c; ++g) {
      Matrix seed(1, c);
      seed(0, g) = 1.0;
      out.push_back(fr.tape.backward(fr.output, seed)[fr.input.id]);
    }
    return out;
  };

  HessianTensor h(n, d, c);
  parallel_for(n * d, [&](std::size_t idx) {
    const std::size_t v = idx / d, b = idx % d;
    Matrix xp = x, xm = x;
    xp(v, b) += step;
    xm(v, b) -= step;
    const auto gp = gradients(xp);
    const auto gm = gradients(xm);
    const double inv = 1.0 / (xp(v, b) - xm(v, b));
    for (std::size_t g = 0; g < c; ++g)
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t a = 0; a < d; ++a) h.at(u, a, v, b, g) = (gp[g](u, a) - gm[g](u, a)) * inv;
  });
  if (opts.symmetrize) h.symmetrize();
  return h;
}

HessianTensor model_hessian_scalar(const ModelConfig& cfg, const Parameters& params,
                                   const Graph& g, const Matrix& x, HessianOptions opts) {
  return model_hessian_scalar(cfg, params, make_propagation(cfg, g), x, opts);
}

namespace {

const char* activation_name(Activation a) { return a == Activation::kGelu ? "gelu" : "identity"; }
const char* head_name(Head h) { return h == Head::kMeanPool ? "mean_pool" : "node_regression"; }

}  // namespace

std::string checkpoint_to_json(const ModelConfig& cfg, const Parameters& params) {
  nlohmann::ordered_json j;
  j["config"] = {{"depth", cfg.depth},
                 {"hidden_dim", cfg.hidden_dim},
                 {"in_channels", cfg.in_channels},
                 {"out_channels", cfg.out_channels},
                 {"activation", activation_name(cfg.activation)},
                 {"residual", cfg.residual},
                 {"virtual_node", cfg.virtual_node},
                 {"head", head_name(cfg.head)},
                 {"self_loops", cfg.self_loops}};
  j["seed"] = params.seed;
  auto& tensors = j["tensors"];
  const auto names = params.names();
  const auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tensors[names[i]] = {{"rows", ts[i]->rows()}, {"cols", ts[i]->cols()}, {"values", ts[i]->values()}};
  }
  return j.dump();
}

std::pair<ModelConfig, Parameters> checkpoint_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto& c = j.at("config");
  ModelConfig cfg;
  cfg.depth = c.at("depth").get<std::size_t>();
  cfg.hidden_dim = c.at("hidden_dim").get<std::size_t>();
  cfg.in_channels = c.at("in_channels").get<std::size_t>();
  cfg.out_channels = c.at("out_channels").get<std::size_t>();
  cfg.activation = c.at("activation").get<std::string>() == "gelu" ? Activation::kGelu : Activation::kIdentity;
  cfg.residual = c.at("residual").get<bool>();
  cfg.virtual_node = c.at("virtual_node").get<bool>();
  cfg.head = c.at("head").get<std::string>() == "mean_pool" ? Head::kMeanPool : Head::kNodeRegression;
  cfg.self_loops = c.at("self_loops").get<bool>();
  cfg.validate();
  Parameters p = init_parameters(cfg, j.at("seed").get<std::uint64_t>());
  const auto names = p.names();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& t = j.at("tensors").at(names[i]);
    Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
             t.at("values").get<std::vector<double>>());
    if (m.rows() != ts[i]->rows() || m.cols() != ts[i]->cols()) {
      throw std::invalid_argument("checkpoint: tensor '" + names[i] + "' has shape " + shape_string(m) +
                                  ", config expects " + shape_string(*ts[i]));
    }
    *ts[i] = std::move(m);
  }
  return {cfg, p};
}

}  // namespace lrange
