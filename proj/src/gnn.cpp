//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/gnn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace molgnn {

std::string_view head_kind_name(HeadKind kind) {
  return kind == HeadKind::kNode ? "node" : "edge";
}

HeadKind parse_head_kind(std::string_view name) {
  if (name == "node")
    return HeadKind::kNode;
  if (name == "edge")
    return HeadKind::kEdge;
  throw GnnError("unknown head kind '" + std::string(name) + "'");
}

std::string_view aggregation_name(Aggregation agg) {
  return agg == Aggregation::kSum ? "sum" : "avg";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "sum")
    return Aggregation::kSum;
  if (name == "avg")
    return Aggregation::kAvg;
  throw GnnError("unknown aggregation '" + std::string(name) + "'");
}

void GnnShape::validate() const {
  if (k_max < 1)
    throw GnnError("k_max must be at least 1");
  if (!(epsilon >= 0))
    throw GnnError("epsilon must be nonnegative");
  if (state_dim < vertex_label_dim + (focus_flag ? 1 : 0))
    throw GnnError("state_dim must hold the vertex label");
  if (vertex_label_dim < 1 || edge_label_dim < 1 || hidden_state < 1
      || hidden_out < 1 || classes < 1)
    throw GnnError("layer sizes must be positive");
}

std::array<std::span<double>, GnnModel::kBlocks> GnnModel::parameters() {
  auto s = [](auto &m) { return std::span<double>(m.data(), m.size()); };
  return { s(state_net.w1),  s(state_net.b1),  s(state_net.w2),
           s(state_net.b2),  s(output_net.w1), s(output_net.b1),
           s(output_net.w2), s(output_net.b2) };
}

std::array<std::span<const double>, GnnModel::kBlocks>
GnnModel::parameters() const {
  auto s = [](const auto &m) {
    return std::span<const double>(m.data(), m.size());
  };
  return { s(state_net.w1),  s(state_net.b1),  s(state_net.w2),
           s(state_net.b2),  s(output_net.w1), s(output_net.b1),
           s(output_net.w2), s(output_net.b2) };
}

std::size_t GnnModel::parameter_count() const {
  std::size_t n = 0;
  for (auto block: parameters())
    n += block.size();
  return n;
}

namespace {

Mlp zero_mlp(int in, int hidden, int out) {
  return { Eigen::MatrixXd::Zero(hidden, in), Eigen::VectorXd::Zero(hidden),
           Eigen::MatrixXd::Zero(out, hidden), Eigen::VectorXd::Zero(out) };
}

void glorot(Eigen::MatrixXd &w, Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      w(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
}

Eigen::MatrixXd tanh_rows(const Eigen::MatrixXd &x, const Eigen::MatrixXd &w,
                          const Eigen::VectorXd &b) {
  Eigen::MatrixXd z = x * w.transpose();
  z.rowwise() += b.transpose();
  return z.array().tanh().matrix();
}

void check_same_shape(const GnnModel &a, const GnnModel &b) {
  auto pa = a.parameters();
  auto pb = b.parameters();
  for (int i = 0; i < GnnModel::kBlocks; ++i)
    if (pa[i].size() != pb[i].size())
      throw GnnError("parameter shape mismatch");
}

} // namespace

GnnModel init_model(const GnnShape &shape, Rng &rng) {
  shape.validate();
  GnnModel m = zeros_like(GnnModel { shape, {}, {} });
  glorot(m.state_net.w1, rng);
  glorot(m.state_net.w2, rng);
  glorot(m.output_net.w1, rng);
  glorot(m.output_net.w2, rng);
  return m;
}

GnnModel zeros_like(const GnnModel &model) {
  const GnnShape &s = model.shape;
  return { s, zero_mlp(s.state_input_dim(), s.hidden_state, s.state_dim),
           zero_mlp(s.output_input_dim(), s.hidden_out, s.classes) };
}

GnnInput make_input(const MolecularGraph &g,
                    std::span<const std::pair<int, int>> candidates,
                    int focus) {
  GnnInput in;
  in.num_vertices = g.num_vertices();
  in.vertex_types.assign(g.vertex_types().begin(), g.vertex_types().end());
  for (const Edge &e: g.edges())
    in.edges.push_back({ e.u, e.v, e.type });
  const int candidate_label = g.num_edge_types();
  for (auto [k, j]: candidates) {
    if (k < 0 || j < 0 || k >= in.num_vertices || j >= in.num_vertices || k == j)
      throw GnnError("candidate edge out of range");
    if (g.has_edge(k, j))
      throw GnnError("candidate edge duplicates a decided edge");
    in.edges.push_back({ k, j, candidate_label });
  }
  if (focus >= in.num_vertices)
    throw GnnError("focus out of range");
  in.focus = focus;
  return in;
}

Trajectory state_relax(const GnnInput &input, const GnnModel &model) {
  const GnnShape &shape = model.shape;
  const int n = input.num_vertices;
  const int d = shape.state_dim;
  if (n == 0)
    throw GnnError("state_relax on an empty graph");

  Trajectory t;
  t.adjacency = Eigen::MatrixXd::Zero(n, n);
  t.edge_part = Eigen::MatrixXd::Zero(n, shape.edge_label_dim);
  std::vector<int> degree(n, 0);
  for (const auto &e: input.edges) {
    if (e.label < 0 || e.label >= shape.edge_label_dim)
      throw GnnError("edge label outside the model's label space");
    t.adjacency(e.u, e.v) += 1.0;
    t.adjacency(e.v, e.u) += 1.0;
    t.edge_part(e.u, e.label) += 1.0;
    t.edge_part(e.v, e.label) += 1.0;
    ++degree[e.u];
    ++degree[e.v];
  }
  if (shape.aggregation == Aggregation::kAvg) {
    for (int i = 0; i < n; ++i) {
      if (degree[i] > 0) {
        t.adjacency.row(i) /= degree[i];
        t.edge_part.row(i) /= degree[i];
      }
    }
  }

  Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    int type = input.vertex_types[i];
    if (type < 0 || type >= shape.vertex_label_dim)
      throw GnnError("vertex type outside the model's label space");
    s0(i, type) = 1.0;
  }
  if (shape.focus_flag && input.focus >= 0)
    s0(input.focus, shape.vertex_label_dim) = 1.0;
  t.states.push_back(std::move(s0));

  const Mlp &f = model.state_net;
  for (int k = 1; k <= shape.k_max; ++k) {
    const Eigen::MatrixXd &prev = t.states.back();
    Eigen::MatrixXd x(n, shape.state_input_dim());
    x.leftCols(d) = prev;
    x.middleCols(d, d) = t.adjacency * prev;
    x.rightCols(shape.edge_label_dim) = t.edge_part;
    Eigen::MatrixXd h = tanh_rows(x, f.w1, f.b1);
    Eigen::MatrixXd next = h * f.w2.transpose();
    next.rowwise() += f.b2.transpose();

    const double moved = (next - prev).rowwise().norm().maxCoeff();
    t.inputs.push_back(std::move(x));
    t.hidden.push_back(std::move(h));
    t.states.push_back(std::move(next));
    t.k_star = k;
    if (moved < shape.epsilon)
      break;
  }
  return t;
}

namespace {

HeadOutput apply_output(const Eigen::VectorXd &x, const GnnModel &model) {
  const Mlp &o = model.output_net;
  HeadOutput out;
  out.input = x;
  out.hidden = (o.w1 * x + o.b1).array().tanh().matrix();
  out.logits = o.w2 * out.hidden + o.b2;
  return out;
}

} // namespace

HeadOutput node_head(const Eigen::MatrixXd &states, int v,
                     const GnnModel &model) {
  if (model.shape.head_kind != HeadKind::kNode)
    throw GnnError("node_head called on an edge-head model");
  if (v < 0 || v >= states.rows())
    throw GnnError("output vertex out of range");
  HeadOutput out = apply_output(states.row(v).transpose(), model);
  out.u = v;
  return out;
}

HeadOutput edge_head(const Eigen::MatrixXd &states, int u, int v, int label,
                     const GnnModel &model) {
  const GnnShape &shape = model.shape;
  if (shape.head_kind != HeadKind::kEdge)
    throw GnnError("edge_head called on a node-head model");
  if (u < 0 || v < 0 || u >= states.rows() || v >= states.rows())
    throw GnnError("output edge out of range");
  if (label < 0 || label >= shape.edge_label_dim)
    throw GnnError("edge label outside the model's label space");
  const int d = shape.state_dim;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.output_input_dim());
  x.head(d) = states.row(u).transpose();
  x.segment(d, d) = states.row(v).transpose();
  x(2 * d + label) = 1.0;
  HeadOutput out = apply_output(x, model);
  out.u = u;
  out.v = v;
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd &logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

LossResult xent(const Eigen::VectorXd &logits, int target,
                std::span<const double> class_weights) {
  if (target < 0 || target >= logits.size())
    throw GnnError("target class out of range");
  const double w = class_weights.empty() ? 1.0 : class_weights[target];
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  LossResult r { w * (lse - logits(target)), softmax(logits) };
  r.grad(target) -= 1.0;
  r.grad *= w;
  return r;
}

double xent_loss(const Eigen::VectorXd &logits, int target,
                 std::span<const double> class_weights) {
  return xent(logits, target, class_weights).value;
}

void backward(const GnnInput &input, const Trajectory &t,
              std::span<const HeadOutput> heads,
              std::span<const Eigen::VectorXd> dlogits, const GnnModel &model,
              GnnModel &grads) {
  if (heads.size() != dlogits.size())
    throw GnnError("one logit gradient per head output is required");
  check_same_shape(model, grads);
  const GnnShape &shape = model.shape;
  const int d = shape.state_dim;
  const Mlp &o = model.output_net;
  Mlp &go = grads.output_net;

  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(input.num_vertices, d);
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const HeadOutput &head = heads[h];
    const Eigen::VectorXd &dy = dlogits[h];
    go.w2.noalias() += dy * head.hidden.transpose();
    go.b2 += dy;
    Eigen::VectorXd dz = (o.w2.transpose() * dy).array()
                         * (1.0 - head.hidden.array().square());
    go.w1.noalias() += dz * head.input.transpose();
    go.b1 += dz;
    Eigen::VectorXd dx = o.w1.transpose() * dz;
    ds.row(head.u) += dx.head(d).transpose();
    if (shape.head_kind == HeadKind::kEdge)
      ds.row(head.v) += dx.segment(d, d).transpose();
  }

  const Mlp &f = model.state_net;
  Mlp &gf = grads.state_net;
  for (int k = t.k_star; k >= 1; --k) {
    const Eigen::MatrixXd &x = t.inputs[k - 1];
    const Eigen::MatrixXd &hid = t.hidden[k - 1];
    gf.b2 += ds.colwise().sum().transpose();
    gf.w2.noalias() += ds.transpose() * hid;
    Eigen::MatrixXd dpre = ((ds * f.w2).array() * (1.0 - hid.array().square()))
                               .matrix();
    gf.b1 += dpre.colwise().sum().transpose();
    gf.w1.noalias() += dpre.transpose() * x;
    Eigen::MatrixXd dx = dpre * f.w1;
    ds = dx.leftCols(d) + t.adjacency.transpose() * dx.middleCols(d, d);
  }
}

AdamState make_adam(const GnnModel &model, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = zeros_like(model);
  s.second_moment = zeros_like(model);
  return s;
}

void adam_step(GnnModel &model, const GnnModel &grads, AdamState &opt) {
  check_same_shape(model, grads);
  check_same_shape(model, opt.first_moment);
  check_same_shape(model, opt.second_moment);
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  auto params = model.parameters();
  auto g = grads.parameters();
  auto m = opt.first_moment.parameters();
  auto v = opt.second_moment.parameters();
  for (int b = 0; b < GnnModel::kBlocks; ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      m[b][i] = opt.beta1 * m[b][i] + (1.0 - opt.beta1) * g[b][i];
      v[b][i] = opt.beta2 * v[b][i] + (1.0 - opt.beta2) * g[b][i] * g[b][i];
      const double mhat = m[b][i] / c1;
      const double vhat = v[b][i] / c2;
      params[b][i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
  }
}

Eigen::VectorXd gumbel_noise(Eigen::Index n, Rng &rng) {
  Eigen::VectorXd g(n);
  for (Eigen::Index c = 0; c < n; ++c)
    g(c) = -std::log(-std::log(rng.uniform_open()));
  return g;
}

GumbelSample gumbel_sample(const Eigen::VectorXd &logits, double tau,
                           Rng &rng) {
  if (!(tau > 0))
    throw GnnError("gumbel temperature must be positive");
  Eigen::VectorXd perturbed = logits + gumbel_noise(logits.size(), rng);
  GumbelSample s;
  s.soft = softmax(perturbed / tau);
  perturbed.maxCoeff(&s.hard);
  return s;
}

double anneal_tau(int epoch, const AnnealSchedule &schedule) {
  if (schedule.total_epochs <= 1)
    return schedule.tau_min;
  const double frac = static_cast<double>(epoch) / (schedule.total_epochs - 1);
  const double tau = schedule.tau_max
                     - (schedule.tau_max - schedule.tau_min) * frac;
  return std::clamp(tau, schedule.tau_min, schedule.tau_max);
}

namespace {

Json matrix_to_json(std::string_view name, const Eigen::MatrixXd &m) {
  std::vector<double> flat;
  flat.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      flat.push_back(m(r, c));
  return { { "name", name }, { "rows", m.rows() }, { "cols", m.cols() },
           { "data", std::move(flat) } };
}

void matrix_from_json(const Json &j, std::string_view name,
                      Eigen::MatrixXd &m) {
  if (j.at("name").get<std::string>() != name
      || j.at("rows").get<Eigen::Index>() != m.rows()
      || j.at("cols").get<Eigen::Index>() != m.cols())
    throw GnnError("checkpoint layer " + std::string(name)
                   + " does not match the declared shape");
  const auto &data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw GnnError("checkpoint layer " + std::string(name) + " has "
                   + std::to_string(data.size()) + " values");
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = data[i++].get<double>();
}

void vector_from_json(const Json &j, std::string_view name,
                      Eigen::VectorXd &v) {
  Eigen::MatrixXd m(v.size(), 1);
  matrix_from_json(j, name, m);
  v = m.col(0);
}

constexpr std::string_view kLayerNames[] = {
  "state.w1", "state.b1", "state.w2", "state.b2",
  "output.w1", "output.b1", "output.w2", "output.b2",
};

} // namespace

Json model_to_json(const GnnModel &model) {
  const GnnShape &s = model.shape;
  Json layers = Json::array();
  layers.push_back(matrix_to_json(kLayerNames[0], model.state_net.w1));
  layers.push_back(matrix_to_json(kLayerNames[1], model.state_net.b1));
  layers.push_back(matrix_to_json(kLayerNames[2], model.state_net.w2));
  layers.push_back(matrix_to_json(kLayerNames[3], model.state_net.b2));
  layers.push_back(matrix_to_json(kLayerNames[4], model.output_net.w1));
  layers.push_back(matrix_to_json(kLayerNames[5], model.output_net.b1));
  layers.push_back(matrix_to_json(kLayerNames[6], model.output_net.w2));
  layers.push_back(matrix_to_json(kLayerNames[7], model.output_net.b2));
  return {
    { "format", "molgnn-checkpoint" },
    { "version", kCheckpointVersion },
    { "head_kind", head_kind_name(s.head_kind) },
    { "aggregation", aggregation_name(s.aggregation) },
    { "k_max", s.k_max },
    { "epsilon", s.epsilon },
    { "state_dim", s.state_dim },
    { "vertex_label_dim", s.vertex_label_dim },
    { "edge_label_dim", s.edge_label_dim },
    { "hidden_state", s.hidden_state },
    { "hidden_out", s.hidden_out },
    { "classes", s.classes },
    { "focus_flag", s.focus_flag },
    { "layers", std::move(layers) },
  };
}

GnnModel model_from_json(const Json &j) {
  try {
    if (j.at("format").get<std::string>() != "molgnn-checkpoint")
      throw GnnError("not a checkpoint document");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw GnnError("unsupported checkpoint version");
    GnnShape s;
    s.head_kind = parse_head_kind(j.at("head_kind").get<std::string>());
    s.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    s.k_max = j.at("k_max").get<int>();
    s.epsilon = j.at("epsilon").get<double>();
    s.state_dim = j.at("state_dim").get<int>();
    s.vertex_label_dim = j.at("vertex_label_dim").get<int>();
    s.edge_label_dim = j.at("edge_label_dim").get<int>();
    s.hidden_state = j.at("hidden_state").get<int>();
    s.hidden_out = j.at("hidden_out").get<int>();
    s.classes = j.at("classes").get<int>();
    s.focus_flag = j.at("focus_flag").get<bool>();
    s.validate();

    GnnModel m = zeros_like(GnnModel { s, {}, {} });
    const Json &layers = j.at("layers");
    if (layers.size() != GnnModel::kBlocks)
      throw GnnError("checkpoint must hold 8 layers");
    matrix_from_json(layers[0], kLayerNames[0], m.state_net.w1);
    vector_from_json(layers[1], kLayerNames[1], m.state_net.b1);
    matrix_from_json(layers[2], kLayerNames[2], m.state_net.w2);
    vector_from_json(layers[3], kLayerNames[3], m.state_net.b2);
    matrix_from_json(layers[4], kLayerNames[4], m.output_net.w1);
    vector_from_json(layers[5], kLayerNames[5], m.output_net.b1);
    matrix_from_json(layers[6], kLayerNames[6], m.output_net.w2);
    vector_from_json(layers[7], kLayerNames[7], m.output_net.b2);
    return m;
  } catch (const Json::exception &err) {
    throw GnnError(std::string("malformed checkpoint: ") + err.what());
  }
}

} // namespace molgnn
