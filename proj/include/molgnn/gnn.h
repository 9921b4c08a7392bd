//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_GNN_H_
#define MOLGNN_GNN_H_

#include <array>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "molgnn/graph.h"
#include "molgnn/random.h"
#include "molgnn/serialize.h"

namespace molgnn {

class GnnError: public std::logic_error {
public:
  using std::logic_error::logic_error;
};

enum class HeadKind { kNode, kEdge };

// The coefficient of the neighbor sum: 1 for sum, 1/|Ne(v)| for avg.
enum class Aggregation { kSum, kAvg };

std::string_view head_kind_name(HeadKind kind);
HeadKind parse_head_kind(std::string_view name);
std::string_view aggregation_name(Aggregation agg);
Aggregation parse_aggregation(std::string_view name);

struct GnnShape {
  HeadKind head_kind = HeadKind::kNode;
  Aggregation aggregation = Aggregation::kSum;
  int k_max = 5;
  double epsilon = 1e-3;
  int state_dim = 10;
  int vertex_label_dim = 5; // |T_v|
  int edge_label_dim = 4;   // |T_e| plus the candidate slot
  int hidden_state = 30;
  int hidden_out = 50;
  int classes = 6;
  // Marks the focus vertex with an extra initial-state component. Off by
  // default; the node head already reads out at the focus.
  bool focus_flag = false;

  int state_input_dim() const { return 2 * state_dim + edge_label_dim; }
  int output_input_dim() const {
    return head_kind == HeadKind::kNode ? state_dim
                                        : 2 * state_dim + edge_label_dim;
  }
  void validate() const;

  friend bool operator==(const GnnShape &, const GnnShape &) = default;
};

// y = w2 tanh(w1 x + b1) + b2
struct Mlp {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

/**
 * Parameters of one GNN module: the state transition network F and the
 * output network O. The message and aggregation functions are fixed:
 *
 *   s_i^k = F(s_i^{k-1}, a * sum_{j in Ne(i)} (s_j^{k-1}, e_ij))
 */
struct GnnModel {
  GnnShape shape;
  Mlp state_net;
  Mlp output_net;

  static constexpr int kBlocks = 8;
  std::array<std::span<double>, kBlocks> parameters();
  std::array<std::span<const double>, kBlocks> parameters() const;
  std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases.
GnnModel init_model(const GnnShape &shape, Rng &rng);
GnnModel zeros_like(const GnnModel &model);

// Network input: vertex types, plus edges whose label may be the candidate
// slot (label == edge_label_dim - 1).
struct GnnInput {
  struct InputEdge {
    int u, v, label;
  };
  int num_vertices = 0;
  std::vector<int> vertex_types;
  std::vector<InputEdge> edges;
  int focus = -1;
};

// Builds the input from decided edges plus candidate pairs (k, j).
GnnInput make_input(const MolecularGraph &g,
                    std::span<const std::pair<int, int>> candidates = {},
                    int focus = -1);

struct Trajectory {
  Eigen::MatrixXd adjacency;  // row i scaled by the aggregation coefficient
  Eigen::MatrixXd edge_part;  // aggregated edge labels, constant over k
  std::vector<Eigen::MatrixXd> states; // s^0 .. s^{k*}, one row per vertex
  std::vector<Eigen::MatrixXd> inputs; // F inputs for k = 1 .. k*
  std::vector<Eigen::MatrixXd> hidden; // F hidden activations
  int k_star = 0;

  const Eigen::MatrixXd &final_states() const { return states.back(); }
};

/**
 * Synchronous relaxation. Stops at the first k where every vertex moved by
 * less than epsilon (Euclidean norm) or at k_max. A vertex without neighbors
 * receives a zero aggregated message. The trajectory is kept for backward().
 */
Trajectory state_relax(const GnnInput &input, const GnnModel &model);

struct HeadOutput {
  Eigen::VectorXd logits;
  Eigen::VectorXd input;
  Eigen::VectorXd hidden;
  int u = -1;
  int v = -1;
};

HeadOutput node_head(const Eigen::MatrixXd &states, int v,
                     const GnnModel &model);
// u is the earlier / expanded vertex; argument order matters.
HeadOutput edge_head(const Eigen::MatrixXd &states, int u, int v, int label,
                     const GnnModel &model);

Eigen::VectorXd softmax(const Eigen::VectorXd &logits);

struct LossResult {
  double value;
  Eigen::VectorXd grad; // d value / d logits
};

// -weight[target] * log softmax(logits)[target]; weight 1 when unweighted.
LossResult xent(const Eigen::VectorXd &logits, int target,
                std::span<const double> class_weights = {});
double xent_loss(const Eigen::VectorXd &logits, int target,
                 std::span<const double> class_weights = {});

/**
 * Backpropagation through the unrolled relaxation. Adds the gradient of
 * sum_h dlogits[h] . heads[h].logits to grads.
 */
void backward(const GnnInput &input, const Trajectory &trajectory,
              std::span<const HeadOutput> heads,
              std::span<const Eigen::VectorXd> dlogits, const GnnModel &model,
              GnnModel &grads);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  GnnModel first_moment;
  GnnModel second_moment;
};

AdamState make_adam(const GnnModel &model, double learning_rate);
// Throws GnnError on shape mismatch.
void adam_step(GnnModel &model, const GnnModel &grads, AdamState &opt);

struct GumbelSample {
  int hard;
  Eigen::VectorXd soft;
};

// g_c = -log(-log u_c); soft = softmax((logits + g) / tau); hard = argmax.
GumbelSample gumbel_sample(const Eigen::VectorXd &logits, double tau,
                           Rng &rng);
Eigen::VectorXd gumbel_noise(Eigen::Index n, Rng &rng);

struct AnnealSchedule {
  double tau_max = 5.0;
  double tau_min = 1.0;
  int total_epochs = 1;
};

// Linear from tau_max at epoch 0 to tau_min at the last epoch, clamped.
double anneal_tau(int epoch, const AnnealSchedule &schedule);

inline constexpr int kCheckpointVersion = 1;

Json model_to_json(const GnnModel &model);
GnnModel model_from_json(const Json &j);

} // namespace molgnn

#endif // MOLGNN_GNN_H_
