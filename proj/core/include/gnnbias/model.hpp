#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gnnbias/autodiff.hpp"
#include "gnnbias/graph.hpp"
#include "gnnbias/matrix.hpp"

namespace gnnbias {

enum class Pooling { max, avg, sum, attn };
enum class Conv { gcn, gat };
enum class Nonlinearity { sigmoid, identity, relu };

std::string_view to_string(Pooling p);
std::string_view to_string(Conv c);
std::string_view to_string(Nonlinearity n);
Pooling pooling_from_string(std::string_view s);
Conv conv_from_string(std::string_view s);
Nonlinearity nonlinearity_from_string(std::string_view s);

struct ModelFlags {
  /// GCN propagates over N(i) ∪ {i}. In theory mode this selects the
  /// closed (true) or open (false) neighbourhood sum.
  bool use_self_loops = true;
  bool degree_normalize = true;
  Nonlinearity nonlinearity = Nonlinearity::relu;
  bool use_linear_classifier = true;
  /// Identity feature transform, identity activation, no normalization:
  /// node reps are integer neighbourhood color counts.
  bool theory_mode = false;

  bool operator==(const ModelFlags&) const = default;
};

/// One-layer GCN/GAT with a global readout and a linear classifier.
///
/// Shapes: theta (K, d), attn (d, 1), classifier (d, 1), gat_attn (2d, 1)
/// when conv is GAT (empty otherwise). Without the linear classifier d = 1
/// and the pooled scalar is the logit.
struct ModelParams {
  Matrix theta;
  Matrix attn;
  Matrix classifier;
  Matrix gat_attn;
  Pooling pooling = Pooling::avg;
  double beta = 1.0;
  Conv conv = Conv::gcn;
  ModelFlags flags;

  std::size_t palette_size() const { return theta.rows(); }
  std::size_t width() const { return theta.cols(); }

  /// Throws InvalidArgument when shapes or flags are inconsistent.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct ModelConfig {
  std::size_t palette_size = 7;
  std::size_t width = 16;
  Pooling pooling = Pooling::avg;
  double beta = 1.0;
  Conv conv = Conv::gcn;
  ModelFlags flags;
};

/// Training-mode initialization: every parameter uniform in [-scale, scale].
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed, double scale = 0.1);

/// Theory-mode model over K colors: theta = I, a = 0, w = 0.
ModelParams theory_params(std::size_t palette_size, Pooling pooling = Pooling::attn, double beta = 1.0);

/// Parameter groups that receive gradients under the given configuration.
enum class ParamGroup { theta, attn, classifier, gat_attn };
inline constexpr ParamGroup kAllGroups[] = {ParamGroup::theta, ParamGroup::attn, ParamGroup::classifier,
                                            ParamGroup::gat_attn};
std::string_view to_string(ParamGroup g);
std::vector<ParamGroup> trainable_groups(const ModelParams& m);
Matrix& group(ModelParams& m, ParamGroup g);
const Matrix& group(const ModelParams& m, ParamGroup g);

/// Graph-dependent constants, computed once per (graph, model layout).
struct GraphInputs {
  /// One-hot colors X, (N, K).
  Matrix features;
  /// Propagation operator applied to X (GCN), (N, K).
  Matrix propagated;
  /// Closed-neighbourhood mask (GAT), (N, N); empty for GCN.
  Matrix mask;
};

GraphInputs prepare_inputs(const Graph& g, const ModelParams& m);

/// Propagation operator of the GCN: D^-1/2 (A + I) D^-1/2 when normalizing
/// with self loops, plain A (+ I) otherwise.
Matrix propagation_matrix(const Graph& g, const ModelFlags& flags);

/// Tape handles of the parameters for one evaluation.
struct ParamTensors {
  ad::Tensor theta;
  ad::Tensor attn;
  ad::Tensor classifier;
  ad::Tensor gat_attn;

  ad::Tensor& operator[](ParamGroup g);
};

/// Records the parameters on `tape`; trainable groups become variables.
ParamTensors attach_params(ad::Tape& tape, const ModelParams& m, bool trainable = true);

struct ForwardGraph {
  ad::Tensor reps;     // (N, d)
  ad::Tensor weights;  // (N, 1) attention weights; only for ATTN
  ad::Tensor pooled;   // (d, 1)
  ad::Tensor logit;    // (1, 1)
};

/// Builds the full forward graph for one input.
ForwardGraph forward(ad::Tape& tape, const GraphInputs& in, const ParamTensors& p, const ModelParams& m);

/// Node representations, (N, d).
Matrix gcn_forward(const Graph& g, const ModelParams& m);
Matrix gat_forward(const Graph& g, const ModelParams& m);
Matrix node_reps(const Graph& g, const ModelParams& m);

/// Readout of node representations into a (d, 1) vector.
Matrix pool(const Matrix& reps, const ModelParams& m);
/// softmax_beta(<v_i, a>) over nodes; (N, 1).
Matrix attention_weights(const Matrix& reps, const ModelParams& m);

double logit(const Graph& g, const ModelParams& m);
double logit(const GraphInputs& in, const ModelParams& m);
double predict(const Graph& g, const ModelParams& m);
double predict(const GraphInputs& in, const ModelParams& m);

}  // namespace gnnbias
