#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gnnbias/graph.hpp"
#include "gnnbias/model.hpp"

namespace gnnbias {

/// Binary cross entropy of a logit z against a 0/1 label, evaluated as
/// log1p_exp(z) - y * z.
double bce_loss(double logit, int label);
/// Same loss from a probability: -[y log p + (1 - y) log(1 - p)].
double bce_loss_from_probability(double p, int label);

enum class Optimizer { gd, adam };
std::string_view to_string(Optimizer o);
Optimizer optimizer_from_string(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 100;
  /// Minibatch size; 0 means full batch.
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Monitors and the log fire every `log_every` optimizer steps (and at
  /// step 0 and after the final step). 0 disables per-step logging.
  std::size_t log_every = 0;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// Labeled graphs with their precomputed model inputs.
struct TrainingSet {
  std::vector<GraphInputs> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Throws InvalidArgument when a graph is unlabeled or empty.
TrainingSet make_training_set(const std::vector<Graph>& graphs, const ModelParams& m);

/// Mean loss and accuracy (prediction p >= 0.5 means label 1).
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const ModelParams& m, const TrainingSet& data);

/// Per-group gradients of the mean loss over `indices` (all samples when
/// empty). Returned in kAllGroups order; groups that are not trainable are
/// left empty.
struct Gradients {
  std::vector<Matrix> by_group = std::vector<Matrix>(4);
  double loss = 0.0;

  Matrix& operator[](ParamGroup g) { return by_group[static_cast<std::size_t>(g)]; }
  const Matrix& operator[](ParamGroup g) const { return by_group[static_cast<std::size_t>(g)]; }
};
Gradients loss_gradients(const ModelParams& m, const TrainingSet& data,
                         const std::vector<std::size_t>& indices = {});

/// Single-sample gradient of the loss with respect to every trainable group.
Gradients sample_gradients(const ModelParams& m, const GraphInputs& in, int label);

/// What a monitor sees after each logged step.
struct StepContext {
  std::size_t step = 0;
  std::size_t epoch = 0;
  const ModelParams* params = nullptr;
  /// Parameters before the most recent update (equal to params at step 0).
  const ModelParams* previous = nullptr;
  const TrainingSet* data = nullptr;
  Evaluation eval;
};

/// Observer invoked with read-only access. `columns` names the values that
/// `observe` returns, in order.
struct Monitor {
  std::vector<std::string> columns;
  std::function<std::vector<double>(const StepContext&)> observe;
};

struct TrainTrace {
  std::vector<std::string> columns;  // step, loss, train_acc, monitor columns
  std::vector<std::vector<double>> rows;
  /// Average minibatch loss of each epoch, evaluated before each update.
  std::vector<double> epoch_losses;
  std::size_t steps = 0;
  Evaluation final_eval;

  std::string to_csv() const;
};

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

/// Minibatch gradient descent or Adam on the mean BCE loss, as selected by
/// the config. Throws NumericalError on a non-finite loss.
TrainResult train(const ModelParams& init, const TrainingSet& data, const TrainConfig& cfg,
                  const std::vector<Monitor>& monitors = {});
TrainResult train(const ModelParams& init, const std::vector<Graph>& graphs, const TrainConfig& cfg,
                  const std::vector<Monitor>& monitors = {});

/// Closed-form gradients of a theory-mode model with attention pooling.
struct ClosedFormGrads {
  Matrix dw;
  Matrix da;
};
ClosedFormGrads closed_form_grads(const Graph& g, int label, const ModelParams& m);

/// Per-group maximum relative error |x - y| / max(|x|, |y|, kRelErrFloor).
inline constexpr double kRelErrFloor = 1e-6;
double relative_error(const Matrix& x, const Matrix& y);

struct GroupError {
  ParamGroup group;
  double finite_diff = 0.0;
  /// Only set in theory mode with attention pooling for attn/classifier.
  std::optional<double> closed_form;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double tolerance = 0.0;
  std::size_t graphs = 0;
  bool passed = false;

  double max_error() const;
};

/// Gradient source under test; defaults to the autodiff backward pass. Tests
/// swap in corrupted rules to confirm the check fails.
using GradientFn = std::function<Gradients(const ModelParams&, const GraphInputs&, int)>;

GradCheckReport grad_check(const ModelParams& m, const std::vector<Graph>& graphs, double tol,
                           const GradientFn& analytic = {}, double h = 1e-4);

inline constexpr int kCheckpointVersion = 1;
std::string checkpoint_to_json(const ModelParams& m);
/// Throws ParseError on malformed text or a version mismatch.
ModelParams checkpoint_from_json(std::string_view text, std::string_view origin = "<checkpoint>");
void save_checkpoint(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace gnnbias
