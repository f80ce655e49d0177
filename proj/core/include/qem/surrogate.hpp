#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qem/autodiff.hpp"

namespace qem {

enum class SurrogateKind { Nnas, Nea, Nna };

std::string to_string(SurrogateKind kind);
SurrogateKind surrogate_kind_from_string(const std::string& name);

enum class VariableForm { SingleDiscrete, SingleContinuous, MultiDiscrete };

// One declared feature variable: single forms carry one value, the
// multi-discrete form carries s values (e.g. an observable letter code).
struct FeatureVariable {
    VariableForm form;
    std::vector<double> values;
};

struct SequenceInput {
    std::vector<FeatureVariable> variables;
    std::vector<double> noisy;   // per-layer noisy expectations
    std::vector<double> p_hats;  // per-layer effectiveness factors

    std::size_t length() const { return noisy.size(); }
    std::vector<double> survivals() const;  // prod_{j<=l} (1 - p_hat_j)
};

struct TrainingSequence {
    SequenceInput input;
    std::vector<double> noiseless;
};

// All trainable tensors live in `params`, keyed by a stable name so the
// optimizer, checkpoints, and finite-difference checks stay generic.
struct SurrogateModel {
    SurrogateKind kind = SurrogateKind::Nnas;
    int hidden_dim = 32;
    int max_length = 0;  // widest supported sequence
    bool include_noisy = true;
    std::vector<VariableForm> variable_forms;
    std::vector<int> multi_sizes;  // s per variable (1 for single forms)
    std::map<std::string, Eigen::MatrixXd> params;

    int feature_rows() const {
        return int(variable_forms.size()) + (include_noisy ? 1 : 0);
    }

    static SurrogateModel init(SurrogateKind kind,
                               const std::vector<FeatureVariable>& prototype,
                               int max_length, bool include_noisy,
                               std::uint64_t seed, int hidden_dim = 32);
};

struct ForwardResult {
    std::vector<double> predicted;
    std::vector<Eigen::VectorXd> n_hats;  // N-hat per layer (NNAS only)
    bool denominator_clamped = false;
};

ForwardResult predict(const SurrogateModel& model, const SequenceInput& input);

// Embedded feature matrix X (feature_rows x length) as plain numbers, for
// inspection and the structural analysis.
Eigen::MatrixXd embed_features(const SurrogateModel& model,
                               const SequenceInput& input);

// Mitigation head as a standalone numeric map:
// y_hat_l = noisy_l / (survival_l + r_l) + bias_l, with the |denominator| <
// 1e-6 entries clamped to sign * 1e-6 (flag reported through *flagged).
std::vector<double> mitigate_sequence(const std::vector<double>& noisy,
                                      const std::vector<double>& p_hats,
                                      const std::vector<double>& r_hat,
                                      const std::vector<double>& bias,
                                      bool* flagged = nullptr);

enum class Optimizer { Sgd, Adam };

struct TrainingConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
};

struct TrainResult {
    SurrogateModel model;
    std::vector<double> loss_curve;  // MSE at the start of each epoch
};

double dataset_loss(const SurrogateModel& model,
                    const std::vector<TrainingSequence>& dataset);

std::map<std::string, Eigen::MatrixXd> dataset_gradients(
    const SurrogateModel& model, const std::vector<TrainingSequence>& dataset,
    double* loss_out = nullptr);

TrainResult train(SurrogateModel model,
                  const std::vector<TrainingSequence>& dataset,
                  const TrainingConfig& config);

// Versioned JSON checkpoint (flat arrays + shape metadata + config hash).
std::string checkpoint_to_json(const SurrogateModel& model);
SurrogateModel checkpoint_from_json(const std::string& text);

}  // namespace qem
