#pragma once

#include <string>
#include <vector>

#include "qem/cumulative.hpp"
#include "qem/dataset.hpp"
#include "qem/metrics.hpp"
#include "qem/surrogate.hpp"

namespace qem {

// Fixed feature-variable order shared by both tasks: qubit count, circuit
// code, noise code, single- and two-qubit error rates, the continuous
// circuit parameter(s), then the observable letter code (multi-discrete of
// size md_size, zero-padded).
std::vector<FeatureVariable> feature_variables(const SequenceRecord& record,
                                               std::size_t md_size);

TrainingSequence to_training_sequence(const SequenceRecord& record,
                                      std::size_t md_size);

std::vector<TrainingSequence> to_training_sequences(
    const std::vector<SequenceRecord>& records, std::size_t md_size);

// Rebuilds the record's circuit (compiled; noise attached when `noise` is
// non-null, seeded from the record).
LayeredCircuit rebuild_circuit(const SequenceRecord& record,
                               const DecoherenceSpec* noise);

struct ExperimentConfig {
    TaskKind task = TaskKind::Trotter;
    std::vector<double> t1_grid = {23.2357};  // microseconds
    std::vector<std::string> models = {"nnas", "nea", "nna"};
    std::vector<std::string> baselines = {"noisy", "zne", "pec", "cdr"};
    std::size_t train_size = 100;
    std::size_t test_size = 200;
    double p_r = 0.25;
    std::size_t qubits = 4;
    std::size_t shots = 8192;
    int epochs = 300;
    double learning_rate = 5e-3;
    std::uint64_t seed = 1;
    std::size_t baseline_sequences = 5;  // circuits per costly baseline
    double p_hat_perturbation = 0.0;
    std::string output_dir = "out";
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

struct ExperimentResult {
    std::vector<MetricReport> reports;
    std::vector<std::string> checkpoint_paths;
};

// Trains the requested surrogates and evaluates all requested baselines on a
// shared held-out test set, per noise level. Writes datasets, checkpoints,
// and metric CSV/JSON under config.output_dir; (model, noise-level) cells
// with an existing checkpoint are reused.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct StructureAnalysis {
    std::vector<Eigen::MatrixXd> pooled_ptms;       // per layer
    std::vector<Eigen::MatrixXd> surrogate_outer;   // N-hat outer products
    std::vector<Eigen::MatrixXd> spearman_maps;
    EntropyCurve ptm_entropy;
    EntropyCurve surrogate_entropy;
    Correspondence correspondence;
};

// Pools each layer's cumulative-noise PTM down to the surrogate's d x d
// shape and correlates it with N-hat outer products (records with n <= 3).
StructureAnalysis analyze_structure(const SurrogateModel& model,
                                    const SequenceRecord& record,
                                    const DecoherenceSpec& noise,
                                    std::size_t md_size);

}  // namespace qem
