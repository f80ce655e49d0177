#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qem/noise_model.hpp"

namespace qem {

enum class TaskKind { Trotter, Ghz };

std::string to_string(TaskKind task);
TaskKind task_from_string(const std::string& name);

// Length buckets with selection probabilities; uniform within a bucket.
struct RegimePlan {
    struct Bucket {
        std::size_t lo = 0;
        std::size_t hi = 0;  // inclusive
        double prob = 0.0;
    };
    std::vector<Bucket> buckets;

    void validate() const;  // probabilities sum to 1, lo <= hi
    std::size_t sample(std::mt19937_64& rng) const;
    double expected_length() const;

    // Published plans: trotter 10 / 11-13 / 14-17 / 18-20 at rates
    // 1-p_r / 0.5 p_r / 0.3 p_r / 0.2 p_r; ghz 5 / 6-8 / 9-10 at
    // 1-p_r / 0.7 p_r / 0.3 p_r.
    static RegimePlan trotter_paper(double p_r);
    static RegimePlan ghz_paper(double p_r);
    // Desk-scale plans fitting the simulator caps: trotter
    // 5 / 6-7 / 8-9 / 10 at the trotter rates, ghz 5 / 6 at 1-p_r / p_r.
    static RegimePlan trotter_desk(double p_r);
    static RegimePlan ghz_desk(double p_r);
};

std::size_t sample_max_length(TaskKind task, double p_r,
                              std::mt19937_64& rng);

// One dataset atom: per-layer noisy (shot-sampled), noiseless (exact) and
// effectiveness-factor arrays of equal truncated length.
struct SequenceRecord {
    std::string task;
    std::map<std::string, double> params;  // hdt & j_over_h, or theta
    std::size_t n = 0;
    std::size_t length = 0;
    std::vector<double> noisy;
    std::vector<double> noiseless;
    std::vector<double> p_hats;
    double single_error_rate = 0.0;  // total Pauli error, 1q gate time
    double two_error_rate = 0.0;     // total Pauli error, 2q gate time
    std::uint64_t seed = 0;

    void validate() const;
};

struct GenerationConfig {
    TaskKind task = TaskKind::Trotter;
    std::size_t size = 100;  // M sequences
    double p_r = 0.25;
    std::size_t qubits = 4;  // trotter register; ignored for ghz
    RegimePlan plan = RegimePlan::trotter_desk(0.25);

    // Trotter parameters: h dt uniform in the range, J/h fixed.
    double hdt_min = 0.5, hdt_max = 2.0;
    double j_over_h = 0.6;

    // Ghz parameters: theta grid with repeated trials.
    double theta_start = 0.1, theta_step = 0.1;
    std::size_t theta_count = 50;

    std::size_t shots = 8192;
    bool noisy = true;
    DecoherenceSpec noise;
    double p_hat_perturbation = 0.0;  // multiplicative (1 + eps) on p_hats
    std::uint64_t seed = 0;
};

std::vector<SequenceRecord> generate_dataset(const GenerationConfig& config);

// JSON-lines persistence: first line a self-describing header (schema
// version, task, config JSON, seed), one record per following line.
struct DatasetFile {
    int schema_version = 1;
    std::string task;
    std::string config_json;
    std::uint64_t seed = 0;
    std::vector<SequenceRecord> records;
};

void write_dataset(const std::string& path, const DatasetFile& file);
DatasetFile read_dataset(const std::string& path);

std::string generation_config_to_json(const GenerationConfig& config);
GenerationConfig generation_config_from_json(const std::string& text);

}  // namespace qem
