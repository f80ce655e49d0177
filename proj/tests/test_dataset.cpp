#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "qem/dataset.hpp"
#include "qem/experiment.hpp"

using namespace qem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

GenerationConfig small_config() {
    GenerationConfig config;
    config.task = TaskKind::Trotter;
    config.size = 4;
    config.qubits = 3;
    config.plan = RegimePlan::trotter_desk(0.25);
    config.shots = 2048;
    config.seed = 77;
    return config;
}

}  // namespace

TEST_CASE("regime plan validation and bucket probabilities") {
    const RegimePlan plan = RegimePlan::trotter_paper(0.25);
    CHECK_NOTHROW(plan.validate());
    CHECK_THROWS(RegimePlan::trotter_paper(-0.1));
    CHECK_THROWS(RegimePlan::trotter_paper(1.5));

    RegimePlan bad = plan;
    bad.buckets[0].prob = 0.9;
    CHECK_THROWS(bad.validate());

    // p_r = 0: always the base length.
    std::mt19937_64 rng(3);
    const RegimePlan base_only = RegimePlan::trotter_paper(0.0);
    for (int i = 0; i < 50; ++i) CHECK(base_only.sample(rng) == 10);
    const RegimePlan ghz_base = RegimePlan::ghz_paper(0.0);
    for (int i = 0; i < 50; ++i) CHECK(ghz_base.sample(rng) == 5);
}

TEST_CASE("empirical bucket frequencies match the plan") {
    const RegimePlan plan = RegimePlan::trotter_paper(0.25);
    std::mt19937_64 rng(5);
    std::map<std::size_t, double> freq;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) freq[plan.sample(rng)] += 1.0 / draws;
    double in_base = freq[10];
    double in_11_13 = 0, in_14_17 = 0, in_18_20 = 0;
    for (std::size_t l = 11; l <= 13; ++l) in_11_13 += freq[l];
    for (std::size_t l = 14; l <= 17; ++l) in_14_17 += freq[l];
    for (std::size_t l = 18; l <= 20; ++l) in_18_20 += freq[l];
    CHECK(std::abs(in_base - 0.75) < 0.01);
    CHECK(std::abs(in_11_13 - 0.125) < 0.01);
    CHECK(std::abs(in_14_17 - 0.075) < 0.01);
    CHECK(std::abs(in_18_20 - 0.05) < 0.01);
}

TEST_CASE("expected data-point count approximates the published 1140") {
    // E[L] = 0.75*10 + 0.125*12 + 0.075*15.5 + 0.05*19 = 11.1125;
    // 100 sequences -> 1111.25 expected points, within 3% of 1140.
    const RegimePlan plan = RegimePlan::trotter_paper(0.25);
    const double expected = 100.0 * plan.expected_length();
    CHECK(expected == doctest::Approx(1111.25).epsilon(1e-12));
    CHECK(std::abs(expected - 1140.0) / 1140.0 < 0.03);
}

TEST_CASE("sample_max_length respects task bounds") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const std::size_t t = sample_max_length(TaskKind::Trotter, 0.5, rng);
        CHECK(t >= 10);
        CHECK(t <= 20);
        const std::size_t g = sample_max_length(TaskKind::Ghz, 0.5, rng);
        CHECK(g >= 5);
        CHECK(g <= 10);
    }
    CHECK_THROWS(sample_max_length(TaskKind::Trotter, 1.2, rng));
}

TEST_CASE("dataset generation is deterministic and well-formed") {
    const GenerationConfig config = small_config();
    const std::vector<SequenceRecord> a = generate_dataset(config);
    const std::vector<SequenceRecord> b = generate_dataset(config);
    REQUIRE(a.size() == config.size);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK_NOTHROW(a[i].validate());
        CHECK(a[i].length >= 5);
        CHECK(a[i].length <= 10);
        CHECK(a[i].noisy.size() == a[i].length);
        CHECK(a[i].noiseless.size() == a[i].length);
        CHECK(a[i].p_hats.size() == a[i].length);
        CHECK(a[i].params.at("j_over_h") == 0.6);
        CHECK(a[i].params.at("hdt") >= 0.5);
        CHECK(a[i].params.at("hdt") <= 2.0);
        for (std::size_t l = 0; l < a[i].length; ++l) {
            CHECK(std::abs(a[i].noisy[l]) <= 1.0);
            CHECK(a[i].p_hats[l] >= 0.0);
            CHECK(a[i].p_hats[l] < 1.0);
        }
        CHECK(a[i].noisy == b[i].noisy);
        CHECK(a[i].p_hats == b[i].p_hats);
    }
}

TEST_CASE("noise-free generation gives zero p_hats and shot-level agreement") {
    GenerationConfig config = small_config();
    config.noisy = false;
    config.size = 2;
    const std::vector<SequenceRecord> records = generate_dataset(config);
    for (const SequenceRecord& r : records) {
        for (std::size_t l = 0; l < r.length; ++l) {
            CHECK(r.p_hats[l] == 0.0);
            // 2048 shots on a +-1 observable: 5 sigma tolerance.
            CHECK(std::abs(r.noisy[l] - r.noiseless[l]) <
                  5.0 / std::sqrt(2048.0));
        }
    }
}

TEST_CASE("ghz records use survival-ratio p_hats and cos(n theta) labels") {
    GenerationConfig config;
    config.task = TaskKind::Ghz;
    config.size = 3;
    config.plan = RegimePlan::ghz_desk(0.25);
    config.seed = 11;
    config.shots = 2048;
    const std::vector<SequenceRecord> records = generate_dataset(config);
    for (const SequenceRecord& r : records) {
        const double theta = r.params.at("theta");
        for (std::size_t l = 0; l < r.length; ++l) {
            CHECK(r.noiseless[l] ==
                  doctest::Approx(std::cos(double(l + 1) * theta))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("p_hat perturbation rescales the stored p_hats") {
    GenerationConfig config = small_config();
    config.size = 2;
    const std::vector<SequenceRecord> base = generate_dataset(config);
    config.p_hat_perturbation = 0.1;
    const std::vector<SequenceRecord> up = generate_dataset(config);
    for (std::size_t i = 0; i < base.size(); ++i)
        for (std::size_t l = 0; l < base[i].length; ++l)
            CHECK(up[i].p_hats[l] ==
                  doctest::Approx(1.1 * base[i].p_hats[l]).epsilon(1e-12));
}

TEST_CASE("dataset file round trip is byte-identical") {
    const GenerationConfig config = small_config();
    DatasetFile file;
    file.task = to_string(config.task);
    file.config_json = generation_config_to_json(config);
    file.seed = config.seed;
    file.records = generate_dataset(config);

    const std::string path_a = "/tmp/qemlab_test_a.jsonl";
    const std::string path_b = "/tmp/qemlab_test_b.jsonl";
    write_dataset(path_a, file);
    const DatasetFile back = read_dataset(path_a);
    CHECK(back.schema_version == file.schema_version);
    CHECK(back.task == file.task);
    CHECK(back.seed == file.seed);
    REQUIRE(back.records.size() == file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        CHECK(back.records[i].noisy == file.records[i].noisy);
        CHECK(back.records[i].noiseless == file.records[i].noiseless);
        CHECK(back.records[i].p_hats == file.records[i].p_hats);
        CHECK(back.records[i].params == file.records[i].params);
        CHECK(back.records[i].seed == file.records[i].seed);
    }
    write_dataset(path_b, back);
    CHECK(slurp(path_a) == slurp(path_b));
    std::remove(path_a.c_str());
    std::remove(path_b.c_str());
}

TEST_CASE("empty dataset still writes a valid header") {
    GenerationConfig config = small_config();
    config.size = 0;
    DatasetFile file;
    file.task = to_string(config.task);
    file.config_json = generation_config_to_json(config);
    file.seed = config.seed;
    file.records = generate_dataset(config);
    CHECK(file.records.empty());
    const std::string path = "/tmp/qemlab_test_empty.jsonl";
    write_dataset(path, file);
    const DatasetFile back = read_dataset(path);
    CHECK(back.records.empty());
    CHECK(back.task == "trotter");
    std::remove(path.c_str());
}

TEST_CASE("generation config json round trip") {
    GenerationConfig config = small_config();
    config.noise = DecoherenceSpec::scaled_to(30.0);
    config.noise.seed = 5;
    config.p_hat_perturbation = -0.1;
    const GenerationConfig back =
        generation_config_from_json(generation_config_to_json(config));
    CHECK(back.task == config.task);
    CHECK(back.size == config.size);
    CHECK(back.p_r == config.p_r);
    CHECK(back.qubits == config.qubits);
    CHECK(back.shots == config.shots);
    CHECK(back.seed == config.seed);
    CHECK(back.noise.t1_us == config.noise.t1_us);
    CHECK(back.noise.t2_us == config.noise.t2_us);
    CHECK(back.noise.seed == config.noise.seed);
    CHECK(back.p_hat_perturbation == config.p_hat_perturbation);
    CHECK(back.hdt_min == config.hdt_min);
    CHECK(back.j_over_h == config.j_over_h);
}

TEST_CASE("feature variables follow the declared order") {
    const GenerationConfig config = small_config();
    const SequenceRecord record = generate_dataset(config).front();
    const std::vector<FeatureVariable> vars = feature_variables(record, 4);
    REQUIRE(vars.size() == 8);
    CHECK(vars[0].form == VariableForm::SingleDiscrete);  // qubit count
    CHECK(vars[0].values[0] == double(record.n));
    CHECK(vars[1].form == VariableForm::SingleDiscrete);  // circuit code
    CHECK(vars[2].form == VariableForm::SingleDiscrete);  // noise code
    CHECK(vars[3].form == VariableForm::SingleContinuous);
    CHECK(vars[3].values[0] == record.single_error_rate);
    CHECK(vars[4].values[0] == record.two_error_rate);
    CHECK(vars[5].values[0] == record.params.at("hdt"));
    CHECK(vars[6].values[0] == record.params.at("j_over_h"));
    CHECK(vars[7].form == VariableForm::MultiDiscrete);
    REQUIRE(vars[7].values.size() == 4);
    CHECK(vars[7].values[record.n - 1] == 3.0);  // Z on the last qubit

    const TrainingSequence seq = to_training_sequence(record, 4);
    CHECK(seq.input.noisy == record.noisy);
    CHECK(seq.noiseless == record.noiseless);
    CHECK(seq.input.p_hats == record.p_hats);
}

TEST_CASE("rebuilt circuits reproduce the noiseless labels") {
    const GenerationConfig config = small_config();
    const SequenceRecord record = generate_dataset(config).front();
    const LayeredCircuit circuit = rebuild_circuit(record, nullptr);
    const std::vector<double> y = simulate(circuit, SimMode::Noiseless);
    REQUIRE(y.size() >= record.length);
    for (std::size_t l = 0; l < record.length; ++l)
        CHECK(y[l] == doctest::Approx(record.noiseless[l]).epsilon(1e-9));
}

TEST_CASE("experiment config json round trip and schema errors") {
    ExperimentConfig config;
    config.task = TaskKind::Ghz;
    config.t1_grid = {20.0, 40.0};
    config.models = {"nnas"};
    config.epochs = 50;
    config.output_dir = "/tmp/qemlab_exp";
    const ExperimentConfig back =
        experiment_config_from_json(experiment_config_to_json(config));
    CHECK(back.task == config.task);
    CHECK(back.t1_grid == config.t1_grid);
    CHECK(back.models == config.models);
    CHECK(back.epochs == config.epochs);
    CHECK(back.output_dir == config.output_dir);

    CHECK_THROWS_AS(experiment_config_from_json("{\"task\": \"bogus\"}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json("not json"),
                    std::invalid_argument);
}

TEST_CASE("task names round trip") {
    CHECK(task_from_string(to_string(TaskKind::Trotter)) == TaskKind::Trotter);
    CHECK(task_from_string(to_string(TaskKind::Ghz)) == TaskKind::Ghz);
    CHECK_THROWS(task_from_string("qaoa"));
}
