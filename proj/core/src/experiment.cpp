#include "qem/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qem/baselines.hpp"

namespace qem {

using nlohmann::json;

std::vector<FeatureVariable> feature_variables(const SequenceRecord& record,
                                               std::size_t md_size) {
    if (record.n > md_size) {
        throw std::invalid_argument("md_size smaller than record width");
    }
    const bool trotter = record.task == "trotter";
    std::vector<FeatureVariable> vars;
    vars.push_back({VariableForm::SingleDiscrete, {double(record.n)}});
    vars.push_back({VariableForm::SingleDiscrete, {trotter ? 1.0 : 2.0}});
    vars.push_back({VariableForm::SingleDiscrete,
                    {record.single_error_rate > 0.0 ? 1.0 : 0.0}});
    vars.push_back(
        {VariableForm::SingleContinuous, {record.single_error_rate}});
    vars.push_back({VariableForm::SingleContinuous, {record.two_error_rate}});
    if (trotter) {
        vars.push_back(
            {VariableForm::SingleContinuous, {record.params.at("hdt")}});
        vars.push_back(
            {VariableForm::SingleContinuous, {record.params.at("j_over_h")}});
    } else {
        vars.push_back(
            {VariableForm::SingleContinuous, {record.params.at("theta")}});
        vars.push_back({VariableForm::SingleContinuous, {0.0}});
    }
    // Observable letter code, zero-padded to md_size: Z on the last qubit
    // (trotter) or X everywhere (ghz).
    std::vector<double> code(md_size, 0.0);
    if (trotter) {
        code[record.n - 1] = 3.0;
    } else {
        for (std::size_t q = 0; q < record.n; ++q) code[q] = 1.0;
    }
    vars.push_back({VariableForm::MultiDiscrete, std::move(code)});
    return vars;
}

TrainingSequence to_training_sequence(const SequenceRecord& record,
                                      std::size_t md_size) {
    TrainingSequence seq;
    seq.input.variables = feature_variables(record, md_size);
    seq.input.noisy = record.noisy;
    seq.input.p_hats = record.p_hats;
    seq.noiseless = record.noiseless;
    return seq;
}

std::vector<TrainingSequence> to_training_sequences(
    const std::vector<SequenceRecord>& records, std::size_t md_size) {
    std::vector<TrainingSequence> out;
    out.reserve(records.size());
    for (const SequenceRecord& r : records) {
        out.push_back(to_training_sequence(r, md_size));
    }
    return out;
}

LayeredCircuit rebuild_circuit(const SequenceRecord& record,
                               const DecoherenceSpec* noise) {
    LayeredCircuit circuit;
    if (record.task == "trotter") {
        circuit = compile(build_ising_trotter(record.n,
                                              record.params.at("j_over_h"),
                                              1.0, record.params.at("hdt"),
                                              record.length));
    } else {
        circuit =
            compile(build_ghz_metrology(record.n, record.params.at("theta")));
    }
    if (noise != nullptr) {
        DecoherenceSpec spec = *noise;
        spec.seed = record.seed + record.n + 977 * record.length;
        circuit = attach_noise(circuit, spec);
    }
    return circuit;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["task"] = to_string(c.task);
    j["t1_grid"] = c.t1_grid;
    j["models"] = c.models;
    j["baselines"] = c.baselines;
    j["train_size"] = c.train_size;
    j["test_size"] = c.test_size;
    j["p_r"] = c.p_r;
    j["qubits"] = c.qubits;
    j["shots"] = c.shots;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["seed"] = c.seed;
    j["baseline_sequences"] = c.baseline_sequences;
    j["p_hat_perturbation"] = c.p_hat_perturbation;
    j["output_dir"] = c.output_dir;
    return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") +
                                    e.what());
    }
    ExperimentConfig c;
    try {
        c.task = task_from_string(j.at("task"));
        c.t1_grid = j.at("t1_grid").get<std::vector<double>>();
        c.models = j.at("models").get<std::vector<std::string>>();
        c.baselines = j.at("baselines").get<std::vector<std::string>>();
        c.train_size = j.at("train_size");
        c.test_size = j.at("test_size");
        c.p_r = j.at("p_r");
        c.qubits = j.at("qubits");
        c.shots = j.at("shots");
        c.epochs = j.at("epochs");
        c.learning_rate = j.at("learning_rate");
        c.seed = j.at("seed");
        c.baseline_sequences = j.at("baseline_sequences");
        c.p_hat_perturbation = j.at("p_hat_perturbation");
        c.output_dir = j.at("output_dir");
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config schema error: ") +
                                    e.what());
    }
    return c;
}

namespace {

std::string format_t1(double t1) {
    std::ostringstream os;
    os << t1;
    std::string s = os.str();
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

double point_mae_record(const std::vector<double>& pred,
                        const std::vector<double>& truth) {
    double acc = 0.0;
    for (std::size_t l = 0; l < pred.size(); ++l) {
        acc += std::abs(pred[l] - truth[l]);
    }
    return acc / double(pred.size());
}

// Runs one baseline on a record, returning per-layer mitigated values. For
// ghz records every sequence element is its own prefix circuit.
std::vector<double> mitigate_record(const std::string& method,
                                    const SequenceRecord& record,
                                    const DecoherenceSpec& noise,
                                    std::size_t shots, std::uint64_t seed,
                                    OverheadLedger* ledger) {
    auto run_one = [&](const SequenceRecord& rec) {
        const LayeredCircuit noisy = rebuild_circuit(rec, &noise);
        if (method == "zne") {
            auto plan = RichardsonPlan::from_scales({1.0, 3.0});
            auto res = zne_mitigate(noisy, plan, SimMode::Noisy, shots, seed);
            if (ledger != nullptr) *ledger = res.ledger;
            return res.mitigated;
        }
        if (method == "pec") {
            const SplModel spl =
                spl_calibrate(two_qubit_channel(noise), CalibrationMode::Exact);
            PecOptions opts;
            opts.mode = SimMode::Noisy;
            opts.seed = seed;
            auto res = pec_mitigate(noisy, spl, opts);
            if (ledger != nullptr) *ledger = res.ledger;
            return res.mitigated;
        }
        if (method == "cdr") {
            CliffordSubstitution sub;
            auto res = cdr_mitigate(noisy, sub,
                                    default_cdr_evaluator(true, shots, seed),
                                    seed, shots);
            if (ledger != nullptr) *ledger = res.ledger;
            return res.mitigated;
        }
        throw std::invalid_argument("unknown baseline: " + method);
    };

    if (record.task == "trotter") return run_one(record);
    std::vector<double> out;
    for (std::size_t l = 1; l <= record.length; ++l) {
        SequenceRecord prefix = record;
        prefix.n = l;
        prefix.length = l;
        out.push_back(run_one(prefix).back());
    }
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    ExperimentResult result;

    for (double t1 : config.t1_grid) {
        DecoherenceSpec noise = DecoherenceSpec::scaled_to(t1);
        const std::string tag = "t1" + format_t1(t1);

        GenerationConfig gen;
        gen.task = config.task;
        gen.size = config.train_size;
        gen.p_r = config.p_r;
        gen.qubits = config.qubits;
        gen.plan = config.task == TaskKind::Trotter
                       ? RegimePlan::trotter_desk(config.p_r)
                       : RegimePlan::ghz_desk(config.p_r);
        gen.shots = config.shots;
        gen.noise = noise;
        gen.p_hat_perturbation = config.p_hat_perturbation;
        gen.seed = config.seed;
        std::vector<SequenceRecord> train_records = generate_dataset(gen);
        gen.size = config.test_size;
        gen.seed = config.seed + 1000003;  // disjoint parameter draws
        std::vector<SequenceRecord> test_records = generate_dataset(gen);

        for (const auto& [name, records] :
             {std::pair{std::string("train"), &train_records},
              std::pair{std::string("test"), &test_records}}) {
            DatasetFile file;
            file.task = to_string(config.task);
            file.config_json = generation_config_to_json(gen);
            file.seed = config.seed;
            file.records = *records;
            write_dataset(config.output_dir + "/dataset_" + tag + "_" + name +
                              ".jsonl",
                          file);
        }

        std::size_t md_size = config.qubits, max_len = 1;
        for (const auto* recs : {&train_records, &test_records}) {
            for (const SequenceRecord& r : *recs) {
                md_size = std::max(md_size, r.n);
                max_len = std::max(max_len, r.length);
            }
        }
        const auto train_seqs = to_training_sequences(train_records, md_size);
        const auto test_seqs = to_training_sequences(test_records, md_size);

        std::vector<std::vector<double>> truth, noisy_pred;
        for (const auto& s : test_seqs) {
            truth.push_back(s.noiseless);
            noisy_pred.push_back(s.input.noisy);
        }
        const double noisy_mae = mae(noisy_pred, truth, MaeMode::Point);

        for (const std::string& base : config.baselines) {
            if (base == "noisy") {
                MetricReport report;
                report.label = "noisy@" + tag;
                report.mae_point = noisy_mae;
                report.mae_seq_norm = mae(noisy_pred, truth, MaeMode::SeqNorm);
                report.overhead = OverheadLedger{0, 0.0};
                result.reports.push_back(report);
                continue;
            }
            const std::size_t count =
                std::min(config.baseline_sequences, test_records.size());
            std::vector<std::vector<double>> pred, sub_truth, sub_noisy;
            OverheadLedger ledger;
            for (std::size_t i = 0; i < count; ++i) {
                pred.push_back(mitigate_record(base, test_records[i], noise,
                                               config.shots,
                                               config.seed + i, &ledger));
                sub_truth.push_back(test_records[i].noiseless);
                sub_noisy.push_back(test_records[i].noisy);
            }
            MetricReport report;
            report.label = base + "@" + tag;
            report.mae_point = mae(pred, sub_truth, MaeMode::Point);
            report.mae_seq_norm = mae(pred, sub_truth, MaeMode::SeqNorm);
            report.rd_point = rd(mae(sub_noisy, sub_truth, MaeMode::Point),
                                 report.mae_point, 0.0)
                                  .value;
            report.overhead = ledger;
            result.reports.push_back(report);
        }

        for (const std::string& name : config.models) {
            const SurrogateKind kind = surrogate_kind_from_string(name);
            const std::string ckpt =
                config.output_dir + "/ckpt_" + name + "_" + tag + ".json";
            SurrogateModel model;
            if (fs::exists(ckpt)) {
                std::ifstream in(ckpt);
                std::stringstream buf;
                buf << in.rdbuf();
                model = checkpoint_from_json(buf.str());
            } else {
                model = SurrogateModel::init(
                    kind, train_seqs.front().input.variables, int(max_len),
                    true, config.seed);
                TrainingConfig tc;
                tc.learning_rate = config.learning_rate;
                tc.epochs = config.epochs;
                tc.seed = config.seed;
                model = train(std::move(model), train_seqs, tc).model;
                std::ofstream out(ckpt);
                out << checkpoint_to_json(model);
            }
            result.checkpoint_paths.push_back(ckpt);

            std::vector<std::vector<double>> pred;
            for (const auto& s : test_seqs) {
                pred.push_back(predict(model, s.input).predicted);
            }
            MetricReport report;
            report.label = name + "@" + tag;
            report.mae_point = mae(pred, truth, MaeMode::Point);
            report.mae_seq_norm = mae(pred, truth, MaeMode::SeqNorm);
            report.rd_point = rd(noisy_mae, report.mae_point, 0.0).value;
            report.overhead = ml_style_ledger(config.shots);
            result.reports.push_back(report);
        }
    }

    std::ofstream csv(config.output_dir + "/metrics.csv");
    csv << MetricReport::csv_header() << '\n';
    json jreports = json::array();
    for (const MetricReport& r : result.reports) {
        csv << r.csv_row() << '\n';
        jreports.push_back({{"label", r.label},
                            {"mae_point", r.mae_point},
                            {"mae_seq_norm", r.mae_seq_norm},
                            {"rd_point", r.rd_point},
                            {"rmse_theta", r.rmse_theta},
                            {"fit_rate_r", r.fit_rate_r},
                            {"ledger_total", r.overhead.total()}});
    }
    std::ofstream js(config.output_dir + "/metrics.json");
    js << jreports.dump(2);
    return result;
}

StructureAnalysis analyze_structure(const SurrogateModel& model,
                                    const SequenceRecord& record,
                                    const DecoherenceSpec& noise,
                                    std::size_t md_size) {
    if (record.n > kDensePtmQubitCap) {
        throw std::invalid_argument("structural analysis capped at n <= 3");
    }
    if (model.kind != SurrogateKind::Nnas) {
        throw std::invalid_argument("structural analysis needs an NNAS model");
    }
    const LayeredCircuit circuit = rebuild_circuit(record, &noise);
    const TrainingSequence seq = to_training_sequence(record, md_size);
    const ForwardResult forward = predict(model, seq.input);

    const Eigen::Index d = model.hidden_dim;
    StructureAnalysis out;
    std::vector<Eigen::VectorXd> surrogate_samples;
    std::vector<Eigen::MatrixXd> ptm_samples;
    CumulativeNoiseState state = CumulativeNoiseState::initial(record.n);
    for (std::size_t l = 0; l < record.length; ++l) {
        state = accumulate_noise(state, circuit.layers[l]);
        const Eigen::MatrixXd& n_ptm = state.noise_ptm.m;
        if (n_ptm.rows() % d != 0) {
            throw std::invalid_argument(
                "PTM side not divisible by hidden_dim");
        }
        const Eigen::MatrixXd pooled = sum_pool(n_ptm, n_ptm.rows() / d);
        const Eigen::VectorXd& nh = forward.n_hats.at(l);
        const Eigen::MatrixXd outer = nh * nh.transpose();
        out.pooled_ptms.push_back(pooled);
        out.surrogate_outer.push_back(outer);
        out.spearman_maps.push_back(spearman_matrix(pooled, outer));
        surrogate_samples.push_back(nh);
        ptm_samples.push_back(n_ptm);
    }
    out.ptm_entropy = entropy_curve(
        [&ptm_samples] {
            std::vector<Eigen::VectorXd> flat;
            for (const auto& m : ptm_samples) {
                flat.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(),
                                                                 m.size()));
            }
            return flat;
        }());
    out.surrogate_entropy = entropy_curve(surrogate_samples);
    if (record.length >= 3) {
        out.correspondence =
            entropy_correspondence(surrogate_samples, ptm_samples);
    }
    return out;
}

}  // namespace qem
