// qemlab: dataset generation, surrogate training, mitigation, evaluation and
// structural analysis for the noise-accumulation QEM laboratory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qem/baselines.hpp"
#include "qem/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << m(r, c) << (c + 1 == m.cols() ? '\n' : ',');
        }
    }
}

struct GenerateArgs {
    std::string task = "trotter";
    std::size_t size = 100;
    double p_r = 0.25;
    std::size_t qubits = 4;
    std::size_t shots = 8192;
    double t1 = 23.2357;
    bool noiseless = false;
    bool paper_plan = false;
    double p_hat_perturbation = 0.0;
    std::uint64_t seed = 0;
    std::string out = "dataset.jsonl";
};

int run_generate(const GenerateArgs& args) {
    qem::GenerationConfig config;
    config.task = qem::task_from_string(args.task);
    config.size = args.size;
    config.p_r = args.p_r;
    config.qubits = args.qubits;
    config.shots = args.shots;
    config.noisy = !args.noiseless;
    config.noise = qem::DecoherenceSpec::scaled_to(args.t1);
    config.p_hat_perturbation = args.p_hat_perturbation;
    config.seed = args.seed;
    if (config.task == qem::TaskKind::Trotter) {
        config.plan = args.paper_plan ? qem::RegimePlan::trotter_paper(args.p_r)
                                      : qem::RegimePlan::trotter_desk(args.p_r);
    } else {
        config.plan = qem::RegimePlan::ghz_desk(args.p_r);
    }
    qem::DatasetFile file;
    file.task = args.task;
    file.config_json = qem::generation_config_to_json(config);
    file.seed = args.seed;
    file.records = qem::generate_dataset(config);
    qem::write_dataset(args.out, file);
    std::cout << "wrote " << file.records.size() << " records to " << args.out
              << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string dataset;
    std::string model = "nnas";
    int epochs = 300;
    double lr = 5e-3;
    int batch_size = 0;
    std::string optimizer = "adam";
    std::uint64_t seed = 0;
    std::string out = "checkpoint.json";
};

int run_train(const TrainArgs& args) {
    const qem::DatasetFile file = qem::read_dataset(args.dataset);
    if (file.records.empty()) {
        throw std::runtime_error("dataset has no records");
    }
    std::size_t md_size = 1, max_len = 1;
    for (const auto& r : file.records) {
        md_size = std::max(md_size, r.n);
        max_len = std::max(max_len, r.length);
    }
    const auto seqs = qem::to_training_sequences(file.records, md_size);
    qem::SurrogateModel model = qem::SurrogateModel::init(
        qem::surrogate_kind_from_string(args.model),
        seqs.front().input.variables, int(max_len), true, args.seed);
    qem::TrainingConfig tc;
    tc.learning_rate = args.lr;
    tc.epochs = args.epochs;
    tc.batch_size = args.batch_size;
    tc.seed = args.seed;
    tc.optimizer = args.optimizer == "sgd" ? qem::Optimizer::Sgd
                                           : qem::Optimizer::Adam;
    const qem::TrainResult result = qem::train(std::move(model), seqs, tc);
    std::ofstream out(args.out);
    out << qem::checkpoint_to_json(result.model);
    std::cout << "trained " << args.model << ": loss "
              << result.loss_curve.front() << " -> "
              << result.loss_curve.back() << ", checkpoint " << args.out
              << '\n';
    return kExitOk;
}

struct MitigateArgs {
    std::string dataset;
    std::string checkpoint;  // surrogate path, or empty when method is set
    std::string method;      // zne | pec | cdr
    double t1 = 23.2357;
    std::size_t shots = 8192;
    std::size_t limit = 0;
    std::uint64_t seed = 0;
    std::string out = "mitigated.csv";
};

int run_mitigate(const MitigateArgs& args) {
    const qem::DatasetFile file = qem::read_dataset(args.dataset);
    const std::size_t count = args.limit == 0
                                  ? file.records.size()
                                  : std::min(args.limit, file.records.size());
    std::ofstream out(args.out);
    out << "record,layer,noisy,mitigated,noiseless\n";

    qem::SurrogateModel model;
    std::size_t md_size = 1;
    for (const auto& r : file.records) md_size = std::max(md_size, r.n);
    if (!args.checkpoint.empty()) {
        model = qem::checkpoint_from_json(slurp(args.checkpoint));
    }
    const qem::DecoherenceSpec noise = qem::DecoherenceSpec::scaled_to(args.t1);

    for (std::size_t i = 0; i < count; ++i) {
        const qem::SequenceRecord& record = file.records[i];
        std::vector<double> mitigated;
        if (!args.checkpoint.empty()) {
            mitigated = qem::predict(
                            model,
                            qem::to_training_sequence(record, md_size).input)
                            .predicted;
        } else if (args.method == "zne") {
            mitigated = qem::zne_mitigate(
                            qem::rebuild_circuit(record, &noise),
                            qem::RichardsonPlan::from_scales({1.0, 3.0}),
                            qem::SimMode::Noisy, args.shots, args.seed + i)
                            .mitigated;
        } else if (args.method == "pec") {
            qem::PecOptions opts;
            opts.mode = qem::SimMode::Noisy;
            opts.seed = args.seed + i;
            mitigated = qem::pec_mitigate(
                            qem::rebuild_circuit(record, &noise),
                            qem::spl_calibrate(qem::two_qubit_channel(noise),
                                               qem::CalibrationMode::Exact),
                            opts)
                            .mitigated;
        } else if (args.method == "cdr") {
            mitigated =
                qem::cdr_mitigate(qem::rebuild_circuit(record, &noise),
                                  qem::CliffordSubstitution{},
                                  qem::default_cdr_evaluator(true, args.shots,
                                                             args.seed + i),
                                  args.seed + i, args.shots)
                    .mitigated;
        } else {
            throw std::invalid_argument(
                "need --checkpoint or --method zne|pec|cdr");
        }
        for (std::size_t l = 0; l < record.length; ++l) {
            out << i << ',' << l << ',' << record.noisy[l] << ','
                << mitigated[l] << ',' << record.noiseless[l] << '\n';
        }
    }
    std::cout << "wrote " << args.out << '\n';
    return kExitOk;
}

int run_evaluate(const std::string& config_path) {
    const qem::ExperimentConfig config =
        qem::experiment_config_from_json(slurp(config_path));
    const qem::ExperimentResult result = qem::run_experiment(config);
    std::cout << qem::MetricReport::csv_header() << '\n';
    for (const auto& report : result.reports) {
        std::cout << report.csv_row() << '\n';
    }
    return kExitOk;
}

struct AnalyzeArgs {
    std::string checkpoint;
    std::string dataset;
    std::size_t index = 0;
    double t1 = 23.2357;
    std::string out_dir = "analysis";
};

int run_analyze(const AnalyzeArgs& args) {
    const qem::SurrogateModel model =
        qem::checkpoint_from_json(slurp(args.checkpoint));
    const qem::DatasetFile file = qem::read_dataset(args.dataset);
    if (args.index >= file.records.size()) {
        throw std::runtime_error("record index out of range");
    }
    std::size_t md_size = 1;
    for (const auto& r : file.records) md_size = std::max(md_size, r.n);
    const qem::StructureAnalysis analysis = qem::analyze_structure(
        model, file.records[args.index],
        qem::DecoherenceSpec::scaled_to(args.t1), md_size);

    namespace fs = std::filesystem;
    fs::create_directories(args.out_dir);
    for (std::size_t l = 0; l < analysis.pooled_ptms.size(); ++l) {
        const std::string suffix = "_l" + std::to_string(l + 1) + ".csv";
        write_matrix_csv(args.out_dir + "/pooled_ptm" + suffix,
                         analysis.pooled_ptms[l]);
        write_matrix_csv(args.out_dir + "/surrogate_outer" + suffix,
                         analysis.surrogate_outer[l]);
        write_matrix_csv(args.out_dir + "/spearman" + suffix,
                         analysis.spearman_maps[l]);
    }
    std::ofstream curves(args.out_dir + "/entropy_curves.csv");
    curves << "layer,ptm_entropy,surrogate_entropy\n";
    for (std::size_t l = 0; l < analysis.ptm_entropy.values.size(); ++l) {
        curves << (l + 1) << ',' << analysis.ptm_entropy.values[l] << ','
               << analysis.surrogate_entropy.values[l] << '\n';
    }
    std::ofstream corr(args.out_dir + "/correspondence.csv");
    corr << "pearson,spearman,defined,ptm_degenerate\n"
         << analysis.correspondence.pearson << ','
         << analysis.correspondence.spearman << ','
         << analysis.correspondence.defined << ','
         << analysis.ptm_entropy.degenerate << '\n';
    std::cout << "wrote analysis to " << args.out_dir << '\n';
    return kExitOk;
}

int run_ledger() {
    using qem::OverheadLedger;
    const OverheadLedger zne{2, 8192.0};
    const OverheadLedger pec{100, 16384.0 / 100.0};
    const OverheadLedger cdr{11, 8192.0};
    const OverheadLedger ml = qem::ml_style_ledger();
    std::cout << "method,circuit_instances,shots_per_instance,total\n";
    auto row = [](const char* name, const OverheadLedger& l) {
        std::cout << name << ',' << l.circuit_instances << ','
                  << l.shots_per_instance << ',' << l.total() << '\n';
    };
    row("zne", zne);
    row("pec", pec);
    row("cdr", cdr);
    row("ml", ml);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale quantum error mitigation laboratory"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "generate a dataset");
    generate->add_option("--task", gen.task)->check(CLI::IsMember({"trotter", "ghz"}));
    generate->add_option("--size", gen.size);
    generate->add_option("--p-r", gen.p_r);
    generate->add_option("--qubits", gen.qubits);
    generate->add_option("--shots", gen.shots);
    generate->add_option("--t1", gen.t1);
    generate->add_flag("--noiseless", gen.noiseless);
    generate->add_flag("--paper-plan", gen.paper_plan);
    generate->add_option("--p-hat-perturbation", gen.p_hat_perturbation);
    generate->add_option("--seed", gen.seed)->required();
    generate->add_option("--out", gen.out);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train a surrogate model");
    train_cmd->add_option("--dataset", tr.dataset)->required();
    train_cmd->add_option("--model", tr.model)
        ->check(CLI::IsMember({"nnas", "nea", "nna"}));
    train_cmd->add_option("--epochs", tr.epochs);
    train_cmd->add_option("--lr", tr.lr);
    train_cmd->add_option("--batch-size", tr.batch_size);
    train_cmd->add_option("--optimizer", tr.optimizer)
        ->check(CLI::IsMember({"adam", "sgd"}));
    train_cmd->add_option("--seed", tr.seed)->required();
    train_cmd->add_option("--out", tr.out);

    MitigateArgs mit;
    auto* mitigate = app.add_subcommand("mitigate", "mitigate a dataset");
    mitigate->add_option("--dataset", mit.dataset)->required();
    mitigate->add_option("--checkpoint", mit.checkpoint);
    mitigate->add_option("--method", mit.method)
        ->check(CLI::IsMember({"zne", "pec", "cdr"}));
    mitigate->add_option("--t1", mit.t1);
    mitigate->add_option("--shots", mit.shots);
    mitigate->add_option("--limit", mit.limit);
    mitigate->add_option("--seed", mit.seed);
    mitigate->add_option("--out", mit.out);

    std::string eval_config;
    auto* evaluate = app.add_subcommand("evaluate", "run an experiment config");
    evaluate->add_option("--config", eval_config)->required();

    AnalyzeArgs an;
    auto* analyze =
        app.add_subcommand("analyze", "structural correspondence analysis");
    analyze->add_option("--checkpoint", an.checkpoint)->required();
    analyze->add_option("--dataset", an.dataset)->required();
    analyze->add_option("--index", an.index);
    analyze->add_option("--t1", an.t1);
    analyze->add_option("--out-dir", an.out_dir);

    auto* ledger = app.add_subcommand("ledger", "print overhead ledgers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return run_generate(gen);
        if (train_cmd->parsed()) return run_train(tr);
        if (mitigate->parsed()) return run_mitigate(mit);
        if (evaluate->parsed()) return run_evaluate(eval_config);
        if (analyze->parsed()) return run_analyze(an);
        if (ledger->parsed()) return run_ledger();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitConfig;
}
