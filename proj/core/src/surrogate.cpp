#include "qem/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qem {

using Eigen::MatrixXd;
using nlohmann::json;

std::string to_string(SurrogateKind kind) {
    switch (kind) {
        case SurrogateKind::Nnas: return "nnas";
        case SurrogateKind::Nea: return "nea";
        case SurrogateKind::Nna: return "nna";
    }
    throw std::logic_error("unknown surrogate kind");
}

SurrogateKind surrogate_kind_from_string(const std::string& name) {
    if (name == "nnas") return SurrogateKind::Nnas;
    if (name == "nea") return SurrogateKind::Nea;
    if (name == "nna") return SurrogateKind::Nna;
    throw std::invalid_argument("unknown surrogate kind: " + name);
}

std::vector<double> SequenceInput::survivals() const {
    std::vector<double> out(p_hats.size());
    double acc = 1.0;
    for (std::size_t l = 0; l < p_hats.size(); ++l) {
        acc *= 1.0 - p_hats[l];
        out[l] = acc;
    }
    return out;
}

SurrogateModel SurrogateModel::init(
    SurrogateKind kind, const std::vector<FeatureVariable>& prototype,
    int max_length, bool include_noisy, std::uint64_t seed, int hidden_dim) {
    if (max_length < 1 || hidden_dim < 1) {
        throw std::invalid_argument("bad surrogate dimensions");
    }
    SurrogateModel model;
    model.kind = kind;
    model.hidden_dim = hidden_dim;
    model.max_length = max_length;
    model.include_noisy = include_noisy;
    for (const auto& v : prototype) {
        model.variable_forms.push_back(v.form);
        model.multi_sizes.push_back(
            v.form == VariableForm::MultiDiscrete ? int(v.values.size()) : 1);
        if (v.values.empty()) {
            throw std::invalid_argument("feature variable without values");
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randmat = [&](int rows, int cols, double scale) {
        MatrixXd m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
        }
        return m;
    };
    auto zeros = [](int rows, int cols) { return MatrixXd::Zero(rows, cols); };

    const int d = hidden_dim;
    const int big_l = max_length;
    const int m_rows = model.feature_rows();
    for (std::size_t i = 0; i < model.variable_forms.size(); ++i) {
        const std::string p = "v" + std::to_string(i) + ".";
        const double row_scale = 1.0 / std::sqrt(double(big_l));
        switch (model.variable_forms[i]) {
            case VariableForm::SingleDiscrete:
                model.params[p + "w1"] = randmat(1, 1, 1.0);
                model.params[p + "w2"] = randmat(1, big_l, row_scale);
                model.params[p + "b2"] = zeros(1, big_l);
                break;
            case VariableForm::SingleContinuous:
                model.params[p + "w1"] = randmat(1, 1, 1.0);
                model.params[p + "b1"] = zeros(1, 1);
                model.params[p + "w2"] = randmat(1, big_l, row_scale);
                model.params[p + "b2"] = zeros(1, big_l);
                break;
            case VariableForm::MultiDiscrete: {
                const int s = model.multi_sizes[i];
                model.params[p + "w1"] = randmat(s, big_l, row_scale);
                model.params[p + "w2"] =
                    randmat(1, s, 1.0 / std::sqrt(double(s)));
                model.params[p + "b2"] = zeros(1, big_l);
                break;
            }
        }
    }

    if (kind == SurrogateKind::Nna) {
        // 5-layer MLP, hidden width d, applied column-wise.
        model.params["nna.w1"] = randmat(d, m_rows, 1.0 / std::sqrt(m_rows));
        model.params["nna.b1"] = zeros(d, 1);
        for (int k = 2; k <= 4; ++k) {
            const std::string p = "nna.w" + std::to_string(k);
            model.params[p] = randmat(d, d, 1.0 / std::sqrt(double(d)));
            model.params["nna.b" + std::to_string(k)] = zeros(d, 1);
        }
        model.params["nna.w5"] = randmat(1, d, 1.0 / std::sqrt(double(d)));
        model.params["nna.b5"] = zeros(1, 1);
        return model;
    }

    model.params["rnn.wx"] = randmat(d, m_rows, 1.0 / std::sqrt(m_rows));
    model.params["rnn.bx"] = zeros(d, 1);
    model.params["rnn.wh"] = randmat(d, d, 1.0 / std::sqrt(double(d)));
    model.params["rnn.bh"] = zeros(d, 1);
    if (kind == SurrogateKind::Nnas) {
        model.params["ext.wu"] = randmat(d, d, 1.0 / std::sqrt(double(d)));
        model.params["ext.bu"] = zeros(d, 1);
        model.params["ext.wn"] = randmat(d, d, 1.0 / std::sqrt(double(d)));
        model.params["ext.bn"] = zeros(d, 1);
        // Readout starts at zero so mitigation begins at the survival-only
        // identity point.
        model.params["ext.wr"] = zeros(1, d);
        model.params["ext.br"] = zeros(1, 1);
        model.params["out.b"] = zeros(1, big_l);
    } else {  // Nea
        model.params["nea.w3"] = zeros(1, d);
        model.params["nea.b3"] = zeros(1, 1);
    }
    return model;
}

namespace {

struct TapedModel {
    ad::Tape* tape;
    std::map<std::string, int> nodes;

    int at(const std::string& name) const {
        auto it = nodes.find(name);
        if (it == nodes.end()) {
            throw std::logic_error("missing parameter node: " + name);
        }
        return it->second;
    }
};

TapedModel register_params(ad::Tape& tape, const SurrogateModel& model) {
    TapedModel taped{&tape, {}};
    for (const auto& [name, value] : model.params) {
        taped.nodes[name] = tape.input(value);
    }
    return taped;
}

void check_input(const SurrogateModel& model, const SequenceInput& input) {
    if (input.variables.size() != model.variable_forms.size()) {
        throw std::invalid_argument("feature variable count mismatch");
    }
    for (std::size_t i = 0; i < input.variables.size(); ++i) {
        if (input.variables[i].form != model.variable_forms[i]) {
            throw std::invalid_argument("undeclared variable form");
        }
        const int expect = model.multi_sizes[i];
        if (int(input.variables[i].values.size()) != expect &&
            model.variable_forms[i] == VariableForm::MultiDiscrete) {
            throw std::invalid_argument("multi-discrete size mismatch");
        }
    }
    if (input.noisy.size() != input.p_hats.size()) {
        throw std::invalid_argument("noisy/p_hat length mismatch");
    }
    if (int(input.noisy.size()) > model.max_length) {
        throw std::invalid_argument("sequence longer than model max_length");
    }
    if (input.noisy.empty()) {
        throw std::invalid_argument("empty sequence");
    }
}

// Embedding rows, each a 1 x max_length node; the noisy row (when enabled)
// is a constant 1 x len node appended last.
std::vector<int> embedding_rows(const TapedModel& tm,
                                const SurrogateModel& model,
                                const SequenceInput& input) {
    ad::Tape& tape = *tm.tape;
    std::vector<int> rows;
    for (std::size_t i = 0; i < input.variables.size(); ++i) {
        const std::string p = "v" + std::to_string(i) + ".";
        const FeatureVariable& var = input.variables[i];
        switch (var.form) {
            case VariableForm::SingleDiscrete: {
                // row = (w1 * value) * w2 + b2
                int s = tape.scale(tm.at(p + "w1"), var.values.at(0));
                int row = tape.matmul(s, tm.at(p + "w2"));
                rows.push_back(tape.add(row, tm.at(p + "b2")));
                break;
            }
            case VariableForm::SingleContinuous: {
                int s = tape.scale(tm.at(p + "w1"), var.values.at(0));
                s = tape.add(s, tm.at(p + "b1"));
                int row = tape.matmul(s, tm.at(p + "w2"));
                rows.push_back(tape.add(row, tm.at(p + "b2")));
                break;
            }
            case VariableForm::MultiDiscrete: {
                // E = diag(values) * W1; row = w2 * E + b2
                const int s = int(var.values.size());
                MatrixXd broadcast(s, model.max_length);
                for (int r = 0; r < s; ++r) {
                    broadcast.row(r).setConstant(var.values[std::size_t(r)]);
                }
                int e = tape.mul_const(tm.at(p + "w1"), broadcast);
                int row = tape.matmul(tm.at(p + "w2"), e);
                rows.push_back(tape.add(row, tm.at(p + "b2")));
                break;
            }
        }
    }
    if (model.include_noisy) {
        MatrixXd noisy_row(1, Eigen::Index(input.noisy.size()));
        for (std::size_t l = 0; l < input.noisy.size(); ++l) {
            noisy_row(0, Eigen::Index(l)) = input.noisy[l];
        }
        rows.push_back(tape.input(noisy_row));
    }
    return rows;
}

// Feature column x_l as an M x 1 node.
int feature_column(const TapedModel& tm, const std::vector<int>& rows,
                   std::size_t l) {
    ad::Tape& tape = *tm.tape;
    std::vector<int> entries;
    entries.reserve(rows.size());
    for (int row : rows) {
        entries.push_back(tape.element(row, 0, Eigen::Index(l)));
    }
    return tape.vstack(entries);
}

struct ForwardNodes {
    std::vector<int> predicted;  // 1x1 nodes, one per layer
    std::vector<int> n_hats;     // NNAS only
    bool clamped = false;
};

ForwardNodes build_forward(const TapedModel& tm, const SurrogateModel& model,
                           const SequenceInput& input) {
    ad::Tape& tape = *tm.tape;
    check_input(model, input);
    const std::size_t len = input.length();
    const std::vector<int> rows = embedding_rows(tm, model, input);
    const std::vector<double> survival = input.survivals();
    ForwardNodes out;

    if (model.kind == SurrogateKind::Nna) {
        for (std::size_t l = 0; l < len; ++l) {
            int a = feature_column(tm, rows, l);
            for (int k = 1; k <= 5; ++k) {
                const std::string suffix = std::to_string(k);
                a = tape.add(tape.matmul(tm.at("nna.w" + suffix), a),
                             tm.at("nna.b" + suffix));
                if (k < 5) a = tape.tanh_(a);
            }
            out.predicted.push_back(a);  // raw prediction, no survival head
        }
        return out;
    }

    const int d = model.hidden_dim;
    int h = tape.input(MatrixXd::Zero(d, 1));
    for (std::size_t l = 0; l < len; ++l) {
        int x = feature_column(tm, rows, l);
        int pre = tape.add(tape.matmul(tm.at("rnn.wx"), x), tm.at("rnn.bx"));
        pre = tape.add(pre, tape.add(tape.matmul(tm.at("rnn.wh"), h),
                                     tm.at("rnn.bh")));
        h = tape.tanh_(pre);

        int r;  // 1x1 additive denominator term
        if (model.kind == SurrogateKind::Nnas) {
            int u = tape.add(tape.matmul(tm.at("ext.wu"), h),
                             tm.at("ext.bu"));
            int n = tape.add(tape.matmul(tm.at("ext.wn"), h),
                             tm.at("ext.bn"));
            int s = tape.softmax_rows(
                tape.scale(tape.matmul(u, tape.transpose(n)),
                           1.0 / std::sqrt(double(d))));
            int a = tape.matmul(s, u);
            r = tape.add(tape.matmul(tm.at("ext.wr"), a), tm.at("ext.br"));
            out.n_hats.push_back(n);
        } else {  // Nea
            r = tape.add(tape.matmul(tm.at("nea.w3"), h), tm.at("nea.b3"));
        }

        MatrixXd surv(1, 1);
        surv(0, 0) = survival[l];
        int denom = tape.clamp_magnitude(tape.add_const(r, surv), 1e-6,
                                         &out.clamped);
        int yhat = tape.scale(tape.reciprocal(denom), input.noisy[l]);
        if (model.kind == SurrogateKind::Nnas) {
            yhat = tape.add(yhat, tape.element(tm.at("out.b"), 0,
                                               Eigen::Index(l)));
        }
        out.predicted.push_back(yhat);
    }
    return out;
}

}  // namespace

ForwardResult predict(const SurrogateModel& model,
                      const SequenceInput& input) {
    ad::Tape tape;
    TapedModel tm = register_params(tape, model);
    ForwardNodes nodes = build_forward(tm, model, input);
    ForwardResult result;
    result.denominator_clamped = nodes.clamped;
    for (int id : nodes.predicted) {
        result.predicted.push_back(tape.value(id)(0, 0));
    }
    for (int id : nodes.n_hats) {
        result.n_hats.push_back(tape.value(id).col(0));
    }
    return result;
}

Eigen::MatrixXd embed_features(const SurrogateModel& model,
                               const SequenceInput& input) {
    ad::Tape tape;
    TapedModel tm = register_params(tape, model);
    check_input(model, input);
    const std::vector<int> rows = embedding_rows(tm, model, input);
    const Eigen::Index len = Eigen::Index(input.length());
    MatrixXd x(Eigen::Index(rows.size()), len);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        x.row(Eigen::Index(r)) = tape.value(rows[r]).leftCols(len);
    }
    return x;
}

std::vector<double> mitigate_sequence(const std::vector<double>& noisy,
                                      const std::vector<double>& p_hats,
                                      const std::vector<double>& r_hat,
                                      const std::vector<double>& bias,
                                      bool* flagged) {
    const std::size_t len = noisy.size();
    if (p_hats.size() != len || r_hat.size() != len || bias.size() != len) {
        throw std::invalid_argument("mitigate_sequence length mismatch");
    }
    std::vector<double> out(len);
    double survival = 1.0;
    for (std::size_t l = 0; l < len; ++l) {
        survival *= 1.0 - p_hats[l];
        double denom = survival + r_hat[l];
        if (std::abs(denom) < 1e-6) {
            denom = denom < 0.0 ? -1e-6 : 1e-6;
            if (flagged != nullptr) *flagged = true;
        }
        out[l] = noisy[l] / denom + bias[l];
    }
    return out;
}

namespace {

// Mean squared error over all (sequence, layer) points, built on `tape`.
int build_loss(ad::Tape& tape, const TapedModel& tm,
               const SurrogateModel& model,
               const std::vector<TrainingSequence>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    int acc = -1;
    std::size_t points = 0;
    for (const TrainingSequence& seq : dataset) {
        if (seq.noiseless.size() != seq.input.length()) {
            throw std::invalid_argument("label/sequence length mismatch");
        }
        ForwardNodes nodes = build_forward(tm, model, seq.input);
        for (std::size_t l = 0; l < nodes.predicted.size(); ++l) {
            MatrixXd target(1, 1);
            target(0, 0) = -seq.noiseless[l];
            int diff = tape.add_const(nodes.predicted[l], target);
            int sq = tape.cmul(diff, diff);
            acc = acc < 0 ? sq : tape.add(acc, sq);
            ++points;
        }
    }
    return tape.scale(acc, 1.0 / double(points));
}

}  // namespace

double dataset_loss(const SurrogateModel& model,
                    const std::vector<TrainingSequence>& dataset) {
    ad::Tape tape;
    TapedModel tm = register_params(tape, model);
    return tape.value(build_loss(tape, tm, model, dataset))(0, 0);
}

std::map<std::string, MatrixXd> dataset_gradients(
    const SurrogateModel& model, const std::vector<TrainingSequence>& dataset,
    double* loss_out) {
    ad::Tape tape;
    TapedModel tm = register_params(tape, model);
    int loss = build_loss(tape, tm, model, dataset);
    tape.backward(loss);
    if (loss_out != nullptr) *loss_out = tape.value(loss)(0, 0);
    std::map<std::string, MatrixXd> grads;
    for (const auto& [name, id] : tm.nodes) grads[name] = tape.grad(id);
    return grads;
}

TrainResult train(SurrogateModel model,
                  const std::vector<TrainingSequence>& dataset,
                  const TrainingConfig& config) {
    if (config.learning_rate <= 0.0 || config.epochs < 1) {
        throw std::invalid_argument("bad training config");
    }
    if (dataset.empty()) throw std::invalid_argument("empty dataset");

    std::map<std::string, MatrixXd> m1, m2;  // Adam moments
    for (const auto& [name, value] : model.params) {
        m1[name] = MatrixXd::Zero(value.rows(), value.cols());
        m2[name] = MatrixXd::Zero(value.rows(), value.cols());
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    long long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::size_t batch =
            config.batch_size > 0
                ? std::min<std::size_t>(std::size_t(config.batch_size),
                                        dataset.size())
                : dataset.size();
        if (batch < dataset.size()) std::shuffle(order.begin(), order.end(),
                                                 rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < dataset.size(); start += batch) {
            std::vector<TrainingSequence> slice;
            for (std::size_t i = start;
                 i < std::min(start + batch, dataset.size()); ++i) {
                slice.push_back(dataset[order[i]]);
            }
            double loss = 0.0;
            auto grads = dataset_gradients(model, slice, &loss);
            epoch_loss += loss;
            ++batches;
            if (!std::isfinite(loss) || loss > 1e3) {
                throw std::runtime_error(
                    "training diverged at epoch " + std::to_string(epoch) +
                    ", loss " + std::to_string(loss));
            }
            ++step;
            for (auto& [name, value] : model.params) {
                const MatrixXd& g = grads.at(name);
                if (config.optimizer == Optimizer::Sgd) {
                    value -= config.learning_rate * g;
                    continue;
                }
                m1[name] = beta1 * m1[name] + (1.0 - beta1) * g;
                m2[name] = beta2 * m2[name] + (1.0 - beta2) * g.cwiseProduct(g);
                const double c1 = 1.0 - std::pow(beta1, double(step));
                const double c2 = 1.0 - std::pow(beta2, double(step));
                value -= (config.learning_rate *
                          (m1[name] / c1).array() /
                          ((m2[name] / c2).array().sqrt() + eps))
                             .matrix();
            }
        }
        result.loss_curve.push_back(epoch_loss / double(batches));
    }
    result.model = std::move(model);
    return result;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> flat(std::size_t(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            flat[std::size_t(i * m.cols() + c)] = m(i, c);
        }
    }
    j["data"] = flat;
    return j;
}

MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = j.at("rows"), cols = j.at("cols");
    const std::vector<double> flat = j.at("data");
    if (Eigen::Index(flat.size()) != rows * cols) {
        throw std::runtime_error("checkpoint matrix size mismatch");
    }
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(i, c) = flat[std::size_t(i * cols + c)];
        }
    }
    return m;
}

std::uint64_t config_hash(const SurrogateModel& model) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    mix(std::uint64_t(model.kind));
    mix(std::uint64_t(model.hidden_dim));
    mix(std::uint64_t(model.max_length));
    mix(std::uint64_t(model.include_noisy));
    for (std::size_t i = 0; i < model.variable_forms.size(); ++i) {
        mix(std::uint64_t(model.variable_forms[i]));
        mix(std::uint64_t(model.multi_sizes[i]));
    }
    return h;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

std::string checkpoint_to_json(const SurrogateModel& model) {
    json j;
    j["version"] = kCheckpointVersion;
    j["kind"] = to_string(model.kind);
    j["hidden_dim"] = model.hidden_dim;
    j["max_length"] = model.max_length;
    j["include_noisy"] = model.include_noisy;
    j["config_hash"] = config_hash(model);
    std::vector<int> forms, sizes;
    for (std::size_t i = 0; i < model.variable_forms.size(); ++i) {
        forms.push_back(int(model.variable_forms[i]));
        sizes.push_back(model.multi_sizes[i]);
    }
    j["variable_forms"] = forms;
    j["multi_sizes"] = sizes;
    json params = json::object();
    for (const auto& [name, value] : model.params) {
        params[name] = matrix_to_json(value);
    }
    j["params"] = params;
    return j.dump(2);
}

SurrogateModel checkpoint_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version");
    }
    SurrogateModel model;
    model.kind = surrogate_kind_from_string(j.at("kind"));
    model.hidden_dim = j.at("hidden_dim");
    model.max_length = j.at("max_length");
    model.include_noisy = j.at("include_noisy");
    for (int f : j.at("variable_forms").get<std::vector<int>>()) {
        model.variable_forms.push_back(VariableForm(f));
    }
    model.multi_sizes = j.at("multi_sizes").get<std::vector<int>>();
    for (const auto& [name, value] : j.at("params").items()) {
        model.params[name] = matrix_from_json(value);
    }
    if (j.at("config_hash").get<std::uint64_t>() != config_hash(model)) {
        throw std::runtime_error("checkpoint config hash mismatch");
    }
    return model;
}

}  // namespace qem
