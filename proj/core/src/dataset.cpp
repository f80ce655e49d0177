#include "qem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qem/circuit.hpp"
#include "qem/simulator.hpp"

namespace qem {

using nlohmann::json;

std::string to_string(TaskKind task) {
    return task == TaskKind::Trotter ? "trotter" : "ghz";
}

TaskKind task_from_string(const std::string& name) {
    if (name == "trotter") return TaskKind::Trotter;
    if (name == "ghz") return TaskKind::Ghz;
    throw std::invalid_argument("unknown task: " + name);
}

void RegimePlan::validate() const {
    if (buckets.empty()) throw std::invalid_argument("empty regime plan");
    double total = 0.0;
    for (const Bucket& b : buckets) {
        if (b.lo > b.hi || b.lo == 0) {
            throw std::invalid_argument("bad regime bucket bounds");
        }
        if (b.prob < 0.0) throw std::invalid_argument("negative bucket rate");
        total += b.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("bucket rates must sum to 1");
    }
}

std::size_t RegimePlan::sample(std::mt19937_64& rng) const {
    validate();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (const Bucket& b : buckets) {
        if (u < b.prob || &b == &buckets.back()) {
            std::uniform_int_distribution<std::size_t> pick(b.lo, b.hi);
            return pick(rng);
        }
        u -= b.prob;
    }
    return buckets.back().hi;  // unreachable
}

double RegimePlan::expected_length() const {
    validate();
    double acc = 0.0;
    for (const Bucket& b : buckets) {
        acc += b.prob * (double(b.lo) + double(b.hi)) / 2.0;
    }
    return acc;
}

namespace {

void check_selection_rate(double p_r) {
    if (p_r < 0.0 || p_r > 1.0) {
        throw std::invalid_argument("p_r out of [0,1]");
    }
}

}  // namespace

RegimePlan RegimePlan::trotter_paper(double p_r) {
    check_selection_rate(p_r);
    return RegimePlan{{{10, 10, 1.0 - p_r},
                       {11, 13, p_r * 0.5},
                       {14, 17, p_r * 0.3},
                       {18, 20, p_r * 0.2}}};
}

RegimePlan RegimePlan::ghz_paper(double p_r) {
    check_selection_rate(p_r);
    return RegimePlan{
        {{5, 5, 1.0 - p_r}, {6, 8, p_r * 0.7}, {9, 10, p_r * 0.3}}};
}

RegimePlan RegimePlan::trotter_desk(double p_r) {
    check_selection_rate(p_r);
    return RegimePlan{{{5, 5, 1.0 - p_r},
                       {6, 7, p_r * 0.5},
                       {8, 9, p_r * 0.3},
                       {10, 10, p_r * 0.2}}};
}

RegimePlan RegimePlan::ghz_desk(double p_r) {
    check_selection_rate(p_r);
    return RegimePlan{{{5, 5, 1.0 - p_r}, {6, 6, p_r}}};
}

std::size_t sample_max_length(TaskKind task, double p_r,
                              std::mt19937_64& rng) {
    if (p_r < 0.0 || p_r > 1.0) {
        throw std::invalid_argument("p_r out of [0,1]");
    }
    const RegimePlan plan = task == TaskKind::Trotter
                                ? RegimePlan::trotter_paper(p_r)
                                : RegimePlan::ghz_paper(p_r);
    return plan.sample(rng);
}

void SequenceRecord::validate() const {
    if (noisy.size() != length || noiseless.size() != length ||
        p_hats.size() != length) {
        throw std::runtime_error("record arrays disagree with length");
    }
    for (std::size_t l = 0; l < length; ++l) {
        if (std::abs(noisy[l]) > 1.0 + 1e-12 ||
            std::abs(noiseless[l]) > 1.0 + 1e-12) {
            throw std::runtime_error("expectation outside [-1, 1]");
        }
        if (p_hats[l] < 0.0 || p_hats[l] >= 1.0) {
            throw std::runtime_error("p_hat outside [0, 1)");
        }
    }
}

namespace {

std::mt19937_64 record_rng(std::uint64_t seed, std::size_t index) {
    return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL +
                           std::uint64_t(index) + 1);
}

double clamp_p_hat(double p) {
    return std::clamp(p, 0.0, std::nextafter(1.0, 0.0));
}

SequenceRecord make_trotter_record(const GenerationConfig& config,
                                   std::size_t index) {
    std::mt19937_64 rng = record_rng(config.seed, index);
    const std::size_t length = config.plan.sample(rng);
    std::uniform_real_distribution<double> hdt_dist(config.hdt_min,
                                                    config.hdt_max);
    const double hdt = hdt_dist(rng);

    // h = 1 so dt carries h*dt directly and J = J/h.
    LayeredCircuit circuit = compile(build_ising_trotter(
        config.qubits, config.j_over_h, 1.0, hdt, length));

    SequenceRecord record;
    record.task = to_string(TaskKind::Trotter);
    record.params = {{"hdt", hdt}, {"j_over_h", config.j_over_h}};
    record.n = config.qubits;
    record.length = length;
    record.seed = config.seed;
    record.noiseless = simulate(circuit, SimMode::Noiseless);

    if (config.noisy) {
        DecoherenceSpec spec = config.noise;
        spec.seed = rng();
        const LayeredCircuit noisy_circuit = attach_noise(circuit, spec);
        const std::vector<double> exact =
            simulate(noisy_circuit, SimMode::Noisy);
        for (std::size_t l = 0; l < length; ++l) {
            record.noisy.push_back(
                sample_shots(exact[l], config.shots, rng));
            record.p_hats.push_back(
                clamp_p_hat(noisy_circuit.layer_effectiveness(l) *
                            (1.0 + config.p_hat_perturbation)));
        }
        record.single_error_rate =
            single_qubit_rates(spec, spec.single_gate_time_ns).total();
        record.two_error_rate = 1.0 - two_qubit_channel(spec).identity_weight();
    } else {
        for (std::size_t l = 0; l < length; ++l) {
            record.noisy.push_back(
                sample_shots(record.noiseless[l], config.shots, rng));
            record.p_hats.push_back(0.0);
        }
    }
    record.validate();
    return record;
}

SequenceRecord make_ghz_record(const GenerationConfig& config,
                               std::size_t index) {
    std::mt19937_64 rng = record_rng(config.seed, index);
    const std::size_t length = config.plan.sample(rng);
    const double theta =
        config.theta_start +
        config.theta_step * double(index % config.theta_count);

    SequenceRecord record;
    record.task = to_string(TaskKind::Ghz);
    record.params = {{"theta", theta}};
    record.n = length;
    record.length = length;
    record.seed = config.seed;

    // Sequence element l comes from the separate l-qubit circuit; the
    // effectiveness factor is the survival ratio of consecutive prefixes.
    double prev_survival = 1.0;
    for (std::size_t l = 1; l <= length; ++l) {
        LayeredCircuit circuit = compile(build_ghz_metrology(l, theta));
        record.noiseless.push_back(
            simulate(circuit, SimMode::Noiseless).back());
        if (config.noisy) {
            DecoherenceSpec spec = config.noise;
            spec.seed = rng();
            const LayeredCircuit noisy_circuit = attach_noise(circuit, spec);
            record.noisy.push_back(sample_shots(
                simulate(noisy_circuit, SimMode::Noisy).back(), config.shots,
                rng));
            double survival = 1.0;
            for (std::size_t k = 0; k < noisy_circuit.depth(); ++k) {
                survival *= 1.0 - noisy_circuit.layer_effectiveness(k);
            }
            record.p_hats.push_back(
                clamp_p_hat((1.0 - survival / prev_survival) *
                            (1.0 + config.p_hat_perturbation)));
            prev_survival = survival;
            if (l == length) {
                record.single_error_rate =
                    single_qubit_rates(spec, spec.single_gate_time_ns)
                        .total();
                record.two_error_rate =
                    1.0 - two_qubit_channel(spec).identity_weight();
            }
        } else {
            record.noisy.push_back(sample_shots(record.noiseless.back(),
                                                config.shots, rng));
            record.p_hats.push_back(0.0);
        }
    }
    record.validate();
    return record;
}

}  // namespace

std::vector<SequenceRecord> generate_dataset(const GenerationConfig& config) {
    if (config.hdt_min > config.hdt_max || config.p_r < 0.0 ||
        config.p_r > 1.0 || config.theta_step <= 0.0 ||
        config.theta_count == 0) {
        throw std::invalid_argument("invalid generation ranges");
    }
    config.plan.validate();
    std::vector<SequenceRecord> records;
    records.reserve(config.size);
    for (std::size_t i = 0; i < config.size; ++i) {
        records.push_back(config.task == TaskKind::Trotter
                              ? make_trotter_record(config, i)
                              : make_ghz_record(config, i));
    }
    return records;
}

namespace {

json record_to_json(const SequenceRecord& r) {
    json j;
    j["task"] = r.task;
    j["params"] = r.params;
    j["n"] = r.n;
    j["length"] = r.length;
    j["noisy"] = r.noisy;
    j["noiseless"] = r.noiseless;
    j["p_hats"] = r.p_hats;
    j["single_error_rate"] = r.single_error_rate;
    j["two_error_rate"] = r.two_error_rate;
    j["seed"] = r.seed;
    return j;
}

SequenceRecord record_from_json(const json& j) {
    SequenceRecord r;
    r.task = j.at("task");
    r.params = j.at("params").get<std::map<std::string, double>>();
    r.n = j.at("n");
    r.length = j.at("length");
    r.noisy = j.at("noisy").get<std::vector<double>>();
    r.noiseless = j.at("noiseless").get<std::vector<double>>();
    r.p_hats = j.at("p_hats").get<std::vector<double>>();
    r.single_error_rate = j.at("single_error_rate");
    r.two_error_rate = j.at("two_error_rate");
    r.seed = j.at("seed");
    r.validate();
    return r;
}

}  // namespace

void write_dataset(const std::string& path, const DatasetFile& file) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    json header;
    header["schema_version"] = file.schema_version;
    header["task"] = file.task;
    header["config"] = file.config_json;
    header["seed"] = file.seed;
    header["records"] = file.records.size();
    out << header.dump() << '\n';
    for (const SequenceRecord& r : file.records) {
        out << record_to_json(r).dump() << '\n';
    }
}

DatasetFile read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("dataset missing header: " + path);
    }
    const json header = json::parse(line);
    DatasetFile file;
    file.schema_version = header.at("schema_version");
    if (file.schema_version != 1) {
        throw std::runtime_error("unsupported dataset schema version");
    }
    file.task = header.at("task");
    file.config_json = header.at("config");
    file.seed = header.at("seed");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        file.records.push_back(record_from_json(json::parse(line)));
    }
    return file;
}

std::string generation_config_to_json(const GenerationConfig& c) {
    json j;
    j["task"] = to_string(c.task);
    j["size"] = c.size;
    j["p_r"] = c.p_r;
    j["qubits"] = c.qubits;
    json buckets = json::array();
    for (const auto& b : c.plan.buckets) {
        buckets.push_back({{"lo", b.lo}, {"hi", b.hi}, {"prob", b.prob}});
    }
    j["plan"] = buckets;
    j["hdt_min"] = c.hdt_min;
    j["hdt_max"] = c.hdt_max;
    j["j_over_h"] = c.j_over_h;
    j["theta_start"] = c.theta_start;
    j["theta_step"] = c.theta_step;
    j["theta_count"] = c.theta_count;
    j["shots"] = c.shots;
    j["noisy"] = c.noisy;
    j["noise"] = {{"t1_us", c.noise.t1_us},
                  {"t2_us", c.noise.t2_us},
                  {"t1q_ns", c.noise.single_gate_time_ns},
                  {"t2q_ns", c.noise.two_gate_time_ns},
                  {"fluctuation", c.noise.fluctuation},
                  {"seed", c.noise.seed}};
    j["p_hat_perturbation"] = c.p_hat_perturbation;
    j["seed"] = c.seed;
    return j.dump();
}

GenerationConfig generation_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    GenerationConfig c;
    c.task = task_from_string(j.at("task"));
    c.size = j.at("size");
    c.p_r = j.at("p_r");
    c.qubits = j.at("qubits");
    c.plan.buckets.clear();
    for (const auto& b : j.at("plan")) {
        c.plan.buckets.push_back(
            {b.at("lo"), b.at("hi"), b.at("prob")});
    }
    c.hdt_min = j.at("hdt_min");
    c.hdt_max = j.at("hdt_max");
    c.j_over_h = j.at("j_over_h");
    c.theta_start = j.at("theta_start");
    c.theta_step = j.at("theta_step");
    c.theta_count = j.at("theta_count");
    c.shots = j.at("shots");
    c.noisy = j.at("noisy");
    const json& n = j.at("noise");
    c.noise.t1_us = n.at("t1_us");
    c.noise.t2_us = n.at("t2_us");
    c.noise.single_gate_time_ns = n.at("t1q_ns");
    c.noise.two_gate_time_ns = n.at("t2q_ns");
    c.noise.fluctuation = n.at("fluctuation");
    c.noise.seed = n.at("seed");
    c.p_hat_perturbation = j.at("p_hat_perturbation");
    c.seed = j.at("seed");
    return c;
}

}  // namespace qem
