#include "qem/circuit.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace qem {

namespace {
const cx kI(0.0, 1.0);
}

bool gate_is_rotation(GateKind kind) {
    return kind == GateKind::RX || kind == GateKind::RY ||
           kind == GateKind::RZ;
}

std::size_t gate_arity(GateKind kind) {
    return (kind == GateKind::RZZ || kind == GateKind::CNOT) ? 2 : 1;
}

Gate make_gate(GateKind kind, std::vector<std::size_t> qubits, double angle) {
    if (qubits.size() != gate_arity(kind))
        throw std::invalid_argument("gate arity mismatch");
    if (!std::isfinite(angle))
        throw std::invalid_argument("non-finite gate angle");
    Gate g;
    g.kind = kind;
    g.qubits = std::move(qubits);
    g.angle = angle;
    return g;
}

MatrixXcd Gate::unitary() const {
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    MatrixXcd u;
    switch (kind) {
        case GateKind::RX:
            u.resize(2, 2);
            u << c, -kI * s, -kI * s, c;
            break;
        case GateKind::RY:
            u.resize(2, 2);
            u << c, -s, s, c;
            break;
        case GateKind::RZ:
            u.resize(2, 2);
            u << std::exp(-kI * (angle / 2.0)), 0.0, 0.0,
                std::exp(kI * (angle / 2.0));
            break;
        case GateKind::H:
            u.resize(2, 2);
            u << 1, 1, 1, -1;
            u /= std::sqrt(2.0);
            break;
        case GateKind::CNOT:
            // basis index = control + 2*target
            u = MatrixXcd::Zero(4, 4);
            u(0, 0) = 1;  // |c=0,t=0>
            u(2, 2) = 1;  // |c=0,t=1>
            u(3, 1) = 1;  // |c=1,t=0> -> |c=1,t=1>
            u(1, 3) = 1;
            break;
        case GateKind::RZZ: {
            u = MatrixXcd::Zero(4, 4);
            const cx same = std::exp(-kI * (angle / 2.0));
            const cx diff = std::exp(kI * (angle / 2.0));
            u(0, 0) = same;
            u(1, 1) = diff;
            u(2, 2) = diff;
            u(3, 3) = same;
            break;
        }
    }
    return u;
}

const PauliString& LayeredCircuit::observable_at(std::size_t layer) const {
    if (!layer_observables.empty()) {
        if (layer >= layer_observables.size())
            throw std::out_of_range("layer observable index out of range");
        return layer_observables[layer];
    }
    return observable;
}

std::size_t LayeredCircuit::gate_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
}

bool LayeredCircuit::has_noise() const {
    for (const auto& l : layers)
        for (const auto& g : l)
            if (g.noise) return true;
    return false;
}

double LayeredCircuit::layer_effectiveness(std::size_t layer) const {
    double survive = 1.0;
    for (const auto& g : layers.at(layer)) survive *= 1.0 - g.noise_p;
    return 1.0 - survive;
}

LayeredCircuit build_ising_trotter(std::size_t qubits, double coupling_j,
                                   double field_h, double dt,
                                   std::size_t steps) {
    if (qubits < 2) throw std::invalid_argument("Ising chain needs >= 2 qubits");
    if (steps < 1) throw std::invalid_argument("need at least one Trotter step");
    LayeredCircuit c;
    c.qubits = qubits;
    for (std::size_t l = 0; l < steps; ++l) {
        std::vector<Gate> layer;
        for (std::size_t q = 0; q < qubits; ++q)
            layer.push_back(make_gate(GateKind::RX, {q}, 2.0 * field_h * dt));
        for (std::size_t q = 0; q + 1 < qubits; ++q)
            layer.push_back(
                make_gate(GateKind::RZZ, {q, q + 1}, -2.0 * coupling_j * dt));
        c.layers.push_back(std::move(layer));
    }
    std::vector<PauliLetter> letters(qubits, PauliLetter::I);
    letters[qubits - 1] = PauliLetter::Z;
    c.observable = PauliString(qubits, letters);
    return c;
}

LayeredCircuit build_ghz_metrology(std::size_t qubits, double theta) {
    if (qubits < 1) throw std::invalid_argument("need at least one qubit");
    LayeredCircuit c;
    c.qubits = qubits;
    if (qubits == 1) {
        c.layers.push_back({make_gate(GateKind::H, {0}),
                            make_gate(GateKind::RZ, {0}, theta)});
    } else {
        for (std::size_t i = 0; i + 1 < qubits; ++i) {
            std::vector<Gate> layer;
            if (i == 0) layer.push_back(make_gate(GateKind::H, {0}));
            layer.push_back(make_gate(GateKind::CNOT, {i, i + 1}));
            c.layers.push_back(std::move(layer));
        }
        for (std::size_t q = 0; q < qubits; ++q)
            c.layers.back().push_back(make_gate(GateKind::RZ, {q}, theta));
    }
    c.observable =
        PauliString(qubits, std::vector<PauliLetter>(qubits, PauliLetter::X));
    return c;
}

LayeredCircuit compile(const LayeredCircuit& circuit) {
    LayeredCircuit out;
    out.qubits = circuit.qubits;
    out.observable = circuit.observable;
    out.layer_observables = circuit.layer_observables;
    for (const auto& layer : circuit.layers) {
        std::vector<Gate> compiled;
        for (const auto& g : layer) {
            if (g.kind == GateKind::RZZ) {
                compiled.push_back(
                    make_gate(GateKind::CNOT, {g.qubits[0], g.qubits[1]}));
                compiled.push_back(
                    make_gate(GateKind::RZ, {g.qubits[1]}, g.angle));
                compiled.push_back(
                    make_gate(GateKind::CNOT, {g.qubits[0], g.qubits[1]}));
            } else {
                compiled.push_back(g);
            }
        }
        out.layers.push_back(std::move(compiled));
    }
    return out;
}

namespace {

const std::map<std::string, GateKind> kKindNames = {
    {"rx", GateKind::RX},   {"ry", GateKind::RY},     {"rz", GateKind::RZ},
    {"rzz", GateKind::RZZ}, {"cnot", GateKind::CNOT}, {"h", GateKind::H}};

std::string kind_name(GateKind kind) {
    for (const auto& [name, k] : kKindNames) {
        if (k == kind) return name;
    }
    throw std::logic_error("unknown gate kind");
}

}  // namespace

std::string circuit_to_json(const LayeredCircuit& circuit) {
    nlohmann::json j;
    j["qubits"] = circuit.qubits;
    j["observable"] = circuit.observable.index();
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : circuit.layers) {
        nlohmann::json gates = nlohmann::json::array();
        for (const Gate& g : layer) {
            gates.push_back({{"kind", kind_name(g.kind)},
                             {"qubits", g.qubits},
                             {"angle", g.angle}});
        }
        layers.push_back(gates);
    }
    j["layers"] = layers;
    return j.dump();
}

LayeredCircuit circuit_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    LayeredCircuit circuit;
    circuit.qubits = j.at("qubits");
    circuit.observable =
        PauliString(circuit.qubits, j.at("observable").get<std::uint64_t>());
    for (const auto& layer : j.at("layers")) {
        std::vector<Gate> gates;
        for (const auto& g : layer) {
            gates.push_back(make_gate(
                kKindNames.at(g.at("kind").get<std::string>()),
                g.at("qubits").get<std::vector<std::size_t>>(),
                g.at("angle").get<double>()));
        }
        circuit.layers.push_back(std::move(gates));
    }
    return circuit;
}

}  // namespace qem
