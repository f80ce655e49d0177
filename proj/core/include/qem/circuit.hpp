#pragma once

#include <optional>
#include <vector>

#include "qem/pauli.hpp"

namespace qem {

enum class GateKind { RX, RY, RZ, RZZ, CNOT, H };

bool gate_is_rotation(GateKind kind);
std::size_t gate_arity(GateKind kind);

struct Gate {
    GateKind kind;
    std::vector<std::size_t> qubits;  // CNOT: {control, target}
    double angle = 0.0;               // rotation gates only

    // Noise attachment: channel applied right after the gate, plus its
    // effectiveness factor from MND (p = 1 - delta_0).
    std::optional<PauliChannel> noise;
    double noise_p = 0.0;

    // Unitary on the gate's own qubits, listed qubit 0 in the least
    // significant slot. 2x2 or 4x4.
    MatrixXcd unitary() const;
};

Gate make_gate(GateKind kind, std::vector<std::size_t> qubits,
               double angle = 0.0);

// Ordered layers of gates; gates within a layer apply in listed order.
struct LayeredCircuit {
    std::size_t qubits = 0;
    std::vector<std::vector<Gate>> layers;
    PauliString observable{1, 0};
    // When set, simulate() measures layer_observables[l] at boundary l.
    std::vector<PauliString> layer_observables;

    std::size_t depth() const { return layers.size(); }
    const PauliString& observable_at(std::size_t layer) const;
    std::size_t gate_count() const;
    bool has_noise() const;

    // Effectiveness factor of one layer from its per-gate factors.
    double layer_effectiveness(std::size_t layer) const;
};

// One first-order product-formula layer per step: RX(2 h dt) on every qubit,
// then the RZZ(-2 J dt) chain on nearest neighbours. Observable Z on the
// last qubit.
LayeredCircuit build_ising_trotter(std::size_t qubits, double coupling_j,
                                   double field_h, double dt,
                                   std::size_t steps);

// GHZ preparation (H, CNOT chain, one CNOT per layer) followed by the RZ
// rotation column attached to the last layer. Observable X on every qubit.
LayeredCircuit build_ghz_metrology(std::size_t qubits, double theta);

// Lowers RZZ to CNOT * RZ * CNOT; leaves 1- and 2-qubit primitives alone.
LayeredCircuit compile(const LayeredCircuit& circuit);

// JSON schema: gates as {kind, qubits, angle}; noise attachments are not
// serialized (re-attach from a DecoherenceSpec).
std::string circuit_to_json(const LayeredCircuit& circuit);
LayeredCircuit circuit_from_json(const std::string& text);

}  // namespace qem
