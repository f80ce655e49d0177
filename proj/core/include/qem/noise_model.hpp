#pragma once

#include <array>
#include <cstdint>

#include "qem/pauli.hpp"

namespace qem {

// Decoherence parameters feeding the Pauli noise model. Times in the units
// stated; physicality requires t2 <= 2*t1.
struct DecoherenceSpec {
    double t1_us = 23.2357;
    double t2_us = 15.6;
    double single_gate_time_ns = 18.0;
    double two_gate_time_ns = 48.0;
    double fluctuation = 2e-5;
    std::uint64_t seed = 0;

    void validate() const;

    // Baseline scaled so that t1 = t1_us while t2/t1 keeps the 15.6/23.2357
    // reference ratio.
    static DecoherenceSpec scaled_to(double t1_us);
};

struct SingleQubitRates {
    double px = 0.0, py = 0.0, pz = 0.0;
    double total() const { return px + py + pz; }
};

// p_X = p_Y = (1 - e^{-t/T1})/4, p_Z = (1 - e^{-t/T2})/2 - (1 - e^{-t/T1})/4.
// t in ns, T1/T2 in us. Throws when the physicality invariant is violated
// (negative p_Z).
SingleQubitRates single_qubit_rates(const DecoherenceSpec& spec, double t_ns);

PauliChannel single_qubit_channel(const DecoherenceSpec& spec, double t_ns);

// 16-term two-qubit channel from the uncorrelated-error probability table,
// evaluated at the two-qubit gate time.
PauliChannel two_qubit_channel(const DecoherenceSpec& spec);

// Independently perturbs each non-identity coefficient by a uniform draw in
// [-fluctuation, +fluctuation], clamps at 0 and renormalizes onto identity.
PauliChannel perturb_channel(const PauliChannel& channel, double fluctuation,
                             std::mt19937_64& rng);

struct LayeredCircuit;

// Attaches a per-arity analytic channel (noise after the gate) to every gate
// of a compiled circuit, each coefficient jittered by the fluctuation draw.
// Deterministic under spec.seed.
LayeredCircuit attach_noise(const LayeredCircuit& circuit,
                            const DecoherenceSpec& spec);

}  // namespace qem
