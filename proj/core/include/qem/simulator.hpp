#pragma once

#include <random>
#include <vector>

#include "qem/circuit.hpp"

namespace qem {

inline constexpr std::size_t kDensityQubitCap = 6;

enum class SimMode { Noiseless, Noisy };

struct DensityMatrix {
    std::size_t qubits = 0;
    MatrixXcd m;

    static DensityMatrix zero_state(std::size_t qubits);

    // Hermiticity / trace / positivity diagnostics; throws on violation.
    void check_valid(double tol = 1e-9) const;
};

// Full-register 2^n x 2^n unitary: identity outside the gate's qubits.
MatrixXcd full_unitary(std::size_t qubits, const Gate& gate);

void apply_gate(DensityMatrix& rho, const Gate& gate);
void apply_channel(DensityMatrix& rho, const PauliChannel& channel,
                   const std::vector<std::size_t>& qubits);

double expectation(const DensityMatrix& rho, const PauliString& observable);

// Per-layer expectations Tr[O rho_l] at every layer boundary. Noisy mode
// applies each gate's attached channel immediately after the gate.
std::vector<double> simulate(const LayeredCircuit& circuit, SimMode mode);

// Final state after all layers (same gate/noise application as simulate()).
DensityMatrix simulate_state(const LayeredCircuit& circuit, SimMode mode);

// Empirical expectation from N Bernoulli draws with P(+1) = (1+e)/2.
double sample_shots(double expectation, std::size_t shots,
                    std::mt19937_64& rng);

}  // namespace qem
