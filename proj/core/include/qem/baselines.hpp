#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/ptm.hpp"
#include "qem/simulator.hpp"

namespace qem {

// Execution-time proxy for a complete mitigation: T = N_c * (1000 + N_s).
struct OverheadLedger {
    std::size_t circuit_instances = 0;
    double shots_per_instance = 0.0;
    long long total() const {
        return std::llround(double(circuit_instances) *
                            (1000.0 + shots_per_instance));
    }
};

OverheadLedger ml_style_ledger(std::size_t shots = 8192);  // N_c = 1

struct RichardsonPlan {
    std::vector<double> scales;
    std::vector<double> coefficients;

    // gamma_i = prod_{j != i} x_j / (x_j - x_i); coefficients sum to 1 and
    // kill the first r moments.
    static RichardsonPlan from_scales(std::vector<double> scales);
};

double richardson_extrapolate(const std::vector<double>& values,
                              const RichardsonPlan& plan);

struct MitigationResult {
    std::vector<double> mitigated;  // per layer
    OverheadLedger ledger;
};

// Evaluator: noise-scale factor -> per-layer expectations.
using ScaledEvaluator = std::function<std::vector<double>(double)>;

MitigationResult zne_mitigate(const ScaledEvaluator& evaluate,
                              const RichardsonPlan& plan,
                              std::size_t shots = 8192);

// Gate-unfolding ZNE on a compiled noisy circuit: every CNOT is applied
// `scale` times (odd unfolding factors only), single-qubit gates untouched.
MitigationResult zne_mitigate(const LayeredCircuit& circuit,
                              const RichardsonPlan& plan, SimMode mode,
                              std::size_t shots = 8192,
                              std::uint64_t seed = 0);

LayeredCircuit unfold_two_qubit_gates(const LayeredCircuit& circuit,
                                      std::size_t factor);

// Sparse Pauli-Lindblad model on two qubits: E = prod_k (w_k I + (1-w_k) P_k)
// with w_k = (1 + e^{-2 lambda_k}) / 2, k = 1..15.
struct SplModel {
    std::array<double, 16> lambdas{};  // index 0 unused

    double omega(std::size_t k) const;
    double gamma() const;  // e^{2 sum_k lambda_k}
    PauliChannel channel() const;
    // Pauli fidelities f_a = e^{-2 sum_{{a,k}=0} lambda_k}, a = 0..15.
    std::array<double, 16> fidelities() const;
    // Signed quasi-probability coefficients of gamma * prod(w I - (1-w) P).
    std::map<std::uint64_t, double> inverse_quasi_coeffs() const;
};

enum class CalibrationMode { Exact, Fit };

// Recovers lambda from a two-qubit Pauli gate noise channel. Exact mode reads
// the fidelities off the PTM diagonal; fit mode regresses the a0 * f^m decay
// of the m-fold repeated noisy CNOT over the given repetition counts.
SplModel spl_calibrate(const PauliChannel& gate_noise, CalibrationMode mode,
                       const std::vector<std::size_t>& repetitions = {2, 4, 6,
                                                                      8, 10});

struct PecOptions {
    SimMode mode = SimMode::Noiseless;  // Noiseless = exact expectations
    std::size_t instances = 100;
    std::size_t total_shots = 16384;
    std::uint64_t seed = 0;
};

// PEC with the SPL inverse after every noisy CNOT. Exact mode composes the
// signed inverse map analytically; sampled mode draws quasi-probability
// instances, tracking the accumulated sign.
MitigationResult pec_mitigate(const LayeredCircuit& circuit,
                              const SplModel& model, const PecOptions& opts);

struct CliffordSubstitution {
    double rate = 0.5;
    std::size_t max_nonclifford = 20;
    std::size_t training_circuits = 10;
};

// Noisy/noiseless per-layer evaluators used by CDR; replaceable in tests.
struct CdrEvaluator {
    std::function<std::vector<double>(const LayeredCircuit&)> noisy;
    std::function<std::vector<double>(const LayeredCircuit&)> noiseless;
};

CdrEvaluator default_cdr_evaluator(bool sampled_noisy, std::size_t shots,
                                   std::uint64_t seed);

MitigationResult cdr_mitigate(const LayeredCircuit& circuit,
                              const CliffordSubstitution& sub,
                              const CdrEvaluator& evaluate,
                              std::uint64_t seed, std::size_t shots = 8192);

// Near-Clifford variant: a fraction `rate` of non-Clifford rotations snaps to
// R(k pi/2), k weighted by e^{-4 d^2}, d the Frobenius gate distance.
LayeredCircuit near_clifford_variant(const LayeredCircuit& circuit,
                                     const CliffordSubstitution& sub,
                                     std::mt19937_64& rng);

}  // namespace qem
