#pragma once

#include "qem/circuit.hpp"
#include "qem/ptm.hpp"
#include "qem/simulator.hpp"

namespace qem {

// PTM-level bookkeeping of the cumulative noise recursion. At layer 0 the
// circuit PTM is the identity, the noise PTM is zero and survival is 1.
struct CumulativeNoiseState {
    std::size_t qubits = 0;
    std::size_t layer = 0;
    Ptm circuit_ptm;   // U_l
    Ptm noise_ptm;     // N_l
    double survival = 1.0;

    static CumulativeNoiseState initial(std::size_t qubits);
};

struct LayerDecomposition {
    Ptm ideal;          // PTM of the ideal layer u_l
    Ptm noise_channel;  // E_l with noisy_layer = E_l o u_l
};

// Per-layer PTMs for a noisy gate list (gates applied in listed order).
LayerDecomposition decompose_layer(std::size_t qubits,
                                   const std::vector<Gate>& layer);

// One step of the recursion:
//   U_l   = R(u_l) U_{l-1}
//   a_l   = U_l^T Lambda_l U_l
//   N_l   = (1-p_l) N_{l-1} + p_l s_{l-1} a_l + p_l a_l N_{l-1}
//   s_l   = s_{l-1} (1-p_l)
// with (p_l, Lambda_l) from the MND of E_l.
CumulativeNoiseState accumulate_noise(const CumulativeNoiseState& state,
                                      const std::vector<Gate>& layer);

struct NoiseEnvelope {
    Ptm envelope;           // R_l = U_l N_l U_l^T
    double impact = 0.0;    // r_l = Tr[O R_l(rho_l)] / Tr[O rho_l]
    double numerator = 0.0; // Tr[O R_l(rho_l)]
    bool degenerate = false;  // |Tr[O rho_l]| < 1e-9: ratio undefined
};

NoiseEnvelope noise_envelope(const CumulativeNoiseState& state,
                             const DensityMatrix& rho_ideal,
                             const PauliString& observable);

// survival * rho + R(rho): the decomposition's prediction of the noisy state.
MatrixXcd reconstruct_noisy_state(const CumulativeNoiseState& state,
                                  const DensityMatrix& rho_ideal);

}  // namespace qem
