#include "qem/cumulative.hpp"

#include <stdexcept>

namespace qem {

CumulativeNoiseState CumulativeNoiseState::initial(std::size_t qubits) {
    if (qubits > kDensePtmQubitCap)
        throw std::invalid_argument("cumulative-noise PTM qubit cap exceeded");
    return {qubits, 0, Ptm::identity(qubits), Ptm::zero(qubits), 1.0};
}

LayerDecomposition decompose_layer(std::size_t qubits,
                                   const std::vector<Gate>& layer) {
    Ptm ideal = Ptm::identity(qubits);
    Ptm noisy = Ptm::identity(qubits);
    for (const auto& g : layer) {
        if (!g.noise)
            throw std::invalid_argument("layer decomposition needs gate noise");
        const Ptm rg = ptm_of_unitary(qubits, full_unitary(qubits, g));
        const Ptm re = ptm_from_channel(g.noise->embed(qubits, g.qubits));
        ideal = compose(rg, ideal);
        noisy = compose(re, compose(rg, noisy));
    }
    // noisy = E_l o ideal, so E_l = noisy * ideal^T (ideal is orthogonal).
    Ptm e{qubits, noisy.m * ideal.m.transpose()};
    return {std::move(ideal), std::move(e)};
}

CumulativeNoiseState accumulate_noise(const CumulativeNoiseState& state,
                                      const std::vector<Gate>& layer) {
    const auto dec = decompose_layer(state.qubits, layer);
    const auto res = mnd(dec.noise_channel);

    CumulativeNoiseState next;
    next.qubits = state.qubits;
    next.layer = state.layer + 1;
    next.circuit_ptm = compose(dec.ideal, state.circuit_ptm);

    const MatrixXd& u = next.circuit_ptm.m;
    const MatrixXd a = u.transpose() * res.effective.m * u;
    next.noise_ptm.qubits = state.qubits;
    next.noise_ptm.m = (1.0 - res.p) * state.noise_ptm.m +
                       (res.p * state.survival) * a +
                       res.p * a * state.noise_ptm.m;
    next.survival = state.survival * (1.0 - res.p);
    return next;
}

NoiseEnvelope noise_envelope(const CumulativeNoiseState& state,
                             const DensityMatrix& rho_ideal,
                             const PauliString& observable) {
    NoiseEnvelope env;
    const MatrixXd& u = state.circuit_ptm.m;
    env.envelope = Ptm{state.qubits, u * state.noise_ptm.m * u.transpose()};

    const Eigen::VectorXd c = pauli_vector(rho_ideal.m);
    const Eigen::VectorXd c_noise = env.envelope.m * c;
    env.numerator = c_noise(Eigen::Index(observable.index()));
    const double y = c(Eigen::Index(observable.index()));
    if (std::abs(y) < 1e-9) {
        env.degenerate = true;
        env.impact = 0.0;
    } else {
        env.impact = env.numerator / y;
    }
    return env;
}

MatrixXcd reconstruct_noisy_state(const CumulativeNoiseState& state,
                                  const DensityMatrix& rho_ideal) {
    const MatrixXd& u = state.circuit_ptm.m;
    const MatrixXd r = u * state.noise_ptm.m * u.transpose();
    const Eigen::VectorXd c = pauli_vector(rho_ideal.m);
    const Eigen::VectorXd c_noisy = state.survival * c + r * c;
    return density_from_pauli_vector(state.qubits, c_noisy);
}

}  // namespace qem
