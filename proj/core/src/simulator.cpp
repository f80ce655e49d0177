#include "qem/simulator.hpp"

#include <cmath>
#include <stdexcept>

namespace qem {

// Gate qubit i maps to bit i of the sub-index.
MatrixXcd full_unitary(std::size_t qubits, const Gate& gate) {
    const auto dim = Eigen::Index(1) << qubits;
    const MatrixXcd u = gate.unitary();
    const std::size_t arity = gate.qubits.size();

    MatrixXcd full = MatrixXcd::Zero(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        std::size_t sub_col = 0;
        for (std::size_t i = 0; i < arity; ++i)
            sub_col |= ((col >> gate.qubits[i]) & 1) << i;
        for (std::size_t sub_row = 0; sub_row < (std::size_t(1) << arity);
             ++sub_row) {
            const cx v = u(Eigen::Index(sub_row), Eigen::Index(sub_col));
            if (v == cx(0.0, 0.0)) continue;
            Eigen::Index row = col;
            for (std::size_t i = 0; i < arity; ++i) {
                row &= ~(Eigen::Index(1) << gate.qubits[i]);
                row |= Eigen::Index((sub_row >> i) & 1) << gate.qubits[i];
            }
            full(row, col) = v;
        }
    }
    return full;
}

DensityMatrix DensityMatrix::zero_state(std::size_t qubits) {
    if (qubits > kDensityQubitCap)
        throw std::invalid_argument("density-matrix qubit cap exceeded");
    const auto dim = Eigen::Index(1) << qubits;
    DensityMatrix rho{qubits, MatrixXcd::Zero(dim, dim)};
    rho.m(0, 0) = 1.0;
    return rho;
}

void DensityMatrix::check_valid(double tol) const {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw std::runtime_error("density matrix not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > tol)
        throw std::runtime_error("density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
        throw std::runtime_error("density matrix not PSD");
}

void apply_gate(DensityMatrix& rho, const Gate& gate) {
    for (auto q : gate.qubits)
        if (q >= rho.qubits)
            throw std::invalid_argument("gate qubit out of range");
    const MatrixXcd u = full_unitary(rho.qubits, gate);
    rho.m = u * rho.m * u.adjoint();
}

void apply_channel(DensityMatrix& rho, const PauliChannel& channel,
                   const std::vector<std::size_t>& qubits) {
    const PauliChannel full = channel.embed(rho.qubits, qubits);
    rho.m = full.apply(rho.m);
}

double expectation(const DensityMatrix& rho, const PauliString& observable) {
    if (observable.qubits() != rho.qubits)
        throw std::invalid_argument("observable qubit count mismatch");
    return (observable.matrix() * rho.m).trace().real();
}

std::vector<double> simulate(const LayeredCircuit& circuit, SimMode mode) {
    auto rho = DensityMatrix::zero_state(circuit.qubits);
    std::vector<double> out;
    out.reserve(circuit.depth());
    for (std::size_t l = 0; l < circuit.depth(); ++l) {
        for (const auto& g : circuit.layers[l]) {
            apply_gate(rho, g);
            if (mode == SimMode::Noisy) {
                if (!g.noise)
                    throw std::invalid_argument(
                        "noisy simulation needs noise attached to every gate");
                apply_channel(rho, *g.noise, g.qubits);
            }
        }
        out.push_back(expectation(rho, circuit.observable_at(l)));
    }
    return out;
}

DensityMatrix simulate_state(const LayeredCircuit& circuit, SimMode mode) {
    auto rho = DensityMatrix::zero_state(circuit.qubits);
    for (const auto& layer : circuit.layers) {
        for (const auto& g : layer) {
            apply_gate(rho, g);
            if (mode == SimMode::Noisy) {
                if (!g.noise)
                    throw std::invalid_argument(
                        "noisy simulation needs noise attached to every gate");
                apply_channel(rho, *g.noise, g.qubits);
            }
        }
    }
    return rho;
}

double sample_shots(double expectation, std::size_t shots,
                    std::mt19937_64& rng) {
    if (shots < 1) throw std::invalid_argument("need at least one shot");
    if (std::abs(expectation) > 1.0 + 1e-9)
        throw std::invalid_argument("expectation outside [-1, 1]");
    const double p_plus =
        std::min(1.0, std::max(0.0, (1.0 + expectation) / 2.0));
    std::binomial_distribution<std::size_t> bin(shots, p_plus);
    const std::size_t k = bin(rng);
    return 2.0 * double(k) / double(shots) - 1.0;
}

}  // namespace qem
