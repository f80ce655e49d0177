#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qem {

using cx = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using MatrixXd = Eigen::MatrixXd;

// Pauli letters are encoded base-4, little-endian: qubit 0 is the least
// significant digit. 0=I, 1=X, 2=Y, 3=Z. The all-identity string has index 0.
enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

class PauliString {
public:
    PauliString(std::size_t qubits, std::uint64_t index);
    PauliString(std::size_t qubits, const std::vector<PauliLetter>& letters);

    std::size_t qubits() const { return qubits_; }
    std::uint64_t index() const { return index_; }
    PauliLetter letter(std::size_t qubit) const;
    std::vector<PauliLetter> letters() const;

    // Number of non-identity letters.
    std::size_t weight() const;

    // Dense 2^n x 2^n matrix, qubit 0 in the least significant tensor slot.
    MatrixXcd matrix() const;

    std::string str() const;

private:
    std::size_t qubits_;
    std::uint64_t index_;
};

// +1 if the two Pauli strings commute, -1 otherwise.
int commutation_sign(std::size_t qubits, std::uint64_t a, std::uint64_t b);

// Index of the product P_a * P_b, phases dropped.
std::uint64_t pauli_product_index(std::uint64_t a, std::uint64_t b);

std::uint64_t pauli_dim(std::size_t qubits);  // 4^n

// Probability-weighted mixture of Pauli conjugations. Sparse: an absent
// index means coefficient zero.
class PauliChannel {
public:
    explicit PauliChannel(std::size_t qubits);
    PauliChannel(std::size_t qubits, std::map<std::uint64_t, double> coeffs);

    static PauliChannel identity(std::size_t qubits);
    static PauliChannel depolarizing(std::size_t qubits, double p);
    static PauliChannel random(std::size_t qubits, double max_error,
                               std::mt19937_64& rng);

    std::size_t qubits() const { return qubits_; }
    const std::map<std::uint64_t, double>& coeffs() const { return coeffs_; }
    double coeff(std::uint64_t index) const;
    double identity_weight() const { return coeff(0); }

    // Throws if a coefficient is negative or the sum deviates from 1
    // by more than 1e-12.
    void validate() const;

    // Composition a.then(b) applies *this first, then b: the Pauli weight
    // vectors convolve under Pauli multiplication.
    PauliChannel then(const PauliChannel& b) const;

    PauliChannel tensor(const PauliChannel& other) const;

    // Channel acting on a wider register, this channel's qubit i placed at
    // target_qubits[i], identity elsewhere.
    PauliChannel embed(std::size_t total_qubits,
                       const std::vector<std::size_t>& target_qubits) const;

    MatrixXcd apply(const MatrixXcd& rho) const;

private:
    std::size_t qubits_;
    std::map<std::uint64_t, double> coeffs_;
};

}  // namespace qem
