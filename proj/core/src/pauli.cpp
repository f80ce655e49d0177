#include "qem/pauli.hpp"

#include <cmath>
#include <stdexcept>

namespace qem {

namespace {

const cx kI(0.0, 1.0);

MatrixXcd single_pauli(PauliLetter l) {
    MatrixXcd m(2, 2);
    switch (l) {
        case PauliLetter::I: m << 1, 0, 0, 1; break;
        case PauliLetter::X: m << 0, 1, 1, 0; break;
        case PauliLetter::Y: m << 0, -kI, kI, 0; break;
        case PauliLetter::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

}  // namespace

std::uint64_t pauli_dim(std::size_t qubits) {
    return std::uint64_t{1} << (2 * qubits);
}

PauliString::PauliString(std::size_t qubits, std::uint64_t index)
    : qubits_(qubits), index_(index) {
    if (index >= pauli_dim(qubits))
        throw std::invalid_argument("Pauli index out of range");
}

PauliString::PauliString(std::size_t qubits,
                         const std::vector<PauliLetter>& letters)
    : qubits_(qubits), index_(0) {
    if (letters.size() != qubits)
        throw std::invalid_argument("letter count does not match qubit count");
    for (std::size_t q = 0; q < qubits; ++q)
        index_ |= std::uint64_t(static_cast<std::uint8_t>(letters[q])) << (2 * q);
}

PauliLetter PauliString::letter(std::size_t qubit) const {
    return static_cast<PauliLetter>((index_ >> (2 * qubit)) & 3);
}

std::vector<PauliLetter> PauliString::letters() const {
    std::vector<PauliLetter> out(qubits_);
    for (std::size_t q = 0; q < qubits_; ++q) out[q] = letter(q);
    return out;
}

std::size_t PauliString::weight() const {
    std::size_t w = 0;
    for (std::size_t q = 0; q < qubits_; ++q)
        if (letter(q) != PauliLetter::I) ++w;
    return w;
}

MatrixXcd PauliString::matrix() const {
    MatrixXcd m = single_pauli(letter(qubits_ - 1));
    for (std::size_t q = qubits_ - 1; q-- > 0;) {
        // kron(m, p): qubit 0 stays in the least significant slot.
        const MatrixXcd p = single_pauli(letter(q));
        MatrixXcd next(m.rows() * 2, m.cols() * 2);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                next.block(i * 2, j * 2, 2, 2) = m(i, j) * p;
        m = std::move(next);
    }
    return m;
}

std::string PauliString::str() const {
    static const char names[] = "IXYZ";
    std::string s(qubits_, 'I');
    for (std::size_t q = 0; q < qubits_; ++q)
        s[q] = names[static_cast<std::uint8_t>(letter(q))];
    return s;
}

int commutation_sign(std::size_t qubits, std::uint64_t a, std::uint64_t b) {
    int anti = 0;
    for (std::size_t q = 0; q < qubits; ++q) {
        const auto la = (a >> (2 * q)) & 3;
        const auto lb = (b >> (2 * q)) & 3;
        if (la != 0 && lb != 0 && la != lb) ++anti;
    }
    return (anti % 2 == 0) ? 1 : -1;
}

std::uint64_t pauli_product_index(std::uint64_t a, std::uint64_t b) {
    // Letter-wise product up to phase is XOR of the 2-bit codes.
    return a ^ b;
}

PauliChannel::PauliChannel(std::size_t qubits) : qubits_(qubits) {
    coeffs_[0] = 1.0;
}

PauliChannel::PauliChannel(std::size_t qubits,
                           std::map<std::uint64_t, double> coeffs)
    : qubits_(qubits), coeffs_(std::move(coeffs)) {
    validate();
}

PauliChannel PauliChannel::identity(std::size_t qubits) {
    return PauliChannel(qubits);
}

PauliChannel PauliChannel::depolarizing(std::size_t qubits, double p) {
    const std::uint64_t dim = pauli_dim(qubits);
    std::map<std::uint64_t, double> c;
    c[0] = 1.0 - p + p / double(dim);
    for (std::uint64_t i = 1; i < dim; ++i) c[i] = p / double(dim);
    return PauliChannel(qubits, std::move(c));
}

PauliChannel PauliChannel::random(std::size_t qubits, double max_error,
                                  std::mt19937_64& rng) {
    const std::uint64_t dim = pauli_dim(qubits);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::uint64_t, double> c;
    double total = 0.0;
    for (std::uint64_t i = 1; i < dim; ++i) {
        c[i] = u(rng);
        total += c[i];
    }
    const double err = u(rng) * max_error;
    for (auto& [idx, v] : c) v *= err / total;
    c[0] = 1.0 - err;
    return PauliChannel(qubits, std::move(c));
}

double PauliChannel::coeff(std::uint64_t index) const {
    auto it = coeffs_.find(index);
    return it == coeffs_.end() ? 0.0 : it->second;
}

void PauliChannel::validate() const {
    double total = 0.0;
    for (const auto& [idx, v] : coeffs_) {
        if (idx >= pauli_dim(qubits_))
            throw std::invalid_argument("Pauli coefficient index out of range");
        if (v < 0.0)
            throw std::invalid_argument("negative Pauli coefficient");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("Pauli coefficients do not sum to 1");
}

PauliChannel PauliChannel::then(const PauliChannel& b) const {
    if (b.qubits_ != qubits_)
        throw std::invalid_argument("qubit count mismatch in composition");
    std::map<std::uint64_t, double> c;
    for (const auto& [i, vi] : coeffs_)
        for (const auto& [j, vj] : b.coeffs_)
            c[pauli_product_index(i, j)] += vi * vj;
    return PauliChannel(qubits_, std::move(c));
}

PauliChannel PauliChannel::tensor(const PauliChannel& other) const {
    std::map<std::uint64_t, double> c;
    for (const auto& [i, vi] : coeffs_)
        for (const auto& [j, vj] : other.coeffs_)
            c[i | (j << (2 * qubits_))] += vi * vj;
    return PauliChannel(qubits_ + other.qubits_, std::move(c));
}

PauliChannel PauliChannel::embed(
    std::size_t total_qubits, const std::vector<std::size_t>& target) const {
    if (target.size() != qubits_)
        throw std::invalid_argument("target qubit list does not match arity");
    std::map<std::uint64_t, double> c;
    for (const auto& [i, v] : coeffs_) {
        std::uint64_t idx = 0;
        for (std::size_t q = 0; q < qubits_; ++q) {
            if (target[q] >= total_qubits)
                throw std::invalid_argument("target qubit out of range");
            idx |= ((i >> (2 * q)) & 3) << (2 * target[q]);
        }
        c[idx] += v;
    }
    return PauliChannel(total_qubits, std::move(c));
}

MatrixXcd PauliChannel::apply(const MatrixXcd& rho) const {
    const auto dim = Eigen::Index(1) << qubits_;
    if (rho.rows() != dim || rho.cols() != dim)
        throw std::invalid_argument("density matrix dimension mismatch");
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (const auto& [i, v] : coeffs_) {
        if (v == 0.0) continue;
        const MatrixXcd p = PauliString(qubits_, i).matrix();
        out += v * p * rho * p;
    }
    return out;
}

}  // namespace qem
