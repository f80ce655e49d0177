#pragma once

#include <vector>

#include "qem/pauli.hpp"

namespace qem {

// Pauli transfer matrix: entry (i,j) = (1/2^n) Tr[P_i A(P_j)]. Real for any
// channel; diagonal for a Pauli channel. Row 0 of a TP channel equals e_0.
struct Ptm {
    std::size_t qubits = 0;
    MatrixXd m;

    static Ptm identity(std::size_t qubits);
    static Ptm zero(std::size_t qubits);
};

// Choi matrix built as C = (1/2^{2n}) sum_ij R_ij P_j^T (x) P_i. With this
// normalization a TP channel has Tr C = 1 and CP holds iff C >= 0.
struct ChoiMatrix {
    std::size_t qubits = 0;
    MatrixXcd m;

    double min_eigenvalue() const;
};

struct CptpReport {
    bool cptp = false;
    double choi_min_eigenvalue = 0.0;   // CP margin: >= -tol passes
    double tp_row_violation = 0.0;      // max |row0 - e0| entry
};

struct MndChannelResult {
    double p = 0.0;
    PauliChannel effective;  // the Lambda part; identity when p == 0
    bool identity_absent = false;
};

struct MndPtmResult {
    double p = 0.0;
    Ptm effective;
    bool identity_absent = false;
};

inline constexpr std::size_t kPauliPtmQubitCap = 6;
inline constexpr std::size_t kDensePtmQubitCap = 3;

Ptm ptm_from_channel(const PauliChannel& channel);
Ptm ptm_from_kraus(std::size_t qubits, const std::vector<MatrixXcd>& kraus);
Ptm ptm_of_unitary(std::size_t qubits, const MatrixXcd& u);

ChoiMatrix choi_from_ptm(const Ptm& ptm);
Ptm ptm_from_choi(const ChoiMatrix& choi);

CptpReport is_cptp(const Ptm& ptm, double tol = 1e-10);

// Maximum noise decomposition E = (1-p) I + p Lambda with the smallest p
// keeping Lambda CPTP. Pauli channels use the closed form p = 1 - delta_0;
// general PTMs bisect on p with Choi positivity as the predicate
// (CP violation is monotone in p), to absolute tolerance 1e-10.
MndChannelResult mnd(const PauliChannel& channel);
MndPtmResult mnd(const Ptm& ptm);

// compose(a, b) applies b first: matrix product a*b.
Ptm compose(const Ptm& a, const Ptm& b);

// u * e * u^{-1}; uses the transpose when u is orthogonal (PTM of a unitary),
// an explicit inverse otherwise.
Ptm conjugate(const Ptm& u, const Ptm& e);

// Layer effectiveness factor p = 1 - prod_d (1 - p^d); per-gate factors are
// invariant under backward relocation through the remaining gates.
double effectiveness_of_layer(const std::vector<double>& per_gate_p);

// Pauli-basis coefficient vector c_j = Tr[P_j rho]; rho = 2^{-n} sum c_j P_j.
Eigen::VectorXd pauli_vector(const MatrixXcd& rho);
MatrixXcd density_from_pauli_vector(std::size_t qubits,
                                    const Eigen::VectorXd& c);

}  // namespace qem
