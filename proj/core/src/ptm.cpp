#include "qem/ptm.hpp"

#include <cmath>
#include <stdexcept>

namespace qem {

namespace {

void check_dim(const Ptm& p) {
    const auto dim = Eigen::Index(pauli_dim(p.qubits));
    if (p.m.rows() != dim || p.m.cols() != dim)
        throw std::invalid_argument("PTM dimension mismatch");
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

}  // namespace

Ptm Ptm::identity(std::size_t qubits) {
    const auto dim = Eigen::Index(pauli_dim(qubits));
    return {qubits, MatrixXd::Identity(dim, dim)};
}

Ptm Ptm::zero(std::size_t qubits) {
    const auto dim = Eigen::Index(pauli_dim(qubits));
    return {qubits, MatrixXd::Zero(dim, dim)};
}

double ChoiMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Ptm ptm_from_channel(const PauliChannel& channel) {
    if (channel.qubits() > kPauliPtmQubitCap)
        throw std::invalid_argument("Pauli-channel PTM qubit cap exceeded");
    const std::size_t n = channel.qubits();
    const auto dim = Eigen::Index(pauli_dim(n));
    MatrixXd m = MatrixXd::Zero(dim, dim);
    // Diagonal: entry (a,a) = sum_i delta_i * sign(P_i, P_a).
    for (Eigen::Index a = 0; a < dim; ++a) {
        double v = 0.0;
        for (const auto& [i, d] : channel.coeffs())
            v += d * commutation_sign(n, i, std::uint64_t(a));
        m(a, a) = v;
    }
    return {n, std::move(m)};
}

Ptm ptm_from_kraus(std::size_t qubits, const std::vector<MatrixXcd>& kraus) {
    if (qubits > kDensePtmQubitCap)
        throw std::invalid_argument("dense Kraus PTM qubit cap exceeded");
    const auto hdim = Eigen::Index(1) << qubits;
    for (const auto& k : kraus)
        if (k.rows() != hdim || k.cols() != hdim)
            throw std::invalid_argument("Kraus operator dimension mismatch");
    const auto dim = Eigen::Index(pauli_dim(qubits));
    MatrixXd m(dim, dim);
    const double norm = 1.0 / double(hdim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const MatrixXcd pj = PauliString(qubits, std::uint64_t(j)).matrix();
        MatrixXcd img = MatrixXcd::Zero(hdim, hdim);
        for (const auto& k : kraus) img += k * pj * k.adjoint();
        for (Eigen::Index i = 0; i < dim; ++i) {
            const MatrixXcd pi = PauliString(qubits, std::uint64_t(i)).matrix();
            m(i, j) = norm * (pi * img).trace().real();
        }
    }
    return {qubits, std::move(m)};
}

Ptm ptm_of_unitary(std::size_t qubits, const MatrixXcd& u) {
    return ptm_from_kraus(qubits, {u});
}

ChoiMatrix choi_from_ptm(const Ptm& ptm) {
    check_dim(ptm);
    const std::size_t n = ptm.qubits;
    const auto dim = Eigen::Index(pauli_dim(n));
    const auto hdim = Eigen::Index(1) << n;
    MatrixXcd c = MatrixXcd::Zero(hdim * hdim, hdim * hdim);
    const double norm = 1.0 / double(pauli_dim(n));
    for (Eigen::Index i = 0; i < dim; ++i) {
        const MatrixXcd pi = PauliString(n, std::uint64_t(i)).matrix();
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (ptm.m(i, j) == 0.0) continue;
            const MatrixXcd pj = PauliString(n, std::uint64_t(j)).matrix();
            c += (norm * ptm.m(i, j)) * kron(pj.transpose(), pi);
        }
    }
    return {n, std::move(c)};
}

Ptm ptm_from_choi(const ChoiMatrix& choi) {
    const std::size_t n = choi.qubits;
    const auto dim = Eigen::Index(pauli_dim(n));
    MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const MatrixXcd pi = PauliString(n, std::uint64_t(i)).matrix();
        for (Eigen::Index j = 0; j < dim; ++j) {
            const MatrixXcd pj = PauliString(n, std::uint64_t(j)).matrix();
            m(i, j) = (choi.m * kron(pj.transpose(), pi)).trace().real();
        }
    }
    return {n, std::move(m)};
}

CptpReport is_cptp(const Ptm& ptm, double tol) {
    check_dim(ptm);
    CptpReport rep;
    rep.choi_min_eigenvalue = choi_from_ptm(ptm).min_eigenvalue();
    rep.tp_row_violation = 0.0;
    for (Eigen::Index j = 0; j < ptm.m.cols(); ++j) {
        const double target = (j == 0) ? 1.0 : 0.0;
        rep.tp_row_violation =
            std::max(rep.tp_row_violation, std::abs(ptm.m(0, j) - target));
    }
    rep.cptp = rep.choi_min_eigenvalue >= -tol && rep.tp_row_violation <= tol;
    return rep;
}

MndChannelResult mnd(const PauliChannel& channel) {
    MndChannelResult res{0.0, PauliChannel::identity(channel.qubits()), false};
    const double delta0 = channel.identity_weight();
    res.p = 1.0 - delta0;
    if (res.p <= 0.0) {
        res.p = 0.0;
        return res;
    }
    if (delta0 == 0.0) {
        res.identity_absent = true;
        res.effective = channel;
        res.p = 1.0;
        return res;
    }
    std::map<std::uint64_t, double> c;
    for (const auto& [i, v] : channel.coeffs())
        if (i != 0) c[i] = v / res.p;
    res.effective = PauliChannel(channel.qubits(), std::move(c));
    return res;
}

MndPtmResult mnd(const Ptm& ptm) {
    check_dim(ptm);
    const auto rep = is_cptp(ptm, 1e-9);
    if (!rep.cptp)
        throw std::invalid_argument("mnd requires a CPTP input channel");
    const auto dim = ptm.m.rows();
    const MatrixXd eye = MatrixXd::Identity(dim, dim);

    MndPtmResult res{0.0, Ptm::identity(ptm.qubits), false};
    if ((ptm.m - eye).cwiseAbs().maxCoeff() < 1e-14) return res;

    auto lambda_at = [&](double p) {
        return Ptm{ptm.qubits, (ptm.m - (1.0 - p) * eye) / p};
    };
    // Choi is linear in p: Choi(E - (1-p)I) = C_E - (1-p) |Phi><Phi|, so the
    // input Choi is computed once and each bisection step is one eigensolve.
    const MatrixXcd c_e = choi_from_ptm(ptm).m;
    const MatrixXcd c_id = choi_from_ptm(Ptm::identity(ptm.qubits)).m;
    auto cp_holds = [&](double p) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(c_e - (1.0 - p) * c_id,
                                                    Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -1e-12;
    };

    // CP fails below the threshold and holds above it.
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (cp_holds(mid))
            hi = mid;
        else
            lo = mid;
    }
    res.p = hi;
    res.effective = lambda_at(hi);
    if (res.p >= 1.0 - 1e-9) {
        res.identity_absent = true;
        res.p = 1.0;
        res.effective = ptm;
    }
    return res;
}

Ptm compose(const Ptm& a, const Ptm& b) {
    if (a.qubits != b.qubits)
        throw std::invalid_argument("qubit count mismatch in PTM composition");
    return {a.qubits, a.m * b.m};
}

Ptm conjugate(const Ptm& u, const Ptm& e) {
    if (u.qubits != e.qubits)
        throw std::invalid_argument("qubit count mismatch in PTM conjugation");
    const MatrixXd ut = u.m.transpose();
    if ((u.m * ut - MatrixXd::Identity(u.m.rows(), u.m.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-9)
        return {u.qubits, u.m * e.m * ut};
    Eigen::FullPivLU<MatrixXd> lu(u.m);
    if (!lu.isInvertible())
        throw std::invalid_argument("singular conjugating PTM");
    return {u.qubits, u.m * e.m * lu.inverse()};
}

double effectiveness_of_layer(const std::vector<double>& per_gate_p) {
    double survive = 1.0;
    for (double p : per_gate_p) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("per-gate effectiveness out of [0,1]");
        survive *= 1.0 - p;
    }
    return 1.0 - survive;
}

Eigen::VectorXd pauli_vector(const MatrixXcd& rho) {
    std::size_t n = 0;
    while ((Eigen::Index(1) << n) < rho.rows()) ++n;
    if ((Eigen::Index(1) << n) != rho.rows() || rho.rows() != rho.cols())
        throw std::invalid_argument("density matrix is not 2^n x 2^n");
    const auto dim = Eigen::Index(pauli_dim(n));
    Eigen::VectorXd c(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
        c(j) = (PauliString(n, std::uint64_t(j)).matrix() * rho).trace().real();
    return c;
}

MatrixXcd density_from_pauli_vector(std::size_t qubits,
                                    const Eigen::VectorXd& c) {
    const auto hdim = Eigen::Index(1) << qubits;
    MatrixXcd rho = MatrixXcd::Zero(hdim, hdim);
    const double norm = 1.0 / double(hdim);
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (c(j) == 0.0) continue;
        rho += (norm * c(j)) * PauliString(qubits, std::uint64_t(j)).matrix();
    }
    return rho;
}

}  // namespace qem
