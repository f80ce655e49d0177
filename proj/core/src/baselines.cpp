#include "qem/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace qem {

namespace {

// Anticommutation indicator {a,b} = 1 when the two-qubit Paulis anticommute.
int anticommutes(std::uint64_t a, std::uint64_t b) {
    return commutation_sign(2, a, b) < 0 ? 1 : 0;
}

std::vector<double> exact_or_sampled(const LayeredCircuit& circuit,
                                     SimMode noise_mode, bool sampled,
                                     std::size_t shots, std::mt19937_64& rng) {
    std::vector<double> values = simulate(circuit, noise_mode);
    if (sampled) {
        for (double& v : values) v = sample_shots(v, shots, rng);
    }
    return values;
}

}  // namespace

OverheadLedger ml_style_ledger(std::size_t shots) {
    return OverheadLedger{1, double(shots)};
}

RichardsonPlan RichardsonPlan::from_scales(std::vector<double> scales) {
    if (scales.empty()) {
        throw std::invalid_argument("Richardson plan needs >= 1 scale");
    }
    for (std::size_t i = 0; i < scales.size(); ++i) {
        for (std::size_t j = i + 1; j < scales.size(); ++j) {
            if (scales[i] == scales[j]) {
                throw std::invalid_argument("duplicate Richardson scale");
            }
        }
    }
    RichardsonPlan plan;
    plan.scales = scales;
    plan.coefficients.resize(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        double gamma = 1.0;
        for (std::size_t j = 0; j < scales.size(); ++j) {
            if (j == i) continue;
            gamma *= scales[j] / (scales[j] - scales[i]);
        }
        plan.coefficients[i] = gamma;
    }
    return plan;
}

double richardson_extrapolate(const std::vector<double>& values,
                              const RichardsonPlan& plan) {
    if (values.size() != plan.coefficients.size()) {
        throw std::invalid_argument("value/coefficient count mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += plan.coefficients[i] * values[i];
    }
    return acc;
}

MitigationResult zne_mitigate(const ScaledEvaluator& evaluate,
                              const RichardsonPlan& plan, std::size_t shots) {
    std::vector<std::vector<double>> runs;
    runs.reserve(plan.scales.size());
    for (double scale : plan.scales) runs.push_back(evaluate(scale));
    const std::size_t depth = runs.front().size();
    for (const auto& run : runs) {
        if (run.size() != depth) {
            throw std::runtime_error("evaluator returned ragged sequences");
        }
    }
    MitigationResult result;
    result.mitigated.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        std::vector<double> column(plan.scales.size());
        for (std::size_t i = 0; i < column.size(); ++i) column[i] = runs[i][l];
        result.mitigated[l] = richardson_extrapolate(column, plan);
    }
    result.ledger = OverheadLedger{plan.scales.size(), double(shots)};
    return result;
}

LayeredCircuit unfold_two_qubit_gates(const LayeredCircuit& circuit,
                                      std::size_t factor) {
    if (factor % 2 == 0 || factor == 0) {
        throw std::invalid_argument("unfolding factor must be odd");
    }
    LayeredCircuit out = circuit;
    for (auto& layer : out.layers) {
        std::vector<Gate> unfolded;
        for (const Gate& g : layer) {
            std::size_t copies = g.kind == GateKind::CNOT ? factor : 1;
            for (std::size_t c = 0; c < copies; ++c) unfolded.push_back(g);
        }
        layer = std::move(unfolded);
    }
    return out;
}

MitigationResult zne_mitigate(const LayeredCircuit& circuit,
                              const RichardsonPlan& plan, SimMode mode,
                              std::size_t shots, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ScaledEvaluator evaluate = [&](double scale) {
        const double rounded = std::round(scale);
        if (std::abs(scale - rounded) > 1e-9 || rounded < 1.0) {
            throw std::invalid_argument("gate unfolding needs integer scale");
        }
        LayeredCircuit scaled =
            unfold_two_qubit_gates(circuit, std::size_t(rounded));
        return exact_or_sampled(scaled, SimMode::Noisy,
                                mode == SimMode::Noisy, shots, rng);
    };
    return zne_mitigate(evaluate, plan, shots);
}

double SplModel::omega(std::size_t k) const {
    return (1.0 + std::exp(-2.0 * lambdas.at(k))) / 2.0;
}

double SplModel::gamma() const {
    double sum = 0.0;
    for (std::size_t k = 1; k <= 15; ++k) sum += lambdas[k];
    return std::exp(2.0 * sum);
}

PauliChannel SplModel::channel() const {
    PauliChannel acc = PauliChannel::identity(2);
    for (std::size_t k = 1; k <= 15; ++k) {
        const double w = omega(k);
        PauliChannel factor(2, {{0, w}, {k, 1.0 - w}});
        acc = acc.then(factor);
    }
    return acc;
}

std::array<double, 16> SplModel::fidelities() const {
    std::array<double, 16> f{};
    for (std::uint64_t a = 0; a < 16; ++a) {
        double sum = 0.0;
        for (std::uint64_t k = 1; k <= 15; ++k) {
            if (anticommutes(a, k)) sum += lambdas[k];
        }
        f[a] = std::exp(-2.0 * sum);
    }
    return f;
}

std::map<std::uint64_t, double> SplModel::inverse_quasi_coeffs() const {
    // gamma * prod_k (w_k I - (1 - w_k) P_k), expanded by convolution.
    std::map<std::uint64_t, double> acc{{0, gamma()}};
    for (std::uint64_t k = 1; k <= 15; ++k) {
        const double w = omega(k);
        std::map<std::uint64_t, double> next;
        for (const auto& [idx, c] : acc) {
            next[idx] += w * c;
            next[pauli_product_index(idx, k)] -= (1.0 - w) * c;
        }
        acc = std::move(next);
    }
    return acc;
}

namespace {

// CNOT conjugation on two-qubit Pauli indices (control = qubit 0,
// target = qubit 1), via the symplectic update x_t ^= x_c, z_c ^= z_t.
std::uint64_t cnot_conjugate_index(std::uint64_t idx) {
    auto bits = [](std::uint64_t letter) {
        // letter -> (x, z)
        switch (letter) {
            case 1: return std::pair<int, int>{1, 0};  // X
            case 2: return std::pair<int, int>{1, 1};  // Y
            case 3: return std::pair<int, int>{0, 1};  // Z
            default: return std::pair<int, int>{0, 0};
        }
    };
    auto letter = [](int x, int z) -> std::uint64_t {
        if (x && !z) return 1;
        if (x && z) return 2;
        if (!x && z) return 3;
        return 0;
    };
    auto [xc, zc] = bits(idx & 3);
    auto [xt, zt] = bits((idx >> 2) & 3);
    xt ^= xc;
    zc ^= zt;
    return letter(xc, zc) | (letter(xt, zt) << 2);
}

PauliChannel cnot_conjugate(const PauliChannel& channel) {
    std::map<std::uint64_t, double> out;
    for (const auto& [idx, c] : channel.coeffs()) {
        out[cnot_conjugate_index(idx)] += c;
    }
    return PauliChannel(2, std::move(out));
}

SplModel lambdas_from_fidelities(const std::array<double, 16>& f) {
    // -log(f_a) / 2 = sum_k {a, k} lambda_k over a = 1..15: least squares,
    // then clamp at zero.
    Eigen::MatrixXd m(15, 15);
    Eigen::VectorXd rhs(15);
    for (std::uint64_t a = 1; a <= 15; ++a) {
        if (f[a] <= 0.0) {
            throw std::runtime_error("non-positive Pauli fidelity");
        }
        rhs(a - 1) = -std::log(f[a]) / 2.0;
        for (std::uint64_t k = 1; k <= 15; ++k) {
            m(a - 1, k - 1) = double(anticommutes(a, k));
        }
    }
    Eigen::VectorXd lambda = m.colPivHouseholderQr().solve(rhs);
    SplModel model;
    for (std::size_t k = 1; k <= 15; ++k) {
        model.lambdas[k] = std::max(0.0, lambda(k - 1));
    }
    return model;
}

}  // namespace

SplModel spl_calibrate(const PauliChannel& gate_noise, CalibrationMode mode,
                       const std::vector<std::size_t>& repetitions) {
    if (gate_noise.qubits() != 2) {
        throw std::invalid_argument("SPL calibration expects 2 qubits");
    }
    auto diag_fidelities = [](const PauliChannel& ch) {
        std::array<double, 16> f{};
        for (std::uint64_t a = 0; a < 16; ++a) {
            double v = 0.0;
            for (const auto& [idx, c] : ch.coeffs()) {
                v += c * commutation_sign(2, idx, a);
            }
            f[a] = v;
        }
        return f;
    };
    if (mode == CalibrationMode::Exact) {
        return lambdas_from_fidelities(diag_fidelities(gate_noise));
    }
    // Fit mode: decay of the m-fold repetition of (CNOT + noise) pairs.
    // CNOT^2 = I, so the effective map after m repetitions is an alternating
    // product of E and its CNOT conjugate; each Pauli fidelity decays as
    // a0_a * f_a^m when E commutes with CNOT conjugation.
    if (repetitions.size() < 2) {
        throw std::invalid_argument("fit mode needs >= 2 repetition counts");
    }
    const PauliChannel conj = cnot_conjugate(gate_noise);
    std::array<double, 16> f{};
    for (std::uint64_t a = 0; a < 16; ++a) {
        // Regress log d_a(m) = log a0 + m log f_a.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        PauliChannel acc = PauliChannel::identity(2);
        std::size_t applied = 0;
        for (std::size_t m : repetitions) {
            while (applied < m) {
                acc = acc.then(applied % 2 == 0 ? gate_noise : conj);
                ++applied;
            }
            double d = 0.0;
            for (const auto& [idx, c] : acc.coeffs()) {
                d += c * commutation_sign(2, idx, a);
            }
            if (d <= 0.0) {
                throw std::runtime_error("fidelity decay crossed zero");
            }
            const double x = double(m), y = std::log(d);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = double(repetitions.size());
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        f[a] = std::exp(slope);
    }
    return lambdas_from_fidelities(f);
}

namespace {

// Applies a signed Pauli quasi-map to the density matrix on `qubits`.
void apply_signed_map(DensityMatrix& rho,
                      const std::map<std::uint64_t, double>& coeffs,
                      const std::vector<std::size_t>& qubits) {
    MatrixXcd out = MatrixXcd::Zero(rho.m.rows(), rho.m.cols());
    for (const auto& [idx, c] : coeffs) {
        if (c == 0.0) continue;
        std::vector<PauliLetter> letters(rho.qubits, PauliLetter::I);
        for (std::size_t i = 0; i < qubits.size(); ++i) {
            letters[qubits[i]] = PauliLetter((idx >> (2 * i)) & 3);
        }
        const MatrixXcd p = PauliString(rho.qubits, letters).matrix();
        out += c * p * rho.m * p;
    }
    rho.m = out;
}

}  // namespace

MitigationResult pec_mitigate(const LayeredCircuit& circuit,
                              const SplModel& model, const PecOptions& opts) {
    MitigationResult result;
    if (opts.mode == SimMode::Noiseless) {
        // Exact: compose the signed inverse after every noisy CNOT.
        const auto inverse = model.inverse_quasi_coeffs();
        DensityMatrix rho = DensityMatrix::zero_state(circuit.qubits);
        for (std::size_t l = 0; l < circuit.depth(); ++l) {
            for (const Gate& g : circuit.layers[l]) {
                apply_gate(rho, g);
                if (g.noise) {
                    apply_channel(rho, *g.noise, g.qubits);
                    if (g.kind == GateKind::CNOT) {
                        apply_signed_map(rho, inverse, g.qubits);
                    }
                }
            }
            result.mitigated.push_back(
                expectation(rho, circuit.observable_at(l)));
        }
        // The ledger reports the configured hardware cost of the mitigation,
        // independent of the (analytic) evaluation path.
        result.ledger = OverheadLedger{
            opts.instances,
            double(opts.total_shots) / double(opts.instances)};
        return result;
    }

    // Sampled: quasi-probability instances with sign tracking.
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // 16384 total over 100 instances is non-integral; use the rounded
    // per-instance count while the ledger keeps the exact average.
    const std::size_t shots = std::max<std::size_t>(
        1, std::size_t(std::llround(double(opts.total_shots) /
                                    double(opts.instances))));
    std::vector<double> acc(circuit.depth(), 0.0);
    for (std::size_t inst = 0; inst < opts.instances; ++inst) {
        double sign = 1.0;
        DensityMatrix rho = DensityMatrix::zero_state(circuit.qubits);
        std::vector<double> seq;
        for (std::size_t l = 0; l < circuit.depth(); ++l) {
            for (const Gate& g : circuit.layers[l]) {
                apply_gate(rho, g);
                if (!g.noise) continue;
                apply_channel(rho, *g.noise, g.qubits);
                if (g.kind != GateKind::CNOT) continue;
                // One draw per SPL factor: identity w.p. omega_k, else
                // insert P_k and flip the accumulated sign.
                for (std::uint64_t k = 1; k <= 15; ++k) {
                    const double w = model.omega(k);
                    if (unif(rng) < w) continue;
                    sign = -sign;
                    apply_signed_map(rho, {{k, 1.0}}, g.qubits);
                }
            }
            seq.push_back(expectation(rho, circuit.observable_at(l)));
        }
        for (std::size_t l = 0; l < seq.size(); ++l) {
            acc[l] += sign * sample_shots(seq[l], shots, rng);
        }
    }
    const double gamma = model.gamma();
    result.mitigated.resize(circuit.depth());
    for (std::size_t l = 0; l < acc.size(); ++l) {
        result.mitigated[l] = gamma * acc[l] / double(opts.instances);
    }
    result.ledger = OverheadLedger{
        opts.instances, double(opts.total_shots) / double(opts.instances)};
    return result;
}

namespace {

bool is_clifford_angle(double angle) {
    const double k = angle / (M_PI / 2.0);
    return std::abs(k - std::round(k)) < 1e-12;
}

Gate snapped_rotation(const Gate& g, std::mt19937_64& rng) {
    // Weight R(k pi/2) by exp(-4 d^2), d the Frobenius distance.
    std::array<double, 4> weights{};
    for (int k = 0; k < 4; ++k) {
        Gate candidate = g;
        candidate.angle = k * (M_PI / 2.0);
        const double d = (g.unitary() - candidate.unitary()).norm();
        weights[k] = std::exp(-4.0 * d * d);
    }
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    Gate out = g;
    out.angle = pick(rng) * (M_PI / 2.0);
    return out;
}

}  // namespace

LayeredCircuit near_clifford_variant(const LayeredCircuit& circuit,
                                     const CliffordSubstitution& sub,
                                     std::mt19937_64& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> rotations;
    for (std::size_t l = 0; l < circuit.depth(); ++l) {
        for (std::size_t g = 0; g < circuit.layers[l].size(); ++g) {
            const Gate& gate = circuit.layers[l][g];
            if (gate_is_rotation(gate.kind) && gate.qubits.size() == 1 &&
                !is_clifford_angle(gate.angle)) {
                rotations.emplace_back(l, g);
            }
        }
    }
    std::size_t replace =
        std::size_t(std::ceil(sub.rate * double(rotations.size())));
    if (rotations.size() - replace > sub.max_nonclifford) {
        replace = rotations.size() - sub.max_nonclifford;
    }
    std::shuffle(rotations.begin(), rotations.end(), rng);
    LayeredCircuit variant = circuit;
    for (std::size_t i = 0; i < replace; ++i) {
        auto [l, g] = rotations[i];
        variant.layers[l][g] = snapped_rotation(variant.layers[l][g], rng);
    }
    return variant;
}

CdrEvaluator default_cdr_evaluator(bool sampled_noisy, std::size_t shots,
                                   std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    CdrEvaluator eval;
    eval.noisy = [rng, sampled_noisy, shots](const LayeredCircuit& c) {
        return exact_or_sampled(c, SimMode::Noisy, sampled_noisy, shots, *rng);
    };
    eval.noiseless = [](const LayeredCircuit& c) {
        return simulate(c, SimMode::Noiseless);
    };
    return eval;
}

MitigationResult cdr_mitigate(const LayeredCircuit& circuit,
                              const CliffordSubstitution& sub,
                              const CdrEvaluator& evaluate,
                              std::uint64_t seed, std::size_t shots) {
    std::mt19937_64 rng(seed);
    const std::size_t depth = circuit.depth();
    std::vector<std::vector<double>> noisy_train, ideal_train;
    for (std::size_t t = 0; t < sub.training_circuits; ++t) {
        LayeredCircuit variant = near_clifford_variant(circuit, sub, rng);
        noisy_train.push_back(evaluate.noisy(variant));
        ideal_train.push_back(evaluate.noiseless(variant));
    }
    const std::vector<double> target = evaluate.noisy(circuit);

    MitigationResult result;
    result.mitigated.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        // Least-squares fit y = a * x + b over the training circuits.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = double(sub.training_circuits);
        for (std::size_t t = 0; t < sub.training_circuits; ++t) {
            const double x = noisy_train[t][l], y = ideal_train[t][l];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double det = n * sxx - sx * sx;
        if (std::abs(det) < 1e-12) {
            throw std::runtime_error("rank-deficient CDR regression");
        }
        const double a = (n * sxy - sx * sy) / det;
        const double b = (sy - a * sx) / n;
        result.mitigated[l] = a * target[l] + b;
    }
    result.ledger =
        OverheadLedger{sub.training_circuits + 1, double(shots)};
    return result;
}

}  // namespace qem
