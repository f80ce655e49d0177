#include <doctest.h>

#include <cmath>
#include <random>

#include "qem/baselines.hpp"
#include "qem/circuit.hpp"
#include "qem/ptm.hpp"
#include "qem/simulator.hpp"

using namespace qem;

namespace {

SplModel planted_spl(std::mt19937_64& rng, double scale = 0.01) {
    std::uniform_real_distribution<double> u(0.0, scale);
    SplModel model;
    for (std::size_t k = 1; k <= 15; ++k) model.lambdas[k] = u(rng);
    return model;
}

// Two-qubit circuit of rotations + CNOTs whose only noise is the SPL
// channel attached to each CNOT.
LayeredCircuit spl_noisy_circuit(const SplModel& model, std::size_t layers) {
    LayeredCircuit circuit;
    circuit.qubits = 2;
    circuit.observable = PauliString(2, 12);  // Z on qubit 1
    const PauliChannel noise = model.channel();
    for (std::size_t l = 0; l < layers; ++l) {
        Gate rx = make_gate(GateKind::RX, {0}, 0.4 + 0.13 * double(l));
        rx.noise = PauliChannel::identity(1);
        Gate ry = make_gate(GateKind::RY, {1}, 0.7 - 0.09 * double(l));
        ry.noise = PauliChannel::identity(1);
        Gate cnot = make_gate(GateKind::CNOT, {0, 1});
        cnot.noise = noise;
        cnot.noise_p = 1.0 - noise.identity_weight();
        circuit.layers.push_back({rx, ry, cnot});
    }
    return circuit;
}

}  // namespace

TEST_CASE("richardson coefficient fixtures") {
    const RichardsonPlan two = RichardsonPlan::from_scales({1.0, 3.0});
    REQUIRE(two.coefficients.size() == 2);
    CHECK(two.coefficients[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(two.coefficients[1] == doctest::Approx(-0.5).epsilon(1e-12));

    const RichardsonPlan three = RichardsonPlan::from_scales({1.0, 2.0, 3.0});
    CHECK(three.coefficients[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(three.coefficients[1] == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(three.coefficients[2] == doctest::Approx(1.0).epsilon(1e-12));

    const RichardsonPlan one = RichardsonPlan::from_scales({1.0});
    CHECK(one.coefficients == std::vector<double>{1.0});

    CHECK_THROWS(RichardsonPlan::from_scales({1.0, 1.0}));
    CHECK_THROWS(RichardsonPlan::from_scales({}));
}

TEST_CASE("richardson invariants on random plans") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> scales{1.0};
        for (int i = 0; i < 3; ++i) scales.push_back(scales.back() + u(rng));
        const RichardsonPlan plan = RichardsonPlan::from_scales(scales);
        double sum = 0.0;
        for (double g : plan.coefficients) sum += g;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t j = 1; j < scales.size(); ++j) {
            double moment = 0.0;
            for (std::size_t i = 0; i < scales.size(); ++i)
                moment += plan.coefficients[i] * std::pow(scales[i], double(j));
            CHECK(std::abs(moment) < 1e-9);
        }
    }
}

TEST_CASE("zne recovers the intercept of an exactly linear decay") {
    const RichardsonPlan plan = RichardsonPlan::from_scales({1.0, 3.0, 5.0});
    const ScaledEvaluator linear = [](double x) {
        return std::vector<double>{0.83 - 0.07 * x, 0.41 - 0.02 * x};
    };
    const MitigationResult r = zne_mitigate(linear, plan);
    CHECK(std::abs(r.mitigated[0] - 0.83) < 1e-12);
    CHECK(std::abs(r.mitigated[1] - 0.41) < 1e-12);
    CHECK(r.ledger.total() == 3 * (1000 + 8192));
}

TEST_CASE("zne ledger matches the published default") {
    const RichardsonPlan plan = RichardsonPlan::from_scales({1.0, 3.0});
    const ScaledEvaluator flat = [](double) {
        return std::vector<double>{0.5};
    };
    CHECK(zne_mitigate(flat, plan).ledger.total() == 18384);
}

TEST_CASE("gate unfolding repeats only two-qubit gates") {
    const LayeredCircuit circuit =
        compile(build_ising_trotter(3, 0.6, 1.0, 0.5, 2));
    const LayeredCircuit tripled = unfold_two_qubit_gates(circuit, 3);
    std::size_t cnots = 0, tripled_cnots = 0, singles = 0, tripled_singles = 0;
    for (const auto& layer : circuit.layers)
        for (const Gate& g : layer)
            (g.kind == GateKind::CNOT ? cnots : singles) += 1;
    for (const auto& layer : tripled.layers)
        for (const Gate& g : layer)
            (g.kind == GateKind::CNOT ? tripled_cnots : tripled_singles) += 1;
    CHECK(tripled_cnots == 3 * cnots);
    CHECK(tripled_singles == singles);
    CHECK_THROWS(unfold_two_qubit_gates(circuit, 2));

    // CNOT^2 = identity: unfolding leaves noiseless expectations unchanged.
    const std::vector<double> a = simulate(circuit, SimMode::Noiseless);
    const std::vector<double> b = simulate(tripled, SimMode::Noiseless);
    for (std::size_t l = 0; l < a.size(); ++l)
        CHECK(a[l] == doctest::Approx(b[l]).epsilon(1e-10));
}

TEST_CASE("spl model identities") {
    std::mt19937_64 rng(5);
    const SplModel model = planted_spl(rng);
    double sum = 0.0;
    for (std::size_t k = 1; k <= 15; ++k) {
        CHECK(model.omega(k) ==
              doctest::Approx((1.0 + std::exp(-2.0 * model.lambdas[k])) / 2.0));
        CHECK(model.omega(k) > 0.5);
        CHECK(model.omega(k) <= 1.0);
        sum += model.lambdas[k];
    }
    CHECK(model.gamma() == doctest::Approx(std::exp(2.0 * sum)));

    // Single lambda_j: f_a = e^{-2 lambda_j} exactly when P_a anticommutes
    // with P_j, else 1.
    SplModel single;
    single.lambdas[5] = 0.02;  // XX
    const auto f = single.fidelities();
    for (std::uint64_t a = 0; a < 16; ++a) {
        const double expected =
            commutation_sign(2, a, 5) == -1 ? std::exp(-0.04) : 1.0;
        CHECK(f[a] == doctest::Approx(expected).epsilon(1e-14));
    }

    // The channel's PTM diagonal equals the fidelity vector.
    const auto full = model.fidelities();
    const Ptm r = ptm_from_channel(model.channel());
    for (std::uint64_t a = 0; a < 16; ++a)
        CHECK(r.m(Eigen::Index(a), Eigen::Index(a)) ==
              doctest::Approx(full[a]).epsilon(1e-12));
}

TEST_CASE("spl inverse quasi-coefficients cancel the channel") {
    std::mt19937_64 rng(7);
    const SplModel model = planted_spl(rng);
    const auto inverse = model.inverse_quasi_coeffs();
    // Composed diagonal action: for each Pauli a, f_a * (inverse acting on a).
    const auto f = model.fidelities();
    for (std::uint64_t a = 0; a < 16; ++a) {
        double inv = 0.0;
        for (const auto& [idx, c] : inverse)
            inv += c * commutation_sign(2, idx, a);
        CHECK(f[a] * inv == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("spl calibration recovers planted coefficients") {
    std::mt19937_64 rng(11);
    const SplModel planted = planted_spl(rng);
    const SplModel exact =
        spl_calibrate(planted.channel(), CalibrationMode::Exact);
    for (std::size_t k = 1; k <= 15; ++k)
        CHECK(std::abs(exact.lambdas[k] - planted.lambdas[k]) < 1e-6);

    // Fit mode alternates the channel with its CNOT conjugate, so exact
    // recovery needs conjugation-invariant noise: symmetrize the planted
    // lambdas over the conjugation orbits (computed densely here).
    MatrixXcd cnot = MatrixXcd::Zero(4, 4);
    cnot(0, 0) = cnot(1, 3) = cnot(2, 2) = cnot(3, 1) = 1.0;
    auto conj_index = [&](std::uint64_t idx) -> std::uint64_t {
        const MatrixXcd conj =
            cnot * PauliString(2, idx).matrix() * cnot.adjoint();
        for (std::uint64_t j = 0; j < 16; ++j) {
            const cx overlap =
                (PauliString(2, j).matrix().adjoint() * conj).trace() / 4.0;
            if (std::abs(std::abs(overlap) - 1.0) < 1e-9) return j;
        }
        throw std::runtime_error("conjugate not a Pauli");
    };
    SplModel symmetric = planted;
    for (std::uint64_t k = 1; k <= 15; ++k) {
        const double avg =
            (planted.lambdas[k] + planted.lambdas[conj_index(k)]) / 2.0;
        symmetric.lambdas[k] = avg;
        symmetric.lambdas[conj_index(k)] = avg;
    }
    const SplModel fitted =
        spl_calibrate(symmetric.channel(), CalibrationMode::Fit);
    for (std::size_t k = 1; k <= 15; ++k)
        CHECK(std::abs(fitted.lambdas[k] - symmetric.lambdas[k]) < 1e-6);

    const SplModel none =
        spl_calibrate(PauliChannel::identity(2), CalibrationMode::Exact);
    for (std::size_t k = 1; k <= 15; ++k)
        CHECK(none.lambdas[k] == doctest::Approx(0.0));
}

TEST_CASE("pec exact mode cancels planted spl noise") {
    std::mt19937_64 rng(13);
    const SplModel model = planted_spl(rng);
    const LayeredCircuit circuit = spl_noisy_circuit(model, 3);
    const std::vector<double> ideal = simulate(circuit, SimMode::Noiseless);

    PecOptions opts;
    opts.mode = SimMode::Noiseless;
    const MitigationResult r = pec_mitigate(circuit, model, opts);
    REQUIRE(r.mitigated.size() == ideal.size());
    for (std::size_t l = 0; l < ideal.size(); ++l)
        CHECK(std::abs(r.mitigated[l] - ideal[l]) < 1e-8);
    CHECK(r.ledger.total() == 116384);
}

TEST_CASE("pec sampled mode converges to the noiseless value") {
    std::mt19937_64 rng(17);
    const SplModel model = planted_spl(rng, 0.004);
    const LayeredCircuit circuit = spl_noisy_circuit(model, 2);
    const std::vector<double> ideal = simulate(circuit, SimMode::Noiseless);

    PecOptions opts;
    opts.mode = SimMode::Noisy;
    opts.instances = 200;
    opts.total_shots = 200 * 4096;
    opts.seed = 23;
    const MitigationResult r = pec_mitigate(circuit, model, opts);
    CHECK(std::abs(r.mitigated.back() - ideal.back()) < 0.03);
}

TEST_CASE("near-clifford substitution snaps rotations to k*pi/2") {
    std::mt19937_64 rng(19);
    const LayeredCircuit circuit =
        compile(build_ising_trotter(3, 0.6, 1.0, 0.5, 6));
    CliffordSubstitution sub;
    sub.rate = 1.0;
    sub.max_nonclifford = 0;
    const LayeredCircuit variant = near_clifford_variant(circuit, sub, rng);
    for (const auto& layer : variant.layers) {
        for (const Gate& g : layer) {
            if (!gate_is_rotation(g.kind)) continue;
            const double k = g.angle / (M_PI / 2.0);
            CHECK(std::abs(k - std::round(k)) < 1e-12);
        }
    }

    // A rotation already at k*pi/2 keeps its angle (distance-0 candidate
    // carries weight e^0 = 1, strictly dominant).
    LayeredCircuit snap;
    snap.qubits = 1;
    snap.observable = PauliString(1, 3);
    snap.layers = {{make_gate(GateKind::RZ, {0}, M_PI / 2.0)}};
    int kept = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const LayeredCircuit v = near_clifford_variant(snap, sub, rng);
        if (std::abs(v.layers[0][0].angle - M_PI / 2.0) < 1e-12) ++kept;
    }
    CHECK(kept > 150);
}

TEST_CASE("near-clifford variant respects the non-clifford budget") {
    std::mt19937_64 rng(23);
    const LayeredCircuit circuit =
        compile(build_ising_trotter(4, 0.6, 1.0, 0.5, 30));
    CliffordSubstitution sub;  // rate 0.5, cap 20
    const LayeredCircuit variant = near_clifford_variant(circuit, sub, rng);
    std::size_t nonclifford = 0;
    for (const auto& layer : variant.layers)
        for (const Gate& g : layer) {
            if (!gate_is_rotation(g.kind)) continue;
            const double k = g.angle / (M_PI / 2.0);
            if (std::abs(k - std::round(k)) > 1e-12) ++nonclifford;
        }
    CHECK(nonclifford <= sub.max_nonclifford);
}

TEST_CASE("cdr recovers the truth under an exact affine noise relation") {
    const LayeredCircuit circuit =
        compile(build_ising_trotter(3, 0.6, 1.0, 0.8, 4));
    CdrEvaluator eval;
    eval.noiseless = [](const LayeredCircuit& c) {
        return simulate(c, SimMode::Noiseless);
    };
    eval.noisy = [&eval](const LayeredCircuit& c) {
        std::vector<double> y = eval.noiseless(c);
        for (double& v : y) v = 0.8 * v + 0.05;
        return y;
    };
    const MitigationResult r =
        cdr_mitigate(circuit, CliffordSubstitution{}, eval, 29);
    const std::vector<double> ideal = simulate(circuit, SimMode::Noiseless);
    REQUIRE(r.mitigated.size() == ideal.size());
    for (std::size_t l = 0; l < ideal.size(); ++l)
        CHECK(std::abs(r.mitigated[l] - ideal[l]) < 1e-10);
    CHECK(r.ledger.total() == 101112);
}

TEST_CASE("cdr is exactly affine-equivariant in the observable scale") {
    const LayeredCircuit circuit =
        compile(build_ising_trotter(3, 0.6, 1.0, 0.7, 3));
    const double c = 3.5;
    auto run = [&](double scale) {
        CdrEvaluator eval;
        eval.noiseless = [scale](const LayeredCircuit& cc) {
            std::vector<double> y = simulate(cc, SimMode::Noiseless);
            for (double& v : y) v *= scale;
            return y;
        };
        eval.noisy = [&eval](const LayeredCircuit& cc) {
            std::vector<double> y = eval.noiseless(cc);
            for (double& v : y) v = 0.9 * v + 0.02;
            return y;
        };
        return cdr_mitigate(circuit, CliffordSubstitution{}, eval, 31);
    };
    const MitigationResult base = run(1.0);
    const MitigationResult scaled = run(c);
    for (std::size_t l = 0; l < base.mitigated.size(); ++l)
        CHECK(scaled.mitigated[l] ==
              doctest::Approx(c * base.mitigated[l]).epsilon(1e-9));
}

TEST_CASE("ledgers match the published totals") {
    CHECK(OverheadLedger{2, 8192}.total() == 18384);
    CHECK(OverheadLedger{100, 163.84}.total() == 116384);
    CHECK(OverheadLedger{11, 8192}.total() == 101112);
    CHECK(ml_style_ledger().total() == 9192);
}
