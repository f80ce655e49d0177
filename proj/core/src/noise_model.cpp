#include "qem/noise_model.hpp"

#include <cmath>
#include <stdexcept>

#include "qem/circuit.hpp"

namespace qem {

void DecoherenceSpec::validate() const {
    if (t1_us <= 0.0 || t2_us <= 0.0)
        throw std::invalid_argument("T1 and T2 must be positive");
    if (t2_us > 2.0 * t1_us + 1e-12)
        throw std::invalid_argument("unphysical decoherence: T2 > 2*T1");
    if (single_gate_time_ns <= 0.0 || two_gate_time_ns <= 0.0)
        throw std::invalid_argument("gate times must be positive");
}

DecoherenceSpec DecoherenceSpec::scaled_to(double t1_us) {
    DecoherenceSpec s;
    s.t2_us = t1_us * (15.6 / 23.2357);
    s.t1_us = t1_us;
    return s;
}

SingleQubitRates single_qubit_rates(const DecoherenceSpec& spec, double t_ns) {
    spec.validate();
    if (t_ns <= 0.0) throw std::invalid_argument("gate time must be positive");
    const double t_us = t_ns * 1e-3;
    const double ad = (1.0 - std::exp(-t_us / spec.t1_us)) / 4.0;
    const double pd = (1.0 - std::exp(-t_us / spec.t2_us)) / 2.0;
    SingleQubitRates r{ad, ad, pd - ad};
    if (r.pz < 0.0)
        throw std::invalid_argument("negative p_Z: T2 > 2*T1 violation");
    return r;
}

PauliChannel single_qubit_channel(const DecoherenceSpec& spec, double t_ns) {
    const auto r = single_qubit_rates(spec, t_ns);
    return PauliChannel(1, {{0, 1.0 - r.total()},
                            {1, r.px},
                            {2, r.py},
                            {3, r.pz}});
}

PauliChannel two_qubit_channel(const DecoherenceSpec& spec) {
    const auto r = single_qubit_rates(spec, spec.two_gate_time_ns);
    const double id1 = 1.0 - r.total();

    std::map<std::uint64_t, double> c;
    auto set = [&](PauliLetter a, PauliLetter b, double v) {
        // qubit 0 letter a, qubit 1 letter b
        const std::uint64_t idx = std::uint64_t(static_cast<std::uint8_t>(a)) |
                                  (std::uint64_t(static_cast<std::uint8_t>(b)) << 2);
        c[idx] += v;
    };
    using P = PauliLetter;
    set(P::I, P::X, r.px * id1);
    set(P::X, P::I, r.px * id1);
    set(P::I, P::Y, r.py * id1);
    set(P::Y, P::I, r.py * id1);
    set(P::X, P::X, r.px * r.py);
    set(P::X, P::Y, r.px * r.py);
    set(P::Y, P::Y, r.px * r.py);
    set(P::Y, P::X, r.px * r.py);
    set(P::X, P::Z, r.px * r.pz);
    set(P::Z, P::X, r.px * r.pz);
    set(P::Y, P::Z, r.px * r.pz);
    set(P::Z, P::Y, r.px * r.pz);
    set(P::I, P::Z, r.pz * id1);
    set(P::Z, P::I, r.pz * id1);
    set(P::Z, P::Z, r.pz * r.pz);

    double total = 0.0;
    for (const auto& [idx, v] : c) total += v;
    c[0] = 1.0 - total;
    return PauliChannel(2, std::move(c));
}

PauliChannel perturb_channel(const PauliChannel& channel, double fluctuation,
                             std::mt19937_64& rng) {
    if (fluctuation == 0.0) return channel;
    std::uniform_real_distribution<double> u(-fluctuation, fluctuation);
    std::map<std::uint64_t, double> c;
    double total = 0.0;
    for (const auto& [idx, v] : channel.coeffs()) {
        if (idx == 0) continue;
        const double perturbed = std::max(0.0, v + u(rng));
        c[idx] = perturbed;
        total += perturbed;
    }
    if (total > 1.0)
        throw std::invalid_argument("perturbed error probability exceeds 1");
    c[0] = 1.0 - total;
    return PauliChannel(channel.qubits(), std::move(c));
}

LayeredCircuit attach_noise(const LayeredCircuit& circuit,
                            const DecoherenceSpec& spec) {
    spec.validate();
    const PauliChannel one_q =
        single_qubit_channel(spec, spec.single_gate_time_ns);
    const PauliChannel two_q = two_qubit_channel(spec);

    std::mt19937_64 rng(spec.seed);
    LayeredCircuit out = circuit;
    for (auto& layer : out.layers) {
        for (auto& g : layer) {
            if (g.kind == GateKind::RZZ)
                throw std::invalid_argument(
                    "attach_noise requires a compiled circuit (no RZZ)");
            const PauliChannel& base =
                gate_arity(g.kind) == 1 ? one_q : two_q;
            g.noise = perturb_channel(base, spec.fluctuation, rng);
            g.noise_p = 1.0 - g.noise->identity_weight();
        }
    }
    return out;
}

}  // namespace qem
