"""Quick end-to-end check of the Python bindings."""

import math

import spinthermo as st


def main():
    # character transforms round-trip
    energies = [0.3, -1.2, 2.0, 0.7]
    back = st.energies_from_couplings(st.couplings_from_energies(energies))
    assert max(abs(a - b) for a, b in zip(energies, back)) < 1e-12

    # inverter: J12 = -1.5 makes antiparallel states low
    assert st.energies_from_couplings([0.0, 0.0, 0.0, -1.5]) == [1.5, -1.5, -1.5, 1.5]

    model = st.StandardModel.fit({1: 60.0, 2: 40.0}, n_spins=2)
    assert abs(sum(model.weights) - 1.0) < 1e-12
    assert model.couplings[3] < 0

    ens = st.Ensemble(model, temperature=1.0)
    s, e, c = ens.entropy_energy_heat_capacity()
    # at the standard state S = ln Z° and the energy deviation vanishes
    assert abs(s - model.ln_partition) < 1e-9 and abs(e) < 1e-9
    assert abs(ens.a_tilde([0, 1, 2, 3]) - ens.free_energy()) < 1e-9

    mf = st.MeanField.inverter(1.5, 1.0)
    minima = [m for m, kind, _ in mf.solve([0.0, 0.0]) if kind == "minimum"]
    assert len(minima) == 2
    m_star = max(abs(m[0]) for m in minima)
    assert abs(m_star - math.tanh(1.5 * m_star)) < 1e-9
    h_c, m0 = mf.phase_boundary()
    assert abs(m0 - math.sqrt(1 - 1 / 1.5)) < 1e-12 and h_c > 1.5

    rep = st.ReplicaModel(1.5, 1.0, 16)
    assert rep.magnetization(0.0) == 0.0
    assert rep.helmholtz_per_spin(0.5) <= mf.slice_free_energy(0.5) / 2 + 1e-12

    run = rep.sample(seed=3, sweeps=12000, burn_in=500)
    assert len(run["a"]) == 11500 and 0 < run["acceptance"] < 1
    assert run["plateau"] is None or 0 < run["plateau"] < 1
    again = rep.sample(seed=3, sweeps=12000, burn_in=500)
    assert again["a"] == run["a"]
    t, transitions, _ = st.escape_time(run["a"], 16, m_star)
    assert t > 0 and transitions > 0

    pair = st.PhasePair.borderline()
    t0 = pair.solve_t0(0.5, 2.0)
    assert abs(t0 - 1.0) < 1e-9
    assert pair.stability(0.8)[0] == "true" and pair.stability(1.2)[0] == "false"

    # the covariance of an ideal subset is multinomial
    full = st.StandardModel.fit({0: 1.0, 1: 3.0, 2: 2.0, 3: 4.0}, n_spins=2)
    cov, inv = full.fluctuations([1, 2])
    x = full.weights
    assert abs(cov[0][0] - x[1] * (1 - x[1])) < 1e-12
    assert abs(cov[0][1] + x[1] * x[2]) < 1e-12

    try:
        st.ReplicaModel(1.5, -1.0, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("negative temperature accepted")
    try:
        mf.slice_free_energy(1.0)
    except ArithmeticError:
        pass
    else:
        raise AssertionError("|m| = 1 accepted")

    print("spinthermo", st.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
