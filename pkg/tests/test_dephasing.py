"""Pure dephasing: population families, gamma -> 0 consistency, orderings."""

import numpy as np

from mirrorqed import grid as G
from mirrorqed import hierarchy, pulses
from mirrorqed.experiments import run_scenario
from mirrorqed.system import SystemParams

RECT1 = pulses.rectangular(0.0, 1.0)


def vac(gpd, tau=1.2, phi=2 * np.pi):
    return SystemParams(gamma=1.0, tau=tau, phi=phi, gamma_pd=gpd,
                        n_photons=0, initial_state="excited_vacuum")


def test_population_before_tau_independent_of_gamma():
    # dephasing touches only coherences; P(t) = e^{-2 G t} exactly for t < tau
    dt = 1e-4
    g = G.build(dt, 1.2 - dt, 1.2)
    t = g.times()
    for gpd in (0.1, 1.0):
        pop = hierarchy.DephasingVacuum(vac(gpd), g).run()
        assert np.max(np.abs(pop - np.exp(-2.0 * t))) < 1e-7


def test_dephasing_kills_the_bound_state():
    g = G.build(1e-3, 60.0, 1.2)
    withpd = hierarchy.DephasingVacuum(vac(0.5), g).run()
    without = hierarchy.VacuumDecay(vac(0.0), g).run()
    assert without[-1] > 0.1
    assert withpd[-1] < 1e-3


def test_stronger_dephasing_decays_faster():
    g = G.build(1e-3, 6.0, 1.2)
    pops = [hierarchy.DephasingVacuum(vac(gpd), g).run()[-1] for gpd in (0.1, 1.0)]
    base = hierarchy.VacuumDecay(vac(0.0), g).run()[-1]
    assert base > pops[0] > pops[1]


def test_gamma_zero_dispatches_to_standard_path_bitwise():
    g = G.build(1e-3, 8.0, 1.2)
    p0 = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=0.0,
                      n_photons=1, initial_state="ground_with_pulse")
    a = run_scenario(p0, RECT1, g).population
    b = hierarchy.SinglePhoton(p0, RECT1, g).run()
    assert np.array_equal(a, b)
    assert isinstance(hierarchy.make_integrator(p0, RECT1, g), hierarchy.SinglePhoton)


def test_one_step_population_consistency_at_zero_dephasing():
    # a single Heun step of the evolved population family agrees with the
    # squared coherence to 1e-12 when Gamma*dt <= 5e-5
    dt = 5e-5
    g_ = 1.0
    ce = 1.0 + 0j
    k1 = -g_ * ce
    cep = ce + dt * k1
    k2 = -g_ * cep
    ce1 = ce + 0.5 * dt * (k1 + k2)
    pe, kp1 = 1.0, -2.0 * g_ * 1.0
    pep = pe + dt * kp1
    kp2 = -2.0 * g_ * pep
    pe1 = pe + 0.5 * dt * (kp1 + kp2)
    assert abs(pe1 - abs(ce1) ** 2) <= 1e-12


def test_vanishing_dephasing_converges_to_standard_path():
    g = G.build(1e-3, 6.0, 1.2)
    p_eps = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=1e-30,
                         n_photons=1, initial_state="ground_with_pulse")
    p0 = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=0.0,
                      n_photons=1, initial_state="ground_with_pulse")
    deph = hierarchy.DephasingSinglePhoton(p_eps, RECT1, g).run()
    std = hierarchy.SinglePhoton(p0, RECT1, g).run()
    # same continuum limit; discretizations differ at O(dt^2)
    assert np.max(np.abs(deph - std)) < 50.0 * g.dt ** 2


def test_two_photon_dephasing_reduces_excitation_and_kills_plateau():
    p = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=1.0,
                     n_photons=2, initial_state="ground_with_pulse")
    p0 = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=0.0,
                      n_photons=2, initial_state="ground_with_pulse")
    g = G.build(0.02, 14.0, 1.2)
    deph = hierarchy.DephasingTwoPhoton(p, RECT1, g).run()
    std = hierarchy.TwoPhoton(p0, RECT1, g, fast_brackets=True).run()
    assert std[-1] > 0.05          # bound state survives without dephasing
    assert deph[-1] < 5e-3         # and is inaccessible with it
    assert np.max(deph) < np.max(std)


def test_two_photon_dephasing_near_zero_matches_standard():
    p_eps = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=1e-30,
                         n_photons=2, initial_state="ground_with_pulse")
    p0 = SystemParams(gamma=1.0, tau=1.2, phi=2 * np.pi, gamma_pd=0.0,
                      n_photons=2, initial_state="ground_with_pulse")
    g = G.build(0.01, 3.0, 1.2)
    deph = hierarchy.DephasingTwoPhoton(p_eps, RECT1, g).run()
    std = hierarchy.TwoPhoton(p0, RECT1, g, fast_brackets=True).run()
    assert np.max(np.abs(deph - std)) < 100.0 * g.dt ** 2


def test_rank2_population_family_stays_hermitian():
    p = SystemParams(gamma=1.0, tau=1.2, phi=0.7, gamma_pd=0.3,
                     n_photons=2, initial_state="ground_with_pulse")
    g = G.build(0.01, 4.0, 1.2)
    integ = hierarchy.DephasingTwoPhoton(p, RECT1, g)
    integ.run()
    w2 = integ.W2
    assert np.max(np.abs(w2 - w2.conj().T)) < 1e-10
