"""Feedback integrators for the closed single-time matrix-element hierarchy.

Every integrator advances the delay system

    d/dt sm(t) = -Gamma sm(t) - sqrt(Gamma) (1 - 2 sp sm) r_{t,tau}
                 + Gamma e^{i phi} [ sm(t-tau) - 2 sp(t) sm(t) sm(t-tau) ] Theta(t - tau)

projected onto the state families listed in :mod:`mirrorqed.elements`; the
closed equation sets, including the three-photon block and the dephasing
variants, are written out in docs/equations.md.  Numerical scheme, shared by
all families:

  * explicit Heun (predictor/corrector); delayed values and auxiliary-time
    integrals are evaluated per stage from ring buffers of depth
    2*k_half_tau + 1,
  * Theta(t - tau) is gated per step interval: both Heun stages of step s
    carry the delayed terms iff s >= 2*k_half_tau, so the stage evaluated
    exactly at t = tau uses the one-sided limit belonging to its step (the
    step arriving at tau sees no feedback, the step leaving tau sees it in
    full).  Gating per stage instant instead injects a one-time O(dt) defect
    at the activation point,
  * impulse sources (the delta terms of the noise operator acting on
    single-photon kets) are applied as exact amplitude jumps at the aligned
    steps t = t' -+ tau/2, before the Heun stage, with amplitudes read from
    the pre-step snapshot,
  * static branch cuts in t' (the start of the outgoing impulse train at
    t' = tau/2, discontinuous pulse edges) live on split nodes of the
    auxiliary grid (elements.AuxGrid), and the impulse pair belonging to the
    current step enters auxiliary-time integrals at its branch midpoint;
    both are required to keep the quadratures second order across jumps,
  * populations never jump; they are reconstructed from the projector sums.

The two-photon family <g,t'|sm|g,2> evaluates its feedback bracket once per
matrix element (the element-graph cost model: O(N^2) per step).  Passing
``fast_brackets=True`` computes the shared bracket once per stage instead;
the result is bit-identical because the identical reduction runs on the
identical operands, and the sweep harness relies on that.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from . import pulses
from .elements import init_elements, pair_tables
from .engine import get_engine
from .grid import TimeGrid
from .system import (EXCITED_VACUUM, GROUND_WITH_PULSE, DiscretizationError,
                     SystemParams)

__all__ = [
    "VacuumDecay",
    "SinglePhoton",
    "TwoPhoton",
    "ThreePhoton",
    "DephasingVacuum",
    "DephasingSinglePhoton",
    "DephasingTwoPhoton",
    "make_integrator",
]


def _check_population(p: float, dt: float, where: str) -> None:
    eps = 10.0 * dt * dt
    if not (-eps <= p <= 1.0 + eps):
        raise DiscretizationError(
            f"population {p:.6g} outside [-{eps:.3g}, 1+{eps:.3g}] at {where}; "
            "discretization failure, reduce dt")


class _Base:
    """Shared scaffolding: delay bookkeeping, impulse trains, run loop."""

    def __init__(self, params: SystemParams, grid: TimeGrid, pulse=None, engine=None):
        if params.tau <= 0:
            raise ValueError("feedback requires tau > 0; use the no-feedback model for tau = 0")
        if abs(grid.tau - params.tau) > 1e-9 * max(1.0, params.tau):
            raise ValueError(f"grid delay {grid.tau:g} does not match params.tau {params.tau:g}")
        self.params = params
        self.grid = grid
        self.pulse = pulse
        self.eng = engine if engine is not None else get_engine()
        self.g = params.gamma
        self.rtg = math.sqrt(params.gamma)
        self.eih = cmath.exp(0.5j * params.phi)
        self.fb = params.gamma * cmath.exp(1j * params.phi)
        self.K2 = 2 * grid.k_half_tau
        self.depth = self.K2 + 1
        self.has_rings = grid.n_steps >= self.K2
        if pulse is not None:
            self.ftau = pulses.evaluate_ftau_many(pulse, grid.times(), params.tau, params.phi)
        else:
            self.ftau = np.zeros(grid.n_steps + 1, dtype=complex)
        self.step_index = 0

    def _setup_aux(self, store):
        """Auxiliary-axis arrays shared by the rank >= 1 integrators."""
        self.store = store
        self.aux = store.aux
        self.n = store.aux.n
        self.w = store.aux.w
        self.f_aux = store.aux.f

    # impulse trains: the returning pass hits t' = t - tau/2 with amplitude
    # -sqrt(G) e^{+i phi/2}, the outgoing pass hits t' = t + tau/2 with
    # +sqrt(G) e^{-i phi/2}; base node indices are s and s + 2 k_half_tau.
    def _train(self, s: int):
        """[(ext node, unit amplitude), ...] of the impulses firing at step s."""
        out = []
        for base, amp, outgoing in ((s, -self.rtg * self.eih, False),
                                    (s + self.K2, self.rtg * self.eih.conjugate(), True)):
            for j in self.aux.targets(base, s == 0, outgoing):
                out.append((j, amp))
        return out

    def _quadrature_view(self, cg_like: np.ndarray, stage: int, arriving: bool) -> np.ndarray:
        """Copy of an impulse-carrying field with front nodes at branch midpoints.

        stage: the step whose impulses are in flight at the evaluated instant
        (the current step for the predictor stage, the next one for the
        corrector, which sees the left limit of its interval).
        """
        q = cg_like.copy()
        for j, amp in self._train(stage):
            q[j] += 0.5 * amp if arriving else -0.5 * amp
        return q

    def _slot(self, s: int) -> int:
        return s % self.depth

    def _delayed_cg(self, slot: int, u: int, arriving: bool) -> np.ndarray:
        """Delayed <g,0|sm|g,t'> slab; rings hold post-impulse values.

        The corrector stage lands exactly on the firing instant of the
        impulses applied at step u and, per the one-sided step convention,
        must see the left limit: subtract the (state-independent) impulse
        amplitudes again.
        """
        raw = self.store.rings["sm_g0_gt"][slot]
        if not arriving:
            return raw
        adj = raw.copy()
        for j, amp in self._train(u):
            adj[j] -= amp
        return adj

    def _step_fb(self, s: int):
        """(theta, feedback coefficient) for both stages of step s."""
        if not self.has_rings or s < self.K2:
            return False, 0j
        return True, self.fb

    # subclasses fill these in
    def _apply_jumps(self, s: int) -> None: ...
    def _write_rings(self, s: int) -> None: ...
    def _heun(self, s: int) -> None: ...
    def population(self) -> float: ...

    def step(self) -> None:
        """Advance one step: impulses at t_s, history write, Heun to t_{s+1}."""
        s = self.step_index
        self._apply_jumps(s)
        if self.has_rings:
            self._write_rings(s)
        self._heun(s)
        self.step_index = s + 1

    def run(self) -> np.ndarray:
        """Populations at the grid step times (length n_steps + 1)."""
        n = self.grid.n_steps
        pop = np.empty(n + 1)
        for s in range(n):
            self._apply_jumps(s)
            if self.has_rings:
                self._write_rings(s)
            pop[s] = self.population()
            _check_population(pop[s], self.grid.dt, f"step {s}")
            self._heun(s)
            self.step_index = s + 1
        self._apply_jumps(n)
        pop[n] = self.population()
        _check_population(pop[n], self.grid.dt, f"step {n}")
        return pop


class VacuumDecay(_Base):
    """Initially excited emitter, vacuum reservoir: single element <g,0|sm|e,0>."""

    def __init__(self, params, grid, engine=None):
        if params.initial_state != EXCITED_VACUUM:
            raise ValueError("VacuumDecay needs the excited_vacuum initial state")
        super().__init__(params, grid, pulse=None, engine=engine)
        self.store = init_elements(params, grid)
        self.ce = complex(self.store.data["sm_g0_e0"])
        self.ring = self.store.rings.get("sm_g0_e0")

    def _apply_jumps(self, s):
        pass

    def _write_rings(self, s):
        self.ring[self._slot(s)] = self.ce

    def _heun(self, s):
        g, dt = self.g, self.grid.dt
        th, fb = self._step_fb(s)
        k1 = -g * self.ce + (fb * self.ring[self._slot(s - self.K2)] if th else 0.0)
        cep = self.ce + dt * k1
        k2 = -g * cep + (fb * self.ring[self._slot(s + 1 - self.K2)] if th else 0.0)
        self.ce += 0.5 * dt * (k1 + k2)

    def population(self):
        return abs(self.ce) ** 2


class SinglePhoton(_Base):
    """Ground state + one-photon pulse: single element <g,0|sm|g,1>."""

    def __init__(self, params, pulse, grid, engine=None):
        if params.n_photons != 1 or params.initial_state != GROUND_WITH_PULSE:
            raise ValueError("SinglePhoton needs ground_with_pulse and nPhotons = 1")
        super().__init__(params, grid, pulse=pulse, engine=engine)
        self.store = init_elements(params, grid, pulse=pulse)
        self.c01 = complex(self.store.data["sm_g0_g1"])
        self.ring = self.store.rings.get("sm_g0_g1")

    def _apply_jumps(self, s):
        pass

    def _write_rings(self, s):
        self.ring[self._slot(s)] = self.c01

    def _heun(self, s):
        g, dt, rtg = self.g, self.grid.dt, self.rtg
        th, fb = self._step_fb(s)
        k1 = (-g * self.c01 - rtg * self.ftau[s]
              + (fb * self.ring[self._slot(s - self.K2)] if th else 0.0))
        cp = self.c01 + dt * k1
        k2 = (-g * cp - rtg * self.ftau[s + 1]
              + (fb * self.ring[self._slot(s + 1 - self.K2)] if th else 0.0))
        self.c01 += 0.5 * dt * (k1 + k2)

    def population(self):
        return abs(self.c01) ** 2


class TwoPhoton(_Base):
    """Ground state + two-photon pulse: the rank-1 feedback hierarchy.

    Families: sm_g0_g1, sm_g0_e0, sm_e0_g2 (scalars), sm_g0_gt and sm_gt_g2
    (auxiliary-time vectors).  Population by the one-excitation projector sum
    |<e,0|sm|g,2>|^2 + int dt' |<g,t'|sm|g,2>|^2.
    """

    def __init__(self, params, pulse, grid, engine=None, fast_brackets=False):
        if params.n_photons != 2 or params.initial_state != GROUND_WITH_PULSE:
            raise ValueError("TwoPhoton needs ground_with_pulse and nPhotons = 2")
        super().__init__(params, grid, pulse=pulse, engine=engine)
        self.fast_brackets = fast_brackets
        self.rt2g = math.sqrt(2.0 * params.gamma)
        self._setup_aux(init_elements(params, grid, pulse=pulse))
        d = self.store.data
        self.ce = complex(d["sm_g0_e0"])
        self.c01 = 0j
        self.ce2 = 0j
        self.cg = d["sm_g0_gt"]
        self.h2 = d["sm_gt_g2"]
        n = self.n
        self._svec = np.empty(n, dtype=complex)
        self._integrand = np.empty(n, dtype=complex)
        self._kcg = np.empty(n, dtype=complex)
        self._kh2 = np.empty(n, dtype=complex)
        self._pcg = np.empty(n, dtype=complex)
        self._ph2 = np.empty(n, dtype=complex)

    def _apply_jumps(self, s):
        for j, amp in self._train(s):
            self.cg[j] += amp

    def _write_rings(self, s):
        slot = self._slot(s)
        r = self.store.rings
        r["sm_g0_e0"][slot] = self.ce
        r["sm_g0_g1"][slot] = self.c01
        r["sm_e0_g2"][slot] = self.ce2
        r["sm_g0_gt"][slot] = self.cg
        r["sm_gt_g2"][slot] = self.h2

    def _rhs(self, t_idx, theta, fb, ce, c01, ce2, cg, cgq, h2, slot, cg_d, kcg, kh2):
        g, rtg, rt2g = self.g, self.rtg, self.rt2g
        ftau_v = self.ftau[t_idx]
        kce = -g * ce
        kc01 = -g * c01 - rtg * ftau_v
        kce2 = -g * ce2 + 2.0 * rt2g * ftau_v * ce.conjugate() * c01
        np.multiply(cg, -g, out=kcg)
        np.multiply(h2, -g, out=kh2)
        kh2 -= (rt2g * ftau_v) * (self.f_aux - 2.0 * c01 * np.conj(cg))
        if theta:
            r = self.store.rings
            ce_d = complex(r["sm_g0_e0"][slot])
            c01_d = complex(r["sm_g0_g1"][slot])
            ce2_d = complex(r["sm_e0_g2"][slot])
            h2_d = r["sm_gt_g2"][slot]
            np.multiply(cgq, h2_d, out=self._integrand)
            self._integrand *= self.w
            s_scalar = ce * ce2_d + self.eng.pairwise_sum(self._integrand)
            kce += fb * ce_d
            kc01 += fb * c01_d
            kce2 += fb * (ce2_d - 2.0 * ce.conjugate() * s_scalar)
            kcg += fb * cg_d
            if self.fast_brackets:
                kh2 += fb * (h2_d - (2.0 * s_scalar) * np.conj(cg))
            else:
                self.eng.bracket_fill(self._svec, self._integrand)
                self._svec += ce * ce2_d
                kh2 += fb * (h2_d - 2.0 * np.conj(cg) * self._svec)
        return kce, kc01, kce2

    def _heun(self, s):
        dt = self.grid.dt
        th, fb = self._step_fb(s)
        sl1, sl2 = self._slot(s - self.K2), self._slot(s + 1 - self.K2)

        cgq = self._quadrature_view(self.cg, s, arriving=False) if th else self.cg
        cg_d1 = self._delayed_cg(sl1, s - self.K2, arriving=False) if th else None
        k1ce, k1c01, k1ce2 = self._rhs(s, th, fb, self.ce, self.c01, self.ce2,
                                       self.cg, cgq, self.h2, sl1, cg_d1,
                                       self._kcg, self._kh2)
        cep = self.ce + dt * k1ce
        c01p = self.c01 + dt * k1c01
        ce2p = self.ce2 + dt * k1ce2
        np.multiply(self._kcg, dt, out=self._pcg)
        self._pcg += self.cg
        np.multiply(self._kh2, dt, out=self._ph2)
        self._ph2 += self.h2
        # fold k1 into the state, then reuse the k buffers for k2
        self.ce += 0.5 * dt * k1ce
        self.c01 += 0.5 * dt * k1c01
        self.ce2 += 0.5 * dt * k1ce2
        self._kcg *= 0.5 * dt
        self.cg += self._kcg
        self._kh2 *= 0.5 * dt
        self.h2 += self._kh2

        cgq = self._quadrature_view(self._pcg, s + 1, arriving=True) if th else self._pcg
        cg_d2 = self._delayed_cg(sl2, s + 1 - self.K2, arriving=True) if th else None
        k2ce, k2c01, k2ce2 = self._rhs(s + 1, th, fb, cep, c01p, ce2p,
                                       self._pcg, cgq, self._ph2, sl2, cg_d2,
                                       self._kcg, self._kh2)
        self.ce += 0.5 * dt * k2ce
        self.c01 += 0.5 * dt * k2c01
        self.ce2 += 0.5 * dt * k2ce2
        self._kcg *= 0.5 * dt
        self.cg += self._kcg
        self._kh2 *= 0.5 * dt
        self.h2 += self._kh2

    def population(self):
        np.multiply(self.h2, np.conj(self.h2), out=self._integrand)
        self._integrand *= self.w
        return abs(self.ce2) ** 2 + self.eng.pairwise_sum(self._integrand).real


class ThreePhoton(_Base):
    """Ground state + three-photon pulse: rank-2/rank-3 feedback hierarchy.

    On top of the two-photon families this evolves
      sm_e0_et[t'], sm_gt_et[t1,t2], sm_e0_gtt[pair], sm_gt_gtt[t1,pair],
      sm_et_g3[t'], sm_gtt_g3[pair]
    with the population from the two-excitation projector sum
    int dt' |<e,t'|sm|g,3>|^2 + (1/2) iint |<g,t',t''|sm|g,3>|^2.

    In-flight front midpoints are applied to the <g,0|sm|g,t'> quadratures
    (constant impulse amplitudes); the state-dependent impulse fronts of the
    higher families are left one-sided, an O(dt) tail far below the
    three-photon tolerances.
    """

    def __init__(self, params, pulse, grid, engine=None):
        if params.n_photons != 3 or params.initial_state != GROUND_WITH_PULSE:
            raise ValueError("ThreePhoton needs ground_with_pulse and nPhotons = 3")
        super().__init__(params, grid, pulse=pulse, engine=engine)
        self.rt2g = math.sqrt(2.0 * params.gamma)
        self._setup_aux(init_elements(params, grid, pulse=pulse))
        d = self.store.data
        self.ce = complex(d["sm_g0_e0"])
        self.c01 = 0j
        self.ce2 = 0j
        self.cg = d["sm_g0_gt"]
        self.h2 = d["sm_gt_g2"]
        self.EE = d["sm_e0_et"]
        self.CE = d["sm_gt_et"]
        self.A = d["sm_e0_gtt"]
        self.B = d["sm_gt_gtt"]
        self.E3 = d["sm_et_g3"]
        self.G3 = d["sm_gtt_g3"]

        n = self.n
        self.pair_i, self.pair_j, self.wpair = pair_tables(n, self.w)
        self.npair = self.wpair.size
        self.fpair = math.sqrt(2.0) * self.f_aux[self.pair_i] * self.f_aux[self.pair_j]
        self._rowstart = np.array([i * n - (i * (i - 1)) // 2 - i for i in range(n)],
                                  dtype=np.intp)
        self._dummy_bd = np.zeros((1, 1), dtype=np.complex64)
        self._k = self._alloc_block()
        self._p = self._alloc_block()
        self._scr = np.empty(n, dtype=complex)

    def _alloc_block(self):
        n, npair = self.n, self.npair
        return {
            "cg": np.empty(n, complex), "h2": np.empty(n, complex),
            "EE": np.empty(n, complex), "CE": np.empty((n, n), complex),
            "A": np.empty(npair, complex), "B": np.empty((n, npair), complex),
            "E3": np.empty(n, complex), "G3": np.empty(npair, complex),
        }

    def _pair_row(self, J):
        """Pair indices of {J, k} for every node k."""
        k = np.arange(self.n)
        lo = np.minimum(k, J)
        hi = np.maximum(k, J)
        return self._rowstart[lo] + hi

    def _apply_jumps(self, s):
        # Amplitudes of simultaneous impulses take the <g,0|sm|g,t'> field at
        # the branch midpoint of the impulses firing this very instant;
        # otherwise each hook freezes a one-sided front into the deposited
        # profile and every later contraction across it loses an order.
        cg0 = self.cg.copy()
        train = self._train(s)
        for j, amp in train:
            cg0[j] += 0.5 * amp
        ce0 = self.ce
        pe0 = abs(ce0) ** 2
        for J, coef in train:
            self.cg[J] += coef
            self.EE[J] += coef * (1.0 - 2.0 * pe0)
            self.CE[:, J] += (-2.0 * coef * ce0) * np.conj(cg0)
            amp = (-2.0 * coef * ce0.conjugate()) * cg0
            amp[J] *= 2.0
            pids = self._pair_row(J)
            self.A[pids] += amp
            m = coef * (np.diag(1.0 / self.w) - 2.0 * np.outer(np.conj(cg0), cg0))
            m[:, J] *= 2.0
            self.B[:, pids] += m

    def _write_rings(self, s):
        slot = self._slot(s)
        r = self.store.rings
        r["sm_g0_e0"][slot] = self.ce
        r["sm_g0_g1"][slot] = self.c01
        r["sm_e0_g2"][slot] = self.ce2
        r["sm_g0_gt"][slot] = self.cg
        r["sm_gt_g2"][slot] = self.h2
        r["sm_e0_et"][slot] = self.EE
        r["sm_gt_et"][slot] = self.CE
        r["sm_e0_gtt"][slot] = self.A
        r["sm_gt_gtt"][slot] = self.B   # complex64 ring
        r["sm_et_g3"][slot] = self.E3
        r["sm_gtt_g3"][slot] = self.G3

    def _rhs(self, t_idx, theta, fb, st, cgq, slot, cg_d, out):
        """Fill `out` with the stage derivative of state block `st`."""
        g, rtg, rt2g = self.g, self.rtg, self.rt2g
        ftau_v = self.ftau[t_idx]
        ce, c01, ce2 = st["ce"], st["c01"], st["ce2"]
        cg, h2 = st["cg"], st["h2"]

        if theta:
            r = self.store.rings
            ce_d = complex(r["sm_g0_e0"][slot])
            c01_d = complex(r["sm_g0_g1"][slot])
            ce2_d = complex(r["sm_e0_g2"][slot])
            h2_d = r["sm_gt_g2"][slot]
            EE_d = r["sm_e0_et"][slot]
            CE_d = r["sm_gt_et"][slot]
            A_d = r["sm_e0_gtt"][slot]
            B_d = r["sm_gt_gtt"][slot]
            E3_d = r["sm_et_g3"][slot]
            G3_d = r["sm_gtt_g3"][slot]
        else:
            ce_d = c01_d = ce2_d = 0j
            cg_d = h2_d = None
            EE_d, CE_d, A_d, E3_d, G3_d = st["EE"], st["CE"], st["A"], st["E3"], st["G3"]
            B_d = self._dummy_bd

        # n <= 2 subsystem (shared bracket form; negligible next to the rank-3 work)
        kce = -g * ce
        kc01 = -g * c01 - rtg * ftau_v
        kce2 = -g * ce2 + 2.0 * rt2g * ftau_v * ce.conjugate() * c01
        np.multiply(cg, -g, out=out["cg"])
        np.multiply(h2, -g, out=out["h2"])
        out["h2"] -= (rt2g * ftau_v) * (self.f_aux - 2.0 * c01 * np.conj(cg))
        if theta:
            np.multiply(cgq, h2_d, out=self._scr)
            self._scr *= self.w
            s_scalar = ce * ce2_d + self.eng.pairwise_sum(self._scr)
            kce += fb * ce_d
            kc01 += fb * c01_d
            kce2 += fb * (ce2_d - 2.0 * ce.conjugate() * s_scalar)
            out["cg"] += fb * cg_d
            out["h2"] += fb * (h2_d - (2.0 * s_scalar) * np.conj(cg))

        self.eng.n3_stage(
            g, fb / g if theta else 0j, 1 if theta else 0,
            complex(ftau_v), complex(ce), complex(ce2),
            self.w, self.wpair, self.fpair,
            cg, cgq, h2, st["EE"], st["CE"], st["A"], st["B"], st["E3"], st["G3"],
            EE_d, CE_d, A_d, B_d, E3_d, G3_d,
            out["EE"], out["CE"], out["A"], out["B"], out["E3"], out["G3"])
        return kce, kc01, kce2

    def _heun(self, s):
        dt = self.grid.dt
        th, fb = self._step_fb(s)
        sl1, sl2 = self._slot(s - self.K2), self._slot(s + 1 - self.K2)
        names = ("cg", "h2", "EE", "CE", "A", "B", "E3", "G3")

        st = {"ce": self.ce, "c01": self.c01, "ce2": self.ce2,
              "cg": self.cg, "h2": self.h2, "EE": self.EE, "CE": self.CE,
              "A": self.A, "B": self.B, "E3": self.E3, "G3": self.G3}
        cgq = self._quadrature_view(self.cg, s, arriving=False) if th else self.cg
        cg_d1 = self._delayed_cg(sl1, s - self.K2, arriving=False) if th else None
        k1ce, k1c01, k1ce2 = self._rhs(s, th, fb, st, cgq, sl1, cg_d1, self._k)

        pred = {"ce": self.ce + dt * k1ce, "c01": self.c01 + dt * k1c01,
                "ce2": self.ce2 + dt * k1ce2}
        for nm in names:
            np.multiply(self._k[nm], dt, out=self._p[nm])
            self._p[nm] += st[nm]
            pred[nm] = self._p[nm]
        self.ce += 0.5 * dt * k1ce
        self.c01 += 0.5 * dt * k1c01
        self.ce2 += 0.5 * dt * k1ce2
        for nm in names:
            self._k[nm] *= 0.5 * dt
            st[nm] += self._k[nm]

        cgq = self._quadrature_view(pred["cg"], s + 1, arriving=True) if th else pred["cg"]
        cg_d2 = self._delayed_cg(sl2, s + 1 - self.K2, arriving=True) if th else None
        k2ce, k2c01, k2ce2 = self._rhs(s + 1, th, fb, pred, cgq, sl2, cg_d2, self._k)
        self.ce += 0.5 * dt * k2ce
        self.c01 += 0.5 * dt * k2c01
        self.ce2 += 0.5 * dt * k2ce2
        for nm in names:
            self._k[nm] *= 0.5 * dt
            st[nm] += self._k[nm]

    def population(self):
        np.multiply(self.E3, np.conj(self.E3), out=self._scr)
        self._scr *= self.w
        p = self.eng.pairwise_sum(self._scr).real
        g3w = self.wpair * (self.G3.real ** 2 + self.G3.imag ** 2)
        return p + self.eng.pairwise_sum(g3w.astype(complex)).real

    def symmetric_full(self, name="sm_gtt_g3"):
        """Reconstruct the full (t', t'') matrix of a pair-stored family."""
        full = np.zeros((self.n, self.n), dtype=complex)
        vec = {"sm_gtt_g3": self.G3, "sm_e0_gtt": self.A}[name]
        full[self.pair_i, self.pair_j] = vec
        full[self.pair_j, self.pair_i] = vec
        return full


class DephasingVacuum(_Base):
    """Excited emitter in vacuum with pure dephasing: the coherence carries the
    extra decay, the population element evolves with decomposed feedback."""

    def __init__(self, params, grid, engine=None):
        if params.initial_state != EXCITED_VACUUM or params.gamma_pd <= 0:
            raise ValueError("DephasingVacuum needs excited_vacuum and gammaPD > 0")
        super().__init__(params, grid, pulse=None, engine=engine)
        self.store = init_elements(params, grid)
        self.ce = complex(self.store.data["sm_g0_e0"])
        self.pe = float(self.store.data["ee_e0_e0"])
        self.ring = self.store.rings.get("sm_g0_e0")

    def _apply_jumps(self, s):
        pass

    def _write_rings(self, s):
        self.ring[self._slot(s)] = self.ce

    def _rhs(self, theta, fb, ce, pe, slot):
        g, gpd = self.g, self.params.gamma_pd
        kce = -(g + gpd) * ce
        kpe = -2.0 * g * pe
        if theta:
            ce_d = self.ring[slot]
            kce += fb * ce_d
            kpe += 2.0 * (fb.conjugate() * ce_d.conjugate() * ce).real
        return kce, kpe

    def _heun(self, s):
        dt = self.grid.dt
        th, fb = self._step_fb(s)
        k1c, k1p = self._rhs(th, fb, self.ce, self.pe, self._slot(s - self.K2))
        cep, pep = self.ce + dt * k1c, self.pe + dt * k1p
        k2c, k2p = self._rhs(th, fb, cep, pep, self._slot(s + 1 - self.K2))
        self.ce += 0.5 * dt * (k1c + k2c)
        self.pe += 0.5 * dt * (k1p + k2p)

    def population(self):
        return self.pe


class DephasingSinglePhoton(_Base):
    """Single-photon pulse with dephasing: c01 (coherence) + rho1 (population)."""

    def __init__(self, params, pulse, grid, engine=None):
        if params.n_photons != 1 or params.gamma_pd <= 0:
            raise ValueError("DephasingSinglePhoton needs nPhotons = 1 and gammaPD > 0")
        super().__init__(params, grid, pulse=pulse, engine=engine)
        self.store = init_elements(params, grid, pulse=pulse)
        self.c01 = 0j
        self.rho1 = 0.0
        self.ring = self.store.rings.get("sm_g0_g1")

    def _apply_jumps(self, s):
        pass

    def _write_rings(self, s):
        self.ring[self._slot(s)] = self.c01

    def _rhs(self, t_idx, theta, fb, c01, rho1, slot):
        g, gpd, rtg = self.g, self.params.gamma_pd, self.rtg
        ftau_v = self.ftau[t_idx]
        kc = -(g + gpd) * c01 - rtg * ftau_v
        kr = -2.0 * g * rho1 - 2.0 * rtg * (ftau_v.conjugate() * c01).real
        if theta:
            c01_d = self.ring[slot]
            kc += fb * c01_d
            kr += 2.0 * (fb.conjugate() * c01_d.conjugate() * c01).real
        return kc, kr

    def _heun(self, s):
        dt = self.grid.dt
        th, fb = self._step_fb(s)
        k1c, k1r = self._rhs(s, th, fb, self.c01, self.rho1, self._slot(s - self.K2))
        cp, rp = self.c01 + dt * k1c, self.rho1 + dt * k1r
        k2c, k2r = self._rhs(s + 1, th, fb, cp, rp, self._slot(s + 1 - self.K2))
        self.c01 += 0.5 * dt * (k1c + k2c)
        self.rho1 += 0.5 * dt * (k1r + k2r)

    def population(self):
        return self.rho1


class DephasingTwoPhoton(_Base):
    """Two-photon pulse with pure dephasing.

    sigma-minus families (all with the extra -gammaPD): sm_g0_e0, sm_g0_g1,
    sm_g1_g2, sm_e0_g2, sm_g0_gt, sm_gt_g2.  Population-operator families (no
    direct dephasing, feedback from coherence history only): ee_g1_g1,
    ee_g2_g2, ee_e0_e0, ee_e0_g1, ee_e0_gt, ee_g1_gt and the Hermitian rank-2
    ee_gt_gt.  The population is the evolved ee_g2_g2.
    """

    def __init__(self, params, pulse, grid, engine=None):
        if params.n_photons != 2 or params.gamma_pd <= 0:
            raise ValueError("DephasingTwoPhoton needs nPhotons = 2 and gammaPD > 0")
        super().__init__(params, grid, pulse=pulse, engine=engine)
        self.rt2g = math.sqrt(2.0 * params.gamma)
        self._setup_aux(init_elements(params, grid, pulse=pulse))
        d = self.store.data
        self.ce = complex(d["sm_g0_e0"])
        self.c01 = 0j
        self.c12 = 0j
        self.ce2 = 0j
        self.cg = d["sm_g0_gt"]
        self.h2 = d["sm_gt_g2"]
        self.rho1 = 0.0
        self.rho2 = 0.0
        self.pe = float(d["ee_e0_e0"])
        self.Y = 0j                      # <e,0|E|g,1>;  <g,1|E|e,0> = conj(Y)
        self.Z = d["ee_e0_gt"]
        self.Xg = d["ee_g1_gt"]          # <g,1|E|g,t'>; <g,t'|E|g,1> = conj
        self.W2 = d["ee_gt_gt"]          # Hermitian <g,t'|E|g,t''>

    def _apply_jumps(self, s):
        cg0 = self.cg.copy()
        train = self._train(s)
        for j, amp in train:   # simultaneous impulses enter at branch midpoint
            cg0[j] += 0.5 * amp
        ce0, c010 = self.ce, self.c01
        for J, coef in train:
            self.cg[J] += coef
            self.Z[J] += coef * ce0.conjugate()
            self.Xg[J] += coef * c010.conjugate()
            self.W2[J, :] += coef.conjugate() * cg0
            self.W2[:, J] += coef * np.conj(cg0)

    def _write_rings(self, s):
        slot = self._slot(s)
        r = self.store.rings
        for nm, v in (("sm_g0_e0", self.ce), ("sm_g0_g1", self.c01),
                      ("sm_g1_g2", self.c12), ("sm_e0_g2", self.ce2)):
            r[nm][slot] = v
        r["sm_g0_gt"][slot] = self.cg
        r["sm_gt_g2"][slot] = self.h2

    def _rhs(self, t_idx, theta, fb, st, slot, cg_d):
        g, gpd, rtg, rt2g = self.g, self.params.gamma_pd, self.rtg, self.rt2g
        ftau_v = self.ftau[t_idx]
        (ce, c01, c12, ce2, cg, h2, rho1, rho2, pe, Y, Z, Xg, W2) = st

        kce = -(g + gpd) * ce
        kc01 = -(g + gpd) * c01 - rtg * ftau_v
        kc12 = -(g + gpd) * c12 - rt2g * ftau_v * (1.0 - 2.0 * rho1)
        kce2 = -(g + gpd) * ce2 + 2.0 * rt2g * ftau_v * Y
        kcg = -(g + gpd) * cg
        kh2 = -(g + gpd) * h2 - (rt2g * ftau_v) * (self.f_aux - 2.0 * np.conj(Xg))
        krho1 = -2.0 * g * rho1 - 2.0 * rtg * (ftau_v.conjugate() * c01).real
        krho2 = -2.0 * g * rho2 - 2.0 * rt2g * (ftau_v.conjugate() * c12).real
        kpe = -2.0 * g * pe
        kY = -2.0 * g * Y - rtg * ftau_v * ce.conjugate()
        kZ = -2.0 * g * Z
        kXg = -2.0 * g * Xg - rtg * ftau_v.conjugate() * cg
        kW2 = -2.0 * g * W2

        if theta:
            r = self.store.rings
            ce_d = complex(r["sm_g0_e0"][slot])
            c01_d = complex(r["sm_g0_g1"][slot])
            c12_d = complex(r["sm_g1_g2"][slot])
            ce2_d = complex(r["sm_e0_g2"][slot])
            h2_d = r["sm_gt_g2"][slot]
            wh2d = self.w * h2_d
            fbc = fb.conjugate()
            kce += fb * ce_d
            kc01 += fb * c01_d
            kc12 += fb * (c12_d - 2.0 * (Y.conjugate() * ce2_d + np.sum(Xg * wh2d)))
            kce2 += fb * (ce2_d - 2.0 * (pe * ce2_d + np.sum(Z * wh2d)))
            kcg += fb * cg_d
            kh2 += fb * (h2_d - 2.0 * (np.conj(Z) * ce2_d + W2 @ wh2d))
            krho1 += 2.0 * (fbc * c01_d.conjugate() * c01).real
            krho2 += 2.0 * (fbc * (ce2_d.conjugate() * ce2
                                   + np.sum(np.conj(wh2d) * h2))).real
            kpe += 2.0 * (fbc * ce_d.conjugate() * ce).real
            kY += fbc * ce_d.conjugate() * c01 + fb * ce.conjugate() * c01_d
            kZ += fbc * ce_d.conjugate() * cg + fb * ce.conjugate() * cg_d
            kXg += fbc * c01_d.conjugate() * cg + fb * c01.conjugate() * cg_d
            kW2 += fbc * (np.conj(cg_d)[:, None] * cg[None, :])
            kW2 += fb * (np.conj(cg)[:, None] * cg_d[None, :])
        return (kce, kc01, kc12, kce2, kcg, kh2, krho1, krho2, kpe, kY, kZ, kXg, kW2)

    def _state(self):
        return (self.ce, self.c01, self.c12, self.ce2, self.cg, self.h2,
                self.rho1, self.rho2, self.pe, self.Y, self.Z, self.Xg, self.W2)

    def _heun(self, s):
        dt = self.grid.dt
        st = self._state()
        th, fb = self._step_fb(s)
        cg_d1 = self._delayed_cg(self._slot(s - self.K2), s - self.K2, False) if th else None
        k1 = self._rhs(s, th, fb, st, self._slot(s - self.K2), cg_d1)
        pred = tuple(x + dt * k for x, k in zip(st, k1))
        cg_d2 = self._delayed_cg(self._slot(s + 1 - self.K2), s + 1 - self.K2, True) if th else None
        k2 = self._rhs(s + 1, th, fb, pred, self._slot(s + 1 - self.K2), cg_d2)
        new = tuple(x + 0.5 * dt * (a + b) for x, a, b in zip(st, k1, k2))
        (self.ce, self.c01, self.c12, self.ce2, cg_new, h2_new,
         self.rho1, self.rho2, self.pe, self.Y, Z_new, Xg_new, W2_new) = new
        self.cg[:] = cg_new
        self.h2[:] = h2_new
        self.Z[:] = Z_new
        self.Xg[:] = Xg_new
        self.W2[:] = W2_new

    def population(self):
        return self.rho2


def make_integrator(params: SystemParams, pulse, grid: TimeGrid,
                    engine=None, fast_brackets=False):
    """Pick the feedback integrator for (initial state, photon number, dephasing).

    gammaPD = 0 always selects the standard (decomposed-population) path, so
    a zero dephasing rate is bit-identical to never mentioning dephasing.
    """
    deph = params.gamma_pd > 0
    if params.initial_state == EXCITED_VACUUM:
        return DephasingVacuum(params, grid, engine) if deph else VacuumDecay(params, grid, engine)
    n = params.n_photons
    if n == 0:
        raise ValueError("ground state with zero photons has trivial dynamics; nothing to integrate")
    if n == 1:
        return (DephasingSinglePhoton(params, pulse, grid, engine) if deph
                else SinglePhoton(params, pulse, grid, engine))
    if n == 2:
        return (DephasingTwoPhoton(params, pulse, grid, engine) if deph
                else TwoPhoton(params, pulse, grid, engine, fast_brackets=fast_brackets))
    if n == 3:
        if deph:
            raise ValueError("dephasing unsupported at n=3")
        return ThreePhoton(params, pulse, grid, engine)
    raise ValueError("unsupported excitation number")
