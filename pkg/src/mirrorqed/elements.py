"""Matrix-element storage for the single-time hierarchy.

Naming scheme for families (what each element IS, bra_ket):

    sm_<bra>_<ket>   element of the lowering operator,  <bra| sm(t) |ket>
    ee_<bra>_<ket>   element of the population operator <bra| sp sm (t) |ket>

with state tags  g0, e0, g1, g2, g3  (TLS state + photon number in the pulse
mode),  gt  (ground + one reservoir photon at an auxiliary time),  et
(excited + one reservoir photon),  gtt  (ground + two reservoir photons).
Rank counts auxiliary-time indices: gt/et contribute one, gtt contributes a
symmetric pair stored on t' <= t'' with pair weights absorbing the 1/2!.

Hermitian partners are never stored; "+H.c." terms are built by conjugation.

Every family that appears inside a delayed term keeps a ring buffer of
exactly 2*k_half_tau + 1 past steps.  Rings are allocated only when the run
actually reaches t = tau (n_steps >= 2*k_half_tau); either way the memory is
known before stepping starts and is exposed by ``report``.  The dominant
three-photon ring (rank 3) is kept in single precision: it feeds only
feedback integrals with tolerances far above 1e-7.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import TimeGrid
from .system import EXCITED_VACUUM, SystemParams

__all__ = ["Family", "ElementStore", "init_elements", "pair_tables"]


@dataclass(frozen=True)
class Family:
    name: str
    rank: int
    shape: tuple
    itemsize: int          # bytes per element (current value)
    ring_depth: int        # 0 when no history is kept
    ring_itemsize: int

    @property
    def elements(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    @property
    def nbytes(self) -> int:
        return self.elements * (self.itemsize + self.ring_depth * self.ring_itemsize)


def pair_tables(n_aux: int, weights: np.ndarray):
    """Index and weight tables for symmetric pairs (i <= j) of auxiliary times.

    Returns (pair_i, pair_j, wpair) with wpair = w_i w_j off the diagonal and
    w_i^2 / 2 on it, so that sum(wpair * X_pair) equals (1/2) iint X dt' dt''
    for symmetric X.
    """
    i, j = np.triu_indices(n_aux)
    wpair = weights[i] * weights[j]
    wpair[i == j] *= 0.5
    return i.astype(np.intp), j.astype(np.intp), wpair


class AuxGrid:
    """Auxiliary-time axis with static discontinuities split into node pairs.

    The element fields are only piecewise smooth in t': the outgoing-impulse
    train leaves a permanent branch cut at t' = tau/2 (labels below it had
    their incoming pass before t = 0), and a discontinuous pulse leaves cuts
    at its edges.  A trapezoid rule across a one-sided node value there is
    first order, which would poison every auxiliary-time integral.  Each
    grid-aligned cut is therefore represented by TWO nodes at the same time,
    holding the one-sided values, with half weights; quadratures then stay
    second order and the kernels never notice (they only see value/weight
    arrays).

    Layout: entries 0..n_base-1 are the plain grid (the base slot of a split
    node holds the LOWER branch); the upper copies are appended at the end.
    """

    def __init__(self, grid, pulse, tau: float):
        from . import pulses as _pulses

        n_base = grid.n_aux
        dt = grid.dt
        K2 = 2 * grid.k_half_tau
        times = list(grid.aux_times())
        w = [dt] * n_base
        w[0] = w[-1] = 0.5 * dt

        cuts = []
        if tau > 0 and K2 < n_base:
            cuts.append(K2)
        edges = []
        if pulse is not None:
            if pulse.kind == "rectangular":
                edges = [pulse.t0, pulse.t0 + pulse.tD]
            elif pulse.kind == "exponential":
                edges = [pulse.t0]
        for e in edges:
            pos = (e - grid.aux_min) / dt
            b = int(round(pos))
            if abs(pos - b) < 1e-9 and 0 < b < n_base - 1 and b not in cuts:
                cuts.append(b)
        cuts.sort()

        self.n_base = n_base
        self.upper_of = {}
        f_lo = _pulses.evaluate_many(pulse, np.asarray(times)) if pulse is not None \
            else np.zeros(n_base, dtype=complex)
        f = list(f_lo)
        for b in cuts:
            self.upper_of[b] = len(times)
            times.append(times[b])
            w[b] = 0.5 * dt
            w.append(0.5 * dt)
            lo, hi = self._pulse_sides(pulse, times[b], _pulses)
            f[b] = lo
            f.append(hi)

        self.times = np.asarray(times)
        self.w = np.asarray(w)
        self.f = np.asarray(f, dtype=complex)
        self.n = len(times)

    @staticmethod
    def _pulse_sides(pulse, t, _pulses):
        if pulse is None:
            return 0j, 0j
        eps = 1e-7
        return (_pulses.evaluate(pulse, t - eps), _pulses.evaluate(pulse, t + eps))

    def targets(self, base_idx: int, first_step: bool, outgoing: bool):
        """Extended indices an impulse at base node `base_idx` lands on.

        The t = 0 member of the outgoing train is the branch cut itself: it
        acts only on the upper copy (labels at tau/2 - 0 never fired).  Later
        impulses act on the physical component, i.e. on every copy.
        """
        up = self.upper_of.get(base_idx)
        if up is None:
            return (base_idx,)
        if first_step and outgoing:
            return (up,)
        return (base_idx, up)


def n_pairs(n_aux: int) -> int:
    return n_aux * (n_aux + 1) // 2


class ElementStore:
    """Allocated element families plus delay history for one scenario."""

    def __init__(self, params: SystemParams, grid: TimeGrid, families: list[Family],
                 flops_per_step: float, aux: "AuxGrid | None" = None):
        self.params = params
        self.grid = grid
        self.aux = aux
        self.families = families
        self.flops_per_step = flops_per_step
        self.data: dict[str, object] = {}
        self.rings: dict[str, np.ndarray] = {}
        for fam in families:
            if fam.rank == 0:
                self.data[fam.name] = 0j if fam.itemsize == 16 else 0.0
            else:
                dtype = np.complex128 if fam.itemsize == 16 else np.complex64
                self.data[fam.name] = np.zeros(fam.shape, dtype=dtype)
            if fam.ring_depth:
                rdtype = np.complex128 if fam.ring_itemsize == 16 else np.complex64
                self.rings[fam.name] = np.zeros((fam.ring_depth,) + fam.shape, dtype=rdtype)

    @property
    def element_count(self) -> int:
        return sum(f.elements for f in self.families)

    @property
    def memory_bytes(self) -> int:
        return sum(f.nbytes for f in self.families)

    def report(self) -> dict:
        return {
            "families": [
                {"name": f.name, "rank": f.rank, "shape": list(f.shape),
                 "elements": f.elements, "ring_depth": f.ring_depth, "bytes": f.nbytes}
                for f in self.families
            ],
            "element_count": self.element_count,
            "memory_bytes": self.memory_bytes,
            "flops_per_step": self.flops_per_step,
            "n_aux": self.grid.n_aux,
            "n_aux_split": self.aux.n if self.aux is not None else self.grid.n_aux,
        }


def _rank0(name, ring_depth=0, real=False) -> Family:
    size = 8 if real else 16
    return Family(name, 0, (), size, ring_depth, 16)


def _vec(name, n, ring_depth=0) -> Family:
    return Family(name, 1, (n,), 16, ring_depth, 16)


def init_elements(params: SystemParams, grid: TimeGrid, model: str = "feedback",
                  pulse=None) -> ElementStore:
    """Allocate exactly the families the scenario needs, with initial values.

    Initial values follow from sm(0)|g,...> = 0 and sm(0)|e,X> = |g,X>:
    every element with a ground-state ket starts at zero, <g,0|sm(0)|e,0> = 1,
    and <g,t1|sm(0)|e,t2> = delta(t1 - t2) (Kronecker over weight on the grid).
    """
    if params.n_photons > 3:
        raise ValueError("unsupported excitation number")
    aux = AuxGrid(grid, pulse, params.tau)
    n = aux.n
    K = grid.k_half_tau
    feedback = model == "feedback"
    depth = 2 * K + 1 if (feedback and grid.n_steps >= 2 * K and params.tau > 0) else 0
    deph = params.gamma_pd > 0

    fams: list[Family] = []
    flops = 30.0

    if model in ("nofeedback", "flat"):
        for k in range(1, params.n_photons + 1):
            fams.append(_rank0(f"sm_g{k - 1}_g{k}"))
            fams.append(_rank0(f"ee_g{k}_g{k}", real=True))
        if params.initial_state == EXCITED_VACUUM:
            fams.append(_rank0("sm_g0_e0"))
        store = ElementStore(params, grid, fams, flops, aux)
        if params.initial_state == EXCITED_VACUUM:
            store.data["sm_g0_e0"] = 1.0 + 0j
        return store

    if params.initial_state == EXCITED_VACUUM:
        fams.append(_rank0("sm_g0_e0", depth))
        if deph:
            fams.append(_rank0("ee_e0_e0", real=True))
        store = ElementStore(params, grid, fams, flops, aux)
        store.data["sm_g0_e0"] = 1.0 + 0j
        if deph:
            store.data["ee_e0_e0"] = 1.0
        return store

    # ground state + n-photon pulse
    if params.n_photons >= 1:
        fams.append(_rank0("sm_g0_g1", depth))
        if deph:
            fams.append(_rank0("ee_g1_g1", real=True))
    if params.n_photons >= 2:
        fams.append(_rank0("sm_g0_e0", depth))
        fams.append(_rank0("sm_e0_g2", depth))
        fams.append(_vec("sm_g0_gt", n, depth))
        fams.append(_vec("sm_gt_g2", n, depth))
        flops = 16.0 * n * n
        if deph:
            fams.append(_rank0("sm_g1_g2", depth))
            fams.append(_rank0("ee_g2_g2", real=True))
            fams.append(_rank0("ee_e0_e0", real=True))
            fams.append(_rank0("ee_e0_g1"))
            fams.append(_vec("ee_e0_gt", n))
            fams.append(_vec("ee_g1_gt", n))
            fams.append(Family("ee_gt_gt", 2, (n, n), 16, 0, 16))
    if params.n_photons == 3:
        npair = n_pairs(n)
        fams.append(_vec("sm_e0_et", n, depth))
        fams.append(Family("sm_gt_et", 2, (n, n), 16, depth, 16))
        fams.append(Family("sm_e0_gtt", 2, (npair,), 16, depth, 16))
        fams.append(Family("sm_gt_gtt", 3, (n, npair), 16, depth, 8))  # ring complex64
        fams.append(_vec("sm_et_g3", n, depth))
        fams.append(Family("sm_gtt_g3", 2, (npair,), 16, depth, 16))
        flops = 70.0 * float(n) * npair

    store = ElementStore(params, grid, fams, flops, aux)
    if params.n_photons >= 2:
        store.data["sm_g0_e0"] = 1.0 + 0j
        if deph:
            store.data["ee_e0_e0"] = 1.0
    if params.n_photons == 3:
        ce_mat = store.data["sm_gt_et"]
        idx = np.arange(n)
        ce_mat[idx, idx] = 1.0 / aux.w
    return store
