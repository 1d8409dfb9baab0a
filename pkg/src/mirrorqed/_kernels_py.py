"""Numpy fallback for the hot kernels (see _kernels.pyx for the compiled twin).

Semantics match the compiled kernels exactly up to floating-point
reassociation: numpy's pairwise summation replaces the leaf-8 pairwise tree,
and the three-photon contractions run through matmul instead of streamed
row loops.  Everything is deterministic for a fixed build and thread count.
"""

from __future__ import annotations

import numpy as np


def pairwise_sum(x: np.ndarray) -> complex:
    """Deterministic pairwise reduction of a complex vector."""
    return complex(np.sum(x))


def bracket_fill(out: np.ndarray, integrand: np.ndarray) -> None:
    """Per-element feedback bracket: out[i] = sum(integrand) for every i.

    The bracket value of a rank-1 family is the same auxiliary-time integral
    for every matrix element; this fallback computes it once and broadcasts,
    which is bit-identical to the compiled kernel's per-element evaluation
    (same reduction on the same operands, repeated).
    """
    out[:] = np.sum(integrand)


def n3_stage(
    gamma: float,
    eiphi: complex,
    theta: int,
    ftau: complex,
    ce: complex,
    ce2: complex,
    w: np.ndarray,            # trapezoid weights, (n,)
    wpair: np.ndarray,        # symmetric-pair weights, (np_,)
    fpair: np.ndarray,        # sqrt(2) f(t') f(t'') on pairs, (np_,)
    cg: np.ndarray,           # <g,0|sm|g,t'>, (n,)
    cgq: np.ndarray,          # same field, front nodes at branch midpoints (quadratures)
    h2: np.ndarray,           # <g,t'|sm|g,2>, (n,)
    EE: np.ndarray,           # <e,0|sm|e,t'>, (n,)
    CE: np.ndarray,           # <g,t1|sm|e,t2>, (n, n)
    A: np.ndarray,            # <e,0|sm|g,t',t''>, (np_,)
    B: np.ndarray,            # <g,t1|sm|g,t',t''>, (n, np_)
    E3: np.ndarray,           # <e,t'|sm|g,3>, (n,)
    G3: np.ndarray,           # <g,t',t''|sm|g,3>, (np_,)
    EE_d, CE_d, A_d, B_d, E3_d, G3_d,   # same families delayed by tau (B_d may be complex64)
    dEE, dCE, dA, dB, dE3, dG3,         # outputs
    scratch=None,
) -> None:
    """One RHS evaluation of the three-photon family block.

    The n<=2 families (ce, c01, ce2, cg, h2) are advanced by the driver; they
    enter here only as sources.  Shared brackets are evaluated once per call:

      V[t2]  = ce*EE_d[t2] + int dt1 cg[t1] CE_d[t1,t2]
      Q[p]   = ce*A_d[p]   + int dt1 cg[t1] B_d[t1,p]
      U      = int dt2 EE[t2] E3_d[t2] + (1/2) iint A G3_d
      Wg[t1] = int dt2 CE[t1,t2] E3_d[t2] + (1/2) iint B[t1] G3_d
    """
    g = gamma
    rt3g = np.sqrt(3.0 * g)
    wcg = w * cgq
    fb = theta * g * eiphi

    if theta:
        V = ce * EE_d + wcg @ CE_d
        Q = ce * A_d + wcg @ B_d
        U = complex(np.sum(w * EE * E3_d) + np.sum(wpair * A * G3_d))
        Wg = CE @ (w * E3_d) + B @ (wpair * G3_d)
    else:
        V = None
        Q = None
        U = 0j
        Wg = None

    np.multiply(EE, -g, out=dEE)
    np.multiply(CE, -g, out=dCE)
    np.multiply(A, -g, out=dA)
    np.multiply(B, -g, out=dB)
    if theta:
        dEE += fb * (EE_d - 2.0 * np.conj(ce) * V)
        dCE += fb * (CE_d - 2.0 * np.outer(np.conj(cg), V))
        dA += fb * (A_d - 2.0 * np.conj(ce) * Q)
        dB += fb * B_d
        dB -= (2.0 * fb) * (np.conj(cg)[:, None] * Q[None, :])

    # e-branch of the three-photon element
    col_h2 = np.conj(np.conj(w * h2) @ CE)          # int dt1 w h2* ... conj trick, no CE copy
    np.multiply(E3, -g, out=dE3)
    dE3 += (2.0 * rt3g * ftau) * (np.conj(EE) * ce2 + col_h2)
    if theta:
        col_W = np.conj(np.conj(w * Wg) @ CE)
        dE3 += fb * (E3_d - 2.0 * (np.conj(EE) * U + col_W))

    # g-branch (rank-2) element
    np.multiply(G3, -g, out=dG3)
    dG3 -= (rt3g * ftau) * fpair
    dG3 += (2.0 * rt3g * ftau * ce2) * np.conj(A)
    R = (2.0 * rt3g * ftau) * (w * h2)
    if theta:
        dG3 += fb * (G3_d - 2.0 * U * np.conj(A))
        R = R - (2.0 * fb) * (w * Wg)
    dG3 += np.conj(np.conj(R) @ B)
