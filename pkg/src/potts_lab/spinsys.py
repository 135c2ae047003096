"""
Model specification for q-spin systems.

A model is a symmetric nonnegative q x q interaction matrix.  The signature
(ferromagnetic / antiferromagnetic / indefinite) is read off the eigenvalues,
and ferromagnetic matrices carry a Cholesky factor used by the matrix-norm
machinery.  This module also owns the simplex/phase vocabulary shared by the
rest of the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

MAX_Q = 32

# eigenvalues below this magnitude count as zero -> indefinite
ZERO_EIGENVALUE_TOL = 1e-10


class SizeGuardError(RuntimeError):
    """Raised when an exact computation would exceed its instance-size guard."""


class Signature(str, Enum):
    FERROMAGNETIC = "ferromagnetic"
    ANTIFERROMAGNETIC = "antiferromagnetic"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class InteractionMatrix:
    """Symmetric nonnegative q x q interaction matrix with derived attributes."""

    q: int
    entries: np.ndarray
    signature: Signature
    ergodic: bool

    def cholesky(self) -> np.ndarray:
        return cholesky_factor(self)

    def to_json(self) -> dict:
        return {"q": self.q, "entries": self.entries.tolist()}


@dataclass(frozen=True)
class Phase:
    """A point of the (q-1)-simplex together with its exponent and flags."""

    alpha: np.ndarray
    psi1: float = float("nan")
    hessian_eigen: tuple = ()
    local_max: bool = False
    hessian_local_max: bool = False
    dominant: bool = False
    hessian_dominant: bool = False

    @property
    def q(self) -> int:
        return len(self.alpha)


def _support_components(support: np.ndarray) -> list[set[int]]:
    q = support.shape[0]
    seen = [False] * q
    comps = []
    for s in range(q):
        if seen[s]:
            continue
        comp, stack = {s}, [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            for w in np.nonzero(support[v])[0]:
                if not seen[w]:
                    seen[w] = True
                    comp.add(int(w))
                    stack.append(int(w))
        comps.append(comp)
    return comps


def _is_ergodic(entries: np.ndarray) -> bool:
    # irreducible: support graph connected; aperiodic: support graph is
    # non-bipartite once loops (positive diagonal) are counted as odd cycles
    support = entries > 0
    if len(_support_components(support)) != 1:
        return False
    if np.any(np.diag(support)):
        return True
    # 2-color the loopless support graph; failure means an odd cycle exists
    q = entries.shape[0]
    color = [-1] * q
    color[0] = 0
    stack = [0]
    while stack:
        v = stack.pop()
        for w in np.nonzero(support[v])[0]:
            if w == v:
                continue
            if color[w] == -1:
                color[w] = 1 - color[v]
                stack.append(int(w))
            elif color[w] == color[v]:
                return True
    return False


def _signature_of(entries: np.ndarray) -> Signature:
    w = np.linalg.eigvalsh(entries)
    if np.any(np.abs(w) < ZERO_EIGENVALUE_TOL):
        return Signature.INDEFINITE
    if np.all(w > 0):
        return Signature.FERROMAGNETIC
    # Perron-Frobenius: the top eigenvalue of a nonnegative matrix is >= 0
    if w[-1] > 0 and np.all(w[:-1] < 0):
        return Signature.ANTIFERROMAGNETIC
    return Signature.INDEFINITE


def interaction_matrix(entries) -> InteractionMatrix:
    """Validate a raw matrix and wrap it with signature and ergodicity flags."""
    entries = np.array(entries, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError("interaction matrix must be square")
    q = entries.shape[0]
    if q < 2:
        raise ValueError("need q >= 2 spins")
    if q > MAX_Q:
        raise ValueError(f"q = {q} exceeds the supported maximum {MAX_Q}")
    if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12):
        raise ValueError("interaction matrix must be symmetric")
    if np.any(entries < 0):
        raise ValueError("interaction matrix entries must be nonnegative")
    entries = (entries + entries.T) / 2.0
    entries.flags.writeable = False
    return InteractionMatrix(
        q=q,
        entries=entries,
        signature=_signature_of(entries),
        ergodic=_is_ergodic(entries),
    )


def build_potts_matrix(q: int, B: float) -> InteractionMatrix:
    """Potts interaction: B on the diagonal, 1 off the diagonal.

    Eigenvalues are B-1 (multiplicity q-1) and B+q-1, so the model is
    ferromagnetic exactly when B > 1.
    """
    if q < 2:
        raise ValueError("need q >= 2 spins")
    if not B > 0:
        raise ValueError("Potts activity B must be positive")
    entries = np.ones((q, q)) + (B - 1.0) * np.eye(q)
    return interaction_matrix(entries)


def classify_signature(model: InteractionMatrix) -> Signature:
    """Signature of an ergodic model; rejects non-symmetric or non-ergodic input."""
    if isinstance(model, np.ndarray):
        model = interaction_matrix(model)
    if not model.ergodic:
        raise ValueError(
            "interaction matrix is not ergodic (reducible or 2-periodic support); "
            "decompose into irreducible blocks before classifying"
        )
    return model.signature


def cholesky_factor(model: InteractionMatrix) -> np.ndarray:
    """Upper-triangular Bhat with Bhat^T Bhat equal to the interaction matrix."""
    if model.signature is not Signature.FERROMAGNETIC:
        raise ValueError("Cholesky factor requires a positive definite (ferromagnetic) matrix")
    # numpy returns the lower factor L with L L^T = B; its transpose is the
    # canonical upper-triangular Bhat
    return np.linalg.cholesky(model.entries).T


def _check_simplex(z, q: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (q,):
        raise ValueError(f"expected a length-{q} vector")
    if np.any(z < 0):
        raise ValueError("simplex vector must be nonnegative")
    if abs(z.sum() - 1.0) > 1e-9:
        raise ValueError("simplex vector must have unit 1-norm")
    return z


def ferro_alignment_check(model: InteractionMatrix, z1, z2) -> bool:
    """Whether (z1' B z1)(z2' B z2) >= (z1' B z2)^2, the alignment direction
    that characterizes ferromagnetic interactions."""
    z1 = _check_simplex(z1, model.q)
    z2 = _check_simplex(z2, model.q)
    B = model.entries
    lhs = float(z1 @ B @ z1) * float(z2 @ B @ z2)
    rhs = float(z1 @ B @ z2) ** 2
    return lhs - rhs >= -1e-12 * max(1.0, abs(lhs), abs(rhs))


def model_from_json(obj) -> InteractionMatrix:
    """Build a model from {"q", "entries"} or the {"potts": {"q", "B"}} shorthand."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if "potts" in obj:
        spec = obj["potts"]
        return build_potts_matrix(int(spec["q"]), float(spec["B"]))
    entries = np.array(obj["entries"], dtype=float)
    if "q" in obj and int(obj["q"]) != entries.shape[0]:
        raise ValueError("declared q does not match the entries shape")
    return interaction_matrix(entries)


def load_model(path) -> InteractionMatrix:
    with open(path) as fh:
        return model_from_json(json.load(fh))
