"""Normalized Laplacian, its eigendecomposition, and spectral parameters.

A Laplace eigenvalue lam is encoded by z = q^{is}, a root of
z^2 - ((q+1) lam / sqrt(q)) z + 1 = 0, and the transfer eigenvalue
mu = q^{1/2+is} = sqrt(q) z. We store z rather than s so no logarithm
branch is ever chosen.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure
from .graph_core import RegularGraph

TEMPERED = "tempered"
UNTEMPERED = "untempered"
EXCEPTIONAL = "exceptional"
BAND_EDGE = "band_edge"

_CLASS_TOL = 1e-9


@dataclass(frozen=True)
class SpectralParameter:
    lam: complex
    q: int
    z: complex
    mu: complex
    classification: str

    @classmethod
    def from_z(cls, z: complex, q: int) -> "SpectralParameter":
        z = complex(z)
        lam = chi_of(z, q)
        if abs(lam.imag) < 1e-14:
            lam = lam.real
        return cls(lam, q, z, math.sqrt(q) * z, classify(z, q))

    def conjugate_branch(self) -> "SpectralParameter":
        """The other root 1/z of the same quadratic."""
        return SpectralParameter.from_z(1 / self.z, self.q)

    def backward_partner(self) -> "SpectralParameter":
        """Parameter with z' = conj(z), so that -conj(s') = s."""
        return SpectralParameter.from_z(self.z.conjugate(), self.q)

    @property
    def admissible(self) -> bool:
        return self.classification in (TEMPERED, UNTEMPERED)

    def to_json(self) -> dict:
        lam = self.lam
        return {
            "lambda": lam if isinstance(lam, float) else [lam.real, lam.imag],
            "z": [self.z.real, self.z.imag],
            "mu": [self.mu.real, self.mu.imag],
            "classification": self.classification,
        }


@dataclass(frozen=True)
class EigenSpace:
    parameter: SpectralParameter
    multiplicity: int
    basis: np.ndarray  # V x m, orthonormal real columns

    @property
    def lam(self) -> float:
        return float(np.real(self.parameter.lam))


def chi_of(z: complex, q: int) -> complex:
    return complex(math.sqrt(q) / (q + 1) * (z + 1 / z))


def classify(z: complex, q: int, tol: float = _CLASS_TOL) -> str:
    mu = math.sqrt(q) * z
    if min(abs(mu - t) for t in (1, -1, q, -q)) <= tol * q:
        return EXCEPTIONAL
    if abs(z - 1) <= tol or abs(z + 1) <= tol:
        return BAND_EDGE
    if abs(abs(z) - 1) <= tol:
        return TEMPERED
    return UNTEMPERED


def spectral_parameter(lam: float, q: int) -> SpectralParameter:
    """Solve for z with the branch rule: Im z > 0, else |z| >= 1."""
    b = (q + 1) * lam / math.sqrt(q)
    disc = b * b - 4
    if abs(disc) <= 1e-12:
        roots = [complex(b / 2)]
    else:
        r = cmath.sqrt(disc)
        roots = [(b + r) / 2, (b - r) / 2]
    if len(roots) == 2:
        z1, z2 = roots
        if abs(z1.imag) > 1e-14 or abs(z2.imag) > 1e-14:
            z = z1 if z1.imag > 0 else z2
        else:
            z = z1 if abs(z1) >= abs(z2) else z2
            z = complex(z.real)
    else:
        z = roots[0]
    return SpectralParameter(float(lam), q, z, math.sqrt(q) * z, classify(z, q))


def laplace_matrix(g: RegularGraph) -> np.ndarray:
    return g.adjacency() / (g.q + 1)


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Returns eigenvalues ascending and the matching orthonormal eigenvectors.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale * n:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if abs(apr) <= 1e-300:
                    continue
                theta = (a[r, r] - a[p, p]) / (2 * apr)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                ap = a[:, p].copy()
                ar = a[:, r].copy()
                a[:, p] = c * ap - s * ar
                a[:, r] = s * ap + c * ar
                ap = a[p, :].copy()
                ar = a[r, :].copy()
                a[p, :] = c * ap - s * ar
                a[r, :] = s * ap + c * ar
                vp = v[:, p].copy()
                vr = v[:, r].copy()
                v[:, p] = c * vp - s * vr
                v[:, r] = s * vp + c * vr
    else:
        raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh_decompose(g: RegularGraph, group_tol: float = 1e-8) -> list[EigenSpace]:
    """Eigenspaces of the Laplacian, largest eigenvalue first."""
    key = ("eigh", group_tol)
    if key in g._cache:
        return g._cache[key]
    w, vecs = jacobi_eigh(laplace_matrix(g))
    w, vecs = w[::-1], vecs[:, ::-1]
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[i - 1]) > group_tol:
            groups.append((start, i))
            start = i
    spaces = []
    for lo, hi in groups:
        lam = float(np.mean(w[lo:hi]))
        # snap to the exact endpoints so classification is robust
        if abs(lam - 1) < 1e-12:
            lam = 1.0
        elif abs(lam + 1) < 1e-12:
            lam = -1.0
        lam += 0.0
        basis, _ = np.linalg.qr(vecs[:, lo:hi])
        basis = _fix_signs(basis)
        spaces.append(EigenSpace(spectral_parameter(lam, g.q), hi - lo, basis))
    g._cache[key] = spaces
    return spaces


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    out = basis.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def spectrum_report(g: RegularGraph, group_tol: float = 1e-8) -> list[dict]:
    out = []
    for sp in eigh_decompose(g, group_tol):
        rec = {"lambda": sp.lam, "multiplicity": sp.multiplicity}
        p = sp.parameter.to_json()
        rec.update({"z": p["z"], "mu": p["mu"], "classification": p["classification"]})
        out.append(rec)
    return out
