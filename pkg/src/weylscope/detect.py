"""Detection subspaces, bordered resolvents and contour analyticity tests.

Two families of state-space subspaces are attached to a restriction: the
span of its solution-operator ranges over resolvent points ("solution
space") and the span of resolvent-smoothed ranges anchored at a fixed
point ("resolvent space").  Their closures coincide and are the part of
the state space that the M-function can see; compressing the resolvent
between the adjoint-side and primary-side spaces removes the spectrum the
M-function is blind to, which is what the contour (Morera-style) residuals
check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContourHitsSpectrumError, SampleInSpectrumError
from .numerics import (
    ContourSpec,
    contour_integral,
    matrix_norm2,
    orthonormal_basis,
)
from .triples import (
    Extension,
    adjoint_extension,
    extension_eigenvalues,
    resolvent_matrices,
    solution_basis,
)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
SPECTRUM_CLEARANCE = 1e-6


@dataclass(frozen=True)
class SpaceSamplingSpec:
    """Sampling plan for the detection subspaces.

    anchor is the fixed resolvent point the smoothed space is built from;
    resolvent_samples feed the smoothed space, solution_samples the plain
    solution span.  All points must keep clear of the spectrum.
    """

    anchor: complex
    resolvent_samples: tuple = field(default_factory=tuple)
    solution_samples: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning one detection space, with its provenance."""

    basis: np.ndarray
    side: str  # 'solution' | 'resolvent' | 'solution-adjoint' | 'resolvent-adjoint'
    spec: SpaceSamplingSpec

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _check_samples(ext: Extension, points, what: str):
    eigs = extension_eigenvalues(ext)
    if eigs.size == 0:
        return
    for z in points:
        if np.min(np.abs(eigs - z)) <= SPECTRUM_CLEARANCE:
            raise SampleInSpectrumError(f"{what} point {z} is within 1e-6 of the spectrum")


def default_sampling(ext: Extension, n_per_circle: int = 12, extra: int = 0) -> SpaceSamplingSpec:
    """Deterministic sampling plan: points on two circles enclosing the spectrum.

    Golden-angle placement keeps added points from aliasing.  extra appends
    more points (used by the saturation loop).
    """
    eigs = extension_eigenvalues(ext)
    if eigs.size:
        center = complex(np.mean(eigs))
        spread = float(np.max(np.abs(eigs - center)))
    else:
        center, spread = 0.0, 0.0
    radii = (spread + 1.0, 2.0 * (spread + 1.0))
    pts = []
    total = 2 * n_per_circle + extra
    for j in range(total):
        r = radii[j % 2]
        ang = GOLDEN_ANGLE * j
        z = center + r * np.exp(1j * ang)
        if eigs.size:
            bump = 0
            while np.min(np.abs(eigs - z)) <= 10 * SPECTRUM_CLEARANCE and bump < 50:
                ang += 1e-3
                z = center + r * np.exp(1j * ang)
                bump += 1
        pts.append(complex(z))
    anchor = complex(center + 1.37j * radii[1])
    if eigs.size and np.min(np.abs(eigs - anchor)) <= 10 * SPECTRUM_CLEARANCE:
        anchor = complex(center + 1.61j * radii[1])
    return SpaceSamplingSpec(
        anchor=anchor, resolvent_samples=tuple(pts), solution_samples=tuple(pts)
    )


def build_solution_space(ext: Extension, spec: SpaceSamplingSpec, tol: float = 1e-10) -> SubspaceBasis:
    """Orthonormal basis of the span of solution-operator ranges over the samples."""
    _check_samples(ext, spec.solution_samples, "solution sample")
    _check_samples(ext, (spec.anchor,), "anchor")
    tr = ext.triple
    blocks = [tr.values(solution_basis(ext, mu)) for mu in spec.solution_samples]
    cols = np.hstack(blocks) if blocks else np.zeros((tr.state_dim, 0), dtype=complex)
    return SubspaceBasis(basis=orthonormal_basis(cols, tol), side="solution", spec=spec)


def build_resolvent_space(ext: Extension, spec: SpaceSamplingSpec, tol: float = 1e-10) -> SubspaceBasis:
    """Basis of the span of resolvent images of the anchor solution range."""
    _check_samples(ext, spec.resolvent_samples, "resolvent sample")
    _check_samples(ext, (spec.anchor,), "anchor")
    tr = ext.triple
    anchor_vals = tr.values(solution_basis(ext, spec.anchor))
    blocks = []
    for delta in spec.resolvent_samples:
        _, rv = resolvent_matrices(ext, delta)
        blocks.append(rv @ anchor_vals)
    cols = np.hstack(blocks) if blocks else np.zeros((tr.state_dim, 0), dtype=complex)
    return SubspaceBasis(basis=orthonormal_basis(cols, tol), side="resolvent", spec=spec)


def build_adjoint_spaces(ext: Extension, spec: SpaceSamplingSpec, tol: float = 1e-10):
    """(resolvent-adjoint, solution-adjoint) bases from the adjoint-side restriction.

    The adjoint side is sampled at the conjugated points, which avoid the
    conjugated spectrum exactly when the original points avoid the spectrum.
    """
    adj = adjoint_extension(ext)
    conj_spec = SpaceSamplingSpec(
        anchor=np.conj(spec.anchor),
        resolvent_samples=tuple(np.conj(z) for z in spec.resolvent_samples),
        solution_samples=tuple(np.conj(z) for z in spec.solution_samples),
    )
    s_adj = build_resolvent_space(adj, conj_spec, tol)
    t_adj = build_solution_space(adj, conj_spec, tol)
    return (
        SubspaceBasis(basis=s_adj.basis, side="resolvent-adjoint", spec=conj_spec),
        SubspaceBasis(basis=t_adj.basis, side="solution-adjoint", spec=conj_spec),
    )


def saturated_sampling(ext: Extension, start: int = 12, stable_runs: int = 8,
                       max_points: int = 200, tol: float = 1e-10) -> SpaceSamplingSpec:
    """Grow the sampling plan until the solution-span rank is stable.

    Points are added one at a time; the plan is accepted once the rank has
    not moved for stable_runs consecutive additions.
    """
    tr = ext.triple
    spec = default_sampling(ext, n_per_circle=start // 2)
    cols = np.hstack(
        [tr.values(solution_basis(ext, mu)) for mu in spec.solution_samples]
    )
    rank = orthonormal_basis(cols, tol).shape[1]
    stable = 0
    extra = 0
    while stable < stable_runs and len(spec.solution_samples) < max_points:
        extra += 1
        grown = default_sampling(ext, n_per_circle=start // 2, extra=extra)
        new_pt = grown.solution_samples[-1]
        cols = np.hstack([cols, tr.values(solution_basis(ext, new_pt))])
        new_rank = orthonormal_basis(cols, tol).shape[1]
        stable = stable + 1 if new_rank == rank else 0
        rank = new_rank
        spec = grown
    return spec


def invariance_residual(space: SubspaceBasis, ext: Extension, mu: complex) -> float:
    """Defect of resolvent invariance: |(I - P) R(mu) P| for the space's projector."""
    q = space.basis
    _, rv = resolvent_matrices(ext, mu)
    if q.shape[1] == 0:
        return 0.0
    rp = rv @ q
    return float(np.linalg.norm(rp - q @ (q.conj().T @ rp), 2))


def bordered_resolvent(ext: Extension, lam: complex, left: SubspaceBasis,
                       right: SubspaceBasis) -> np.ndarray:
    """Resolvent compressed between the adjoint-side and primary-side bases."""
    _, rv = resolvent_matrices(ext, lam)
    return left.basis.conj().T @ rv @ right.basis


def morera_residual(ext: Extension, contour: ContourSpec, left: SubspaceBasis,
                    right: SubspaceBasis, clearance: float = 1e-4) -> float:
    """Norm of the contour integral of the bordered resolvent.

    Vanishes (geometrically in the node count) exactly when the bordered
    resolvent is analytic inside the contour; contour nodes must keep a
    clearance from the spectrum.
    """
    eigs = extension_eigenvalues(ext)
    if eigs.size:
        for z in contour.points():
            if np.min(np.abs(eigs - z)) <= clearance:
                raise ContourHitsSpectrumError(
                    f"contour node {z} within {clearance} of the spectrum"
                )
    val = contour_integral(lambda z: bordered_resolvent(ext, z, left, right), contour)
    if np.asarray(val).size == 0:
        return 0.0
    return float(np.linalg.norm(val, 2))


def full_contour_integral(ext: Extension, contour: ContourSpec) -> np.ndarray:
    """Contour integral of the uncompressed state-space resolvent."""
    return contour_integral(lambda z: resolvent_matrices(ext, z)[1], contour)


def spectral_projection(ext: Extension, contour: ContourSpec) -> np.ndarray:
    """Oracle projection onto the eigenspaces enclosed by the contour.

    Built from the dense eigendecomposition of the restriction, independent
    of any contour quadrature.
    """
    from .triples import extension_operator

    op = extension_operator(ext)
    vals, vecs = np.linalg.eig(op)
    inside = np.abs(vals - contour.center) < contour.radius
    if not np.any(inside):
        return np.zeros_like(op)
    v_in = vecs[:, inside]
    wl = np.linalg.inv(vecs)[inside, :]
    return v_in @ wl


def detection_report(ext: Extension, contour: ContourSpec, left: SubspaceBasis,
                     right: SubspaceBasis, triple_id: str = "triple") -> dict:
    """JSON-ready record comparing bordered and full contour residuals."""
    bordered = morera_residual(ext, contour, left, right)
    full = float(matrix_norm2(full_contour_integral(ext, contour)))
    return {
        "triple_id": triple_id,
        "contour": {
            "center": [contour.center.real, contour.center.imag],
            "radius": contour.radius,
            "nodes": contour.nodes,
        },
        "residual_bordered": bordered,
        "residual_full": full,
        "dims": {
            "S": right.dim if right.side.startswith("resolvent") else None,
            "T": right.dim if right.side.startswith("solution") else None,
            "Sadj": left.dim if left.side.startswith("resolvent") else None,
            "Tadj": left.dim if left.side.startswith("solution") else None,
        },
    }
