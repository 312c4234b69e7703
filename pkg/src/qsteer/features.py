"""Feature maps from two-qubit states to real vectors.

Four nested summaries of a state, ordered by decreasing information
content:

* F1 (15 reals): the first three diagonal entries plus real and
  imaginary parts of the six strictly-lower-triangle entries, row
  major.  Together with the unit trace these determine the state
  exactly.
* F2 (9 reals): the two-body correlation matrix tau_kl =
  Tr[(sigma_k x sigma_l) rho], row major over k, l in {x, y, z}.
* F3 (9 reals): F2 evaluated on the canonical form of the state, a
  Bob-side congruence that does not change whether Alice can steer
  Bob.  F3 uses the marginal-whitening variant (Bob's marginal becomes
  maximally mixed), which strips the locally-reversible part of Bob's
  data out of the correlations.  Measurable with three fixed
  directions per party.
* F4 (6 reals): F3 with the below-diagonal correlation coefficients
  (y,x), (z,x), (z,y) dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qsteer.states import (LOWER_TRIANGLE, matrix_inv_sqrt_psd,
                           matrix_sqrt_psd, partial_trace_a, pauli_decompose,
                           validate_state)

FEATURE_KINDS = ("F1", "F2", "F3", "F4")
FEATURE_LENGTHS = {"F1": 15, "F2": 9, "F3": 9, "F4": 6}

# row-major positions of the F3 entries that F4 keeps:
# (x,x), (x,y), (x,z), (y,y), (y,z), (z,z)
F4_KEPT = (0, 1, 2, 4, 5, 8)


@dataclass(frozen=True)
class FeatureVector:
    """A feature vector tagged with the map that produced it."""

    kind: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_LENGTHS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        values = np.asarray(self.values, dtype=float)
        expected = FEATURE_LENGTHS[self.kind]
        if values.shape != (expected,):
            raise ValueError(
                f"{self.kind} expects {expected} entries, got shape {values.shape}")
        object.__setattr__(self, "values", values)


def extract_F1(rho: np.ndarray) -> np.ndarray:
    """Raw matrix entries: 3 diagonal values, then Re/Im of the 6
    strictly-lower-triangle entries in row-major order (15 reals)."""
    rho = validate_state(rho)
    out = np.empty(15)
    out[:3] = np.diag(rho).real[:3]
    for j, (r, c) in enumerate(LOWER_TRIANGLE):
        out[3 + 2 * j] = rho[r, c].real
        out[4 + 2 * j] = rho[r, c].imag
    return out


def extract_F2(rho: np.ndarray) -> np.ndarray:
    """Two-body correlations tau_kl, row major (9 reals)."""
    rho = validate_state(rho)
    return pauli_decompose(rho).tau.ravel().copy()


def canonical_form(rho: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Bob-side congruence rho0 ~ (I x B) rho (I x B), renormalized.

    B is rho_B^(1/2) by default, or the pseudoinverse square root
    rho_B^(-1/2) when `inverse` is set (which makes Bob's marginal
    maximally mixed on the support of rho_B).  Either way the map is a
    congruence, so positivity and steerability verdicts survive it; the
    trace does not, hence the renormalization.
    """
    rho = validate_state(rho)
    rho_b = partial_trace_a(rho)
    b = matrix_inv_sqrt_psd(rho_b) if inverse else matrix_sqrt_psd(rho_b)
    side = np.kron(np.eye(2, dtype=complex), b)
    out = side @ rho @ side
    tr = out.trace().real
    if tr <= 0.0:
        raise ValueError("congruence annihilated the state")
    out /= tr
    return validate_state(0.5 * (out + out.conj().T))


def extract_F3(rho: np.ndarray) -> np.ndarray:
    """F2 of the marginal-whitened canonical form (9 reals).

    The whitening variant generalizes better than the raw congruence:
    states that differ only by Bob-side information content collapse to
    the same correlations, so a classifier trained on F3 cannot key on
    Bob's marginal.
    """
    return extract_F2(canonical_form(rho, inverse=True))


def extract_F4(rho: np.ndarray) -> np.ndarray:
    """The 6 F3 entries at (x,x), (x,y), (x,z), (y,y), (y,z), (z,z)."""
    return extract_F3(rho)[list(F4_KEPT)]


_EXTRACTORS = {
    "F1": extract_F1,
    "F2": extract_F2,
    "F3": extract_F3,
    "F4": extract_F4,
}


def extract(rho: np.ndarray, kind: str) -> FeatureVector:
    """Dispatch on the feature kind tag."""
    if kind not in _EXTRACTORS:
        raise ValueError(f"unknown feature kind {kind!r}")
    return FeatureVector(kind=kind, values=_EXTRACTORS[kind](rho))
