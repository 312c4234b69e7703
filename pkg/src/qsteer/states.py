"""Two-qubit density matrices.

Random sampling from the Hilbert-Schmidt ensemble, the generalized
Werner family with its analytic unsteerability bound, Pauli-basis
decomposition, partial traces, and the small Hermitian-matrix helpers
the rest of the package leans on.

Conventions: qubit A (the steering party) is the first tensor factor,
qubit B the second, basis order |00>, |01>, |10>, |11|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
IDENTITY_2 = np.eye(2, dtype=complex)

# Lower-triangle visit order used by the full-tomography feature map.
LOWER_TRIANGLE = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


def is_hermitian(mat: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    mat = np.asarray(mat)
    return bool(np.allclose(mat, mat.conj().T, atol=atol, rtol=0.0))


def validate_state(rho: np.ndarray,
                   trace_atol: float = TRACE_ATOL,
                   psd_atol: float = PSD_ATOL) -> np.ndarray:
    """Check that `rho` is a 4x4 density matrix and return it as complex128.

    Raises ValueError on wrong shape, non-Hermiticity, trace away from one,
    or an eigenvalue below -psd_atol.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise ValueError("state is not Hermitian")
    tr = rho.trace().real
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"state trace {tr!r} is not 1")
    eigs = np.linalg.eigvalsh(rho)
    if eigs[0] < -psd_atol:
        raise ValueError(f"state has negative eigenvalue {eigs[0]!r}")
    return rho


def state_from_factors(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Density matrix (M + iN)(M + iN)^dag / trace for real 4x4 factors.

    Exposed separately so tests can drive the sampler with fixed factors.
    """
    a = np.asarray(m, dtype=float) + 1.0j * np.asarray(n, dtype=float)
    if a.shape != (4, 4):
        raise ValueError(f"expected 4x4 factors, got shape {a.shape}")
    h = a @ a.conj().T
    tr = h.trace().real
    if tr <= 1e-12:
        raise ValueError("factor product has (numerically) zero trace")
    return h / tr


def random_two_qubit_state(rng: np.random.Generator) -> np.ndarray:
    """Draw a state from the Hilbert-Schmidt ensemble.

    G = M + iN with i.i.d. standard normal entries; the state is
    GG^dag normalized.  The zero-trace event has probability zero but
    is redrawn anyway so the return value is always a valid state.
    """
    while True:
        m = rng.standard_normal((4, 4))
        n = rng.standard_normal((4, 4))
        try:
            return state_from_factors(m, n)
        except ValueError:
            continue


def generalized_werner(p: float, xi: float) -> np.ndarray:
    """p |psi><psi| + (1-p) rho_A (x) I/2 with |psi> = cos(xi)|00> + sin(xi)|11>.

    rho_A is the reduced state of |psi> on the first qubit.  Requires
    0 <= p <= 1 and 0 < xi < pi/2.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight p={p!r} outside [0, 1]")
    if not 0.0 < xi < np.pi / 2.0:
        raise ValueError(f"angle xi={xi!r} outside (0, pi/2)")
    psi = np.array([np.cos(xi), 0.0, 0.0, np.sin(xi)], dtype=complex)
    pure = np.outer(psi, psi.conj())
    rho_a = np.diag([np.cos(xi) ** 2, np.sin(xi) ** 2]).astype(complex)
    return p * pure + (1.0 - p) * np.kron(rho_a, IDENTITY_2 / 2.0)


def unsteerable_bound_holds(p: float, xi: float) -> bool:
    """Analytic sufficient condition for a generalized Werner state to
    admit a local-hidden-state model:

        cos^2(2 xi) >= (2p - 1) / ((2 - p) p^3)

    True means guaranteed unsteerable.  p = 0 (a product state) is
    accepted and returns True even though the right-hand side is
    singular there.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight p={p!r} outside [0, 1]")
    if not 0.0 < xi <= np.pi / 4.0:
        raise ValueError(f"angle xi={xi!r} outside (0, pi/4]")
    if p == 0.0:
        return True
    lhs = np.cos(2.0 * xi) ** 2
    rhs = (2.0 * p - 1.0) / ((2.0 - p) * p ** 3)
    return bool(lhs >= rhs)


def partial_trace_a(rho: np.ndarray) -> np.ndarray:
    """Trace out the first qubit: Bob's reduced state."""
    r4 = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return np.einsum("ijil->jl", r4)


def partial_trace_b(rho: np.ndarray) -> np.ndarray:
    """Trace out the second qubit: Alice's reduced state."""
    r4 = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return np.einsum("ijkj->ik", r4)


def matrix_sqrt_psd(mat: np.ndarray, atol: float = PSD_ATOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues in [-atol, 0) are clipped to zero; anything lower raises.
    """
    mat = np.asarray(mat, dtype=complex)
    if not is_hermitian(mat):
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(mat)
    if vals[0] < -atol:
        raise ValueError(f"matrix has negative eigenvalue {vals[0]!r}")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.conj().T


def matrix_inv_sqrt_psd(mat: np.ndarray, atol: float = PSD_ATOL,
                        rank_rtol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose inverse square root of a Hermitian PSD matrix.

    Eigenvalues at or below rank_rtol times the largest are treated as
    zero and inverted to zero.
    """
    mat = np.asarray(mat, dtype=complex)
    if not is_hermitian(mat):
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(mat)
    if vals[0] < -atol:
        raise ValueError(f"matrix has negative eigenvalue {vals[0]!r}")
    cutoff = max(vals[-1], 0.0) * rank_rtol
    inv_root = np.where(vals > cutoff, 1.0 / np.sqrt(np.clip(vals, cutoff, None)), 0.0)
    return (vecs * inv_root) @ vecs.conj().T


@dataclass
class PauliDecomposition:
    """Coefficients of rho = (I + r.sigma (x) I + I (x) s.sigma + sum tau_kl sigma_k (x) sigma_l) / 4."""

    r: np.ndarray    # (3,) Alice Bloch vector
    s: np.ndarray    # (3,) Bob Bloch vector
    tau: np.ndarray  # (3, 3) correlation matrix, rows Alice, columns Bob


def pauli_decompose(rho: np.ndarray) -> PauliDecomposition:
    rho = np.asarray(rho, dtype=complex)
    r4 = rho.reshape(2, 2, 2, 2)
    alice = np.einsum("ijkj->ik", r4)
    bob = np.einsum("ijil->jl", r4)
    r = np.einsum("kab,ba->k", PAULIS, alice).real
    s = np.einsum("kab,ba->k", PAULIS, bob).real
    tau = np.einsum("kia,ljb,abij->kl", PAULIS, PAULIS, r4).real
    return PauliDecomposition(r=r, s=s, tau=tau)


def pauli_reconstruct(dec: PauliDecomposition) -> np.ndarray:
    rho = np.eye(4, dtype=complex)
    for k in range(3):
        rho += dec.r[k] * np.kron(PAULIS[k], IDENTITY_2)
        rho += dec.s[k] * np.kron(IDENTITY_2, PAULIS[k])
        for l in range(3):
            rho += dec.tau[k, l] * np.kron(PAULIS[k], PAULIS[l])
    return rho / 4.0


def state_to_reals(rho: np.ndarray) -> list[float]:
    """Flatten a 4x4 complex matrix to 32 reals, row-major, alternating
    real and imaginary parts.  This is the on-disk state encoding."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
    flat = rho.ravel()
    out = np.empty(32, dtype=float)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return [float(v) for v in out]


def state_from_reals(values) -> np.ndarray:
    """Inverse of state_to_reals.  Validates the result as a density matrix."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (32,):
        raise ValueError(f"expected 32 reals, got shape {arr.shape}")
    rho = (arr[0::2] + 1.0j * arr[1::2]).reshape(4, 4)
    return validate_state(rho)
