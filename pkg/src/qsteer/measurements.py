"""Projective qubit measurements and steering assemblages.

A measurement setting is a unit vector n on the Bloch sphere; its two
outcomes project onto (I +/- n.sigma)/2.  A scenario is m settings for
Alice; measuring her half of a shared state leaves Bob with the
(subnormalized) conditional states sigma_{a|x}, collected here as an
Assemblage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qsteer.states import IDENTITY_2, PAULIS, validate_state

STRATEGIES = ("uniform", "mub", "fibonacci")
_STRATEGY_ALIASES = {
    "uniform": "uniform",
    "uniform-random": "uniform",
    "mub": "mub",
    "mub-xyz": "mub",
    "fibonacci": "fibonacci",
}

NO_SIGNALLING_ATOL = 1e-9

_MUB_AXES = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
])


def normalize_strategy(name: str) -> str:
    """Map a strategy name or alias to its canonical form."""
    key = str(name).strip().lower()
    if key not in _STRATEGY_ALIASES:
        raise ValueError(
            f"unknown direction strategy {name!r}; expected one of {sorted(set(_STRATEGY_ALIASES))}")
    return _STRATEGY_ALIASES[key]


def projectors(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outcome projectors (I + n.sigma)/2 and (I - n.sigma)/2 for unit n."""
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {n.shape}")
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"direction norm {norm!r} is not 1")
    ns = np.einsum("k,kab->ab", n, PAULIS)
    return (IDENTITY_2 + ns) / 2.0, (IDENTITY_2 - ns) / 2.0


@dataclass
class MeasurementSet:
    """An ordered collection of Bloch directions, one per setting."""

    directions: np.ndarray  # (m, 3) unit rows
    strategy: str = "explicit"

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[1] != 3 or dirs.shape[0] < 1:
            raise ValueError(f"directions must be (m, 3) with m >= 1, got {dirs.shape}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("directions must be unit vectors")
        self.directions = dirs

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    def projector_stack(self) -> np.ndarray:
        """All outcome projectors, shape (m, 2, 2, 2): setting, outcome, matrix."""
        ns = (self.directions @ PAULIS.reshape(3, 4)).reshape(self.m, 2, 2)
        stack = np.empty((self.m, 2, 2, 2), dtype=complex)
        stack[:, 0] = (IDENTITY_2 + ns) / 2.0
        stack[:, 1] = (IDENTITY_2 - ns) / 2.0
        return stack


def sample_directions(m: int, strategy: str,
                      rng: np.random.Generator | None = None) -> MeasurementSet:
    """Build an m-setting measurement set.

    uniform    -- i.i.d. directions uniform on the sphere (needs rng)
    mub        -- x, y, z axes cycled (m <= 3 uses the first m axes)
    fibonacci  -- deterministic Fibonacci-spiral covering of the sphere
    """
    strategy = normalize_strategy(strategy)
    if m < 1:
        raise ValueError(f"need at least one setting, got m={m}")
    if strategy == "uniform":
        if rng is None:
            raise ValueError("uniform strategy requires an rng")
        dirs = np.empty((m, 3))
        for x in range(m):
            while True:
                v = rng.standard_normal(3)
                norm = np.linalg.norm(v)
                if norm > 1e-8:
                    dirs[x] = v / norm
                    break
    elif strategy == "mub":
        if m > 3:
            raise ValueError(f"mub strategy supports at most 3 settings, got m={m}")
        dirs = _MUB_AXES[:m].copy()
    else:
        dirs = _fibonacci_sphere(m)
    return MeasurementSet(directions=dirs, strategy=strategy)


def _fibonacci_sphere(m: int) -> np.ndarray:
    # golden-angle spiral; z strictly inside (-1, 1) so rows never degenerate
    golden = np.pi * (3.0 - np.sqrt(5.0))
    i = np.arange(m, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / m
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = golden * i
    dirs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


@dataclass
class Assemblage:
    """Bob's subnormalized conditional states sigma_{a|x}.

    sigma has shape (m, 2, 2, 2): setting, outcome, then the 2x2 block.
    Each setting's outcomes sum to the same reduced state (no signalling)
    and every block is PSD; validate() checks both.
    """

    sigma: np.ndarray
    directions: np.ndarray | None = field(default=None)
    _validated: bool = field(default=False, init=False, repr=False)

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=complex)
        if sig.ndim != 4 or sig.shape[1:] != (2, 2, 2):
            raise ValueError(f"sigma must be (m, 2, 2, 2), got {sig.shape}")
        self.sigma = sig
        if self.directions is not None:
            self.directions = np.asarray(self.directions, dtype=float)

    @property
    def m(self) -> int:
        return self.sigma.shape[0]

    def bob_marginal(self) -> np.ndarray:
        """Bob's reduced state, averaged over settings."""
        return self.sigma.sum(axis=1).mean(axis=0)

    def validate(self, atol: float = NO_SIGNALLING_ATOL) -> None:
        sig = self.sigma
        herm_err = np.abs(sig - np.conj(np.swapaxes(sig, -1, -2))).max()
        if herm_err > atol:
            raise ValueError(f"assemblage blocks deviate from Hermitian by {herm_err!r}")
        margins = sig.sum(axis=1)
        drift = np.abs(margins - margins[0]).max()
        if drift > atol:
            raise ValueError(f"assemblage violates no-signalling by {drift!r}")
        total = margins[0].trace().real
        if abs(total - 1.0) > atol:
            raise ValueError(f"assemblage marginal trace {total!r} is not 1")
        eigs = np.linalg.eigvalsh(sig.reshape(-1, 2, 2))
        if eigs.min() < -atol:
            raise ValueError(f"assemblage block has negative eigenvalue {eigs.min()!r}")
        self._validated = True


def assemblage(rho: np.ndarray, measurements: MeasurementSet,
               validate: bool = True) -> Assemblage:
    """sigma_{a|x} = Tr_A[(P_{a|x} (x) I) rho] for every setting and outcome.

    validate=False skips the state and no-signalling checks; callers that
    already validated rho (e.g. a labeling loop reusing one state) use it
    to avoid repeating eigenvalue work.  The construction itself puts
    no-signalling in by algebra, so nothing is lost on that path.
    """
    if validate:
        rho = validate_state(rho)
    else:
        rho = np.asarray(rho, dtype=complex)
    m = measurements.m
    # Tr_A[(P (x) I) rho] in index form: out[j,l] = sum_{i,a} P[i,a] rho4[a,j,i,l];
    # flattening the (i,a) pair against a transposed rho makes it one matmul
    lhs = measurements.projector_stack().reshape(2 * m, 4)
    rhs = np.ascontiguousarray(
        rho.reshape(2, 2, 2, 2).transpose(2, 0, 1, 3)).reshape(4, 4)
    sig = (lhs @ rhs).reshape(m, 2, 2, 2)
    asm = Assemblage(sigma=sig, directions=measurements.directions.copy())
    if validate:
        asm.validate()
    else:
        asm._validated = True
    return asm
