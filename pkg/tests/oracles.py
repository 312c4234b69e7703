"""Independent reference implementations used only by the tests.

These deliberately avoid the package's own solver paths: the steering
objective is recomputed from the verbatim program statement with cvxpy,
and the SVM dual is solved as a dense quadratic program with cvxopt.
"""

from __future__ import annotations

import numpy as np

from qsteer.measurements import Assemblage
from qsteer.steering import strategy_outcomes
from qsteer.svm import rbf_gram


def verbatim_steering_objective(asm: Assemblage, solver: str = "CLARABEL") -> float:
    """Steering objective from the unreduced program statement.

    Variables are the 2m Hermitian matrices F_{a|x}; one PSD constraint
    per deterministic strategy; normalization via the deterministic
    single-party distributions.  No gauge reduction.
    """
    import cvxpy as cp

    m = asm.m
    f = [[cp.Variable((2, 2), hermitian=True) for _ in range(2)]
         for _ in range(m)]
    objective = 0
    for x in range(m):
        for a in range(2):
            objective = objective + cp.real(cp.trace(f[x][a] @ asm.sigma[x, a]))
    constraints = []
    norm = 0
    for lam in range(1 << m):
        outcomes = strategy_outcomes(lam, m)
        block = sum(f[x][outcomes[x]] for x in range(m))
        constraints.append(block >> 0)
        norm = norm + cp.real(cp.trace(block))
    constraints.append(norm == 1)
    problem = cp.Problem(cp.Minimize(objective), constraints)
    problem.solve(solver=solver)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solve ended with status {problem.status}")
    return float(problem.value)


def qp_svm_reference(x: np.ndarray, y: np.ndarray, c: float,
                     gamma: float) -> tuple[np.ndarray, float]:
    """Dense QP solve of the SVM dual; bias by the same midpoint rule
    the SMO uses, so decision values are directly comparable."""
    from cvxopt import matrix, solvers

    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-12
    solvers.options["reltol"] = 1e-12
    y = y.astype(float)
    n = y.shape[0]
    kernel = rbf_gram(x, x, gamma)
    sol = solvers.qp(
        matrix(np.outer(y, y) * kernel),
        matrix(-np.ones(n)),
        matrix(np.vstack([-np.eye(n), np.eye(n)])),
        matrix(np.concatenate([np.zeros(n), c * np.ones(n)])),
        matrix(y[None, :]),
        matrix(np.zeros(1)),
    )
    alpha = np.array(sol["x"]).ravel()
    f = kernel @ (alpha * y) - y
    edge = 1e-8 * c
    up = ((y > 0) & (alpha < c - edge)) | ((y < 0) & (alpha > edge))
    lo = ((y < 0) & (alpha < c - edge)) | ((y > 0) & (alpha > edge))
    bias = -0.5 * (float(f[up].min()) + float(f[lo].max()))
    return alpha, bias


def reference_decision_values(x: np.ndarray, y: np.ndarray, c: float,
                              gamma: float) -> np.ndarray:
    alpha, bias = qp_svm_reference(x, y, c, gamma)
    return rbf_gram(x, x, gamma) @ (alpha * y.astype(float)) + bias
