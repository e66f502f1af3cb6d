"""Benchmark problem instances.

Each factory returns a ProblemInstance: either a composite objective
(regularized mode) or a smooth map plus a monotone operator given through its
resolvent (generalized-equation mode), together with ground-truth metadata
where it is known exactly (distance oracles, optimal values, smoothness and
error-bound exponents). All randomness is driven by an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (ConfigError, MonotoneOperator, Point, ProblemMetadata,
                   RegularizedProblem, SmoothMap)


@dataclass(frozen=True)
class ProblemInstance:
    """One concrete problem in either mode, with a uniform solver-facing API.

    map_value/resolvent/jacobian are what the solvers consume: the smooth map
    is the gradient in regularized mode, and the Jacobian handed to metric
    construction is symmetrized there (it may be non-Hermitian in
    generalized-equation mode).
    """

    name: str
    dim: int
    default_x0: Point
    metadata: ProblemMetadata
    regularized: Optional[RegularizedProblem] = None
    ge_map: Optional[SmoothMap] = None
    ge_operator: Optional[MonotoneOperator] = None

    def __post_init__(self):
        if self.regularized is None and (self.ge_map is None or self.ge_operator is None):
            raise ConfigError("instance needs either a regularized problem or "
                              "a map/operator pair")

    @property
    def is_regularized(self) -> bool:
        return self.regularized is not None

    def map_value(self, x: Point) -> Point:
        if self.is_regularized:
            return self.regularized.f_grad(x)
        return self.ge_map.eval(x)

    def resolvent(self, tau: float, z: Point) -> Point:
        if self.is_regularized:
            return self.regularized.psi_prox(tau, z)
        return self.ge_operator.resolvent(tau, z)

    def jacobian(self, x: Point) -> np.ndarray:
        if self.is_regularized:
            if self.regularized.f_hess is None:
                raise ConfigError(f"{self.name}: no Hessian available")
            h = self.regularized.f_hess(x)
            return 0.5 * (h + h.T)
        return self.ge_map.jacobian(x)

    def objective(self, x: Point) -> float:
        if not self.is_regularized:
            raise ConfigError(f"{self.name}: generalized equations have no objective")
        return self.regularized.objective(x)

    def lipschitz(self) -> float:
        if self.is_regularized:
            return self.regularized.lipschitz_L
        return self.ge_map.lipschitz_bound


def _orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


def make_quadratic_singular(n: int = 30, rank: int = 10, seed: int = 0) -> ProblemInstance:
    """Smooth convex quadratic 0.5 x'Mx - b'x with rank-deficient PSD M.

    The solution set is an affine subspace (x_sol + null(M)); the distance
    oracle projects onto its orthogonal complement.
    """
    if not 0 < rank <= n:
        raise ConfigError(f"rank must lie in (0, {n}], got {rank}")
    rng = np.random.default_rng(seed)
    q = _orthogonal(n, rng)
    eigs = np.zeros(n)
    eigs[:rank] = np.linspace(0.5, 2.0, rank)
    m_mat = (q * eigs) @ q.T
    m_mat = 0.5 * (m_mat + m_mat.T)
    x_sol = rng.standard_normal(n)
    b = m_mat @ x_sol
    range_basis = q[:, :rank]

    def f_value(x):
        return 0.5 * float(x @ (m_mat @ x)) - float(b @ x)

    reg = RegularizedProblem(
        f_value=f_value,
        f_grad=lambda x: m_mat @ x - b,
        f_hess=lambda x: m_mat,
        psi_value=lambda x: 0.0,
        psi_prox=lambda tau, z: z,
        lipschitz_L=float(eigs.max()),
        psi_is_zero=True,
    )
    meta = ProblemMetadata(
        holder_p=1.0,
        eb_q=1.0,
        eb_kappa=1.0 / float(eigs[eigs > 0].min()),
        dist_oracle=lambda x: float(np.linalg.norm(range_basis.T @ (x - x_sol))),
        f_star=0.5 * float(x_sol @ (m_mat @ x_sol)) - float(b @ x_sol),
    )
    return ProblemInstance(
        name="quadratic_singular", dim=n, default_x0=2.0 * rng.standard_normal(n),
        metadata=meta, regularized=reg)


def soft_threshold(z: Point, level: float) -> Point:
    return np.sign(z) * np.maximum(np.abs(z) - level, 0.0)


def min_norm_subgradient(grad: Point, lam: float, x: Point) -> float:
    """Norm of the smallest subgradient of f + lam*||.||_1 at x, given grad f(x)."""
    s = np.where(x != 0.0,
                 grad + lam * np.sign(x),
                 grad - np.clip(grad, -lam, lam))
    return float(np.linalg.norm(s))


def make_lasso_degenerate(m: int = 100, n: int = 200, rank: int = 50,
                          lam: float = 0.1, seed: int = 0) -> ProblemInstance:
    """l1-regularized least squares with a rank-deficient design.

    Data are scaled so that max|D'b| = 1, which makes lam directly
    interpretable: lam >= 1 forces the zero solution. The optimal value (and,
    when the active design block has full column rank, a distance oracle) is
    obtained from a tight reference solve.
    """
    if not 0 < rank <= min(m, n):
        raise ConfigError(f"rank must lie in (0, {min(m, n)}], got {rank}")
    if lam <= 0:
        raise ConfigError(f"lam must be positive, got {lam}")
    rng = np.random.default_rng(seed)
    design = (rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))) / np.sqrt(rank)
    x_true = np.zeros(n)
    support = rng.choice(n, size=max(1, rank // 4), replace=False)
    x_true[support] = rng.standard_normal(support.size)
    b = design @ x_true + 0.01 * rng.standard_normal(m)
    scale = float(np.max(np.abs(design.T @ b)))
    b = b / scale
    gram = design.T @ design
    dtb = design.T @ b
    lip = float(np.linalg.eigvalsh(gram).max())

    def f_value(x):
        res = design @ x - b
        return 0.5 * float(res @ res)

    reg = RegularizedProblem(
        f_value=f_value,
        f_grad=lambda x: gram @ x - dtb,
        f_hess=lambda x: gram,
        psi_value=lambda x: lam * float(np.abs(x).sum()),
        psi_prox=lambda tau, z: soft_threshold(z, tau * lam),
        lipschitz_L=lip,
    )
    instance = ProblemInstance(
        name="lasso_degenerate", dim=n,
        default_x0=rng.standard_normal(n),
        metadata=ProblemMetadata(holder_p=1.0, eb_q=1.0),
        regularized=reg)

    # Tight reference solve for the optimal value and, if the solution is
    # certifiably unique, a distance oracle.
    from .core import make_config
    from .solvers import run_local
    ref = run_local(instance, np.zeros(n),
                    make_config(c=1.0, rho=1.0, nu=0.0, r_tol=1e-13,
                                max_outer=300))
    x_ref = ref.final_x
    f_star = reg.objective(x_ref)
    active = np.abs(x_ref) > 1e-10
    dist_oracle = None
    if active.any():
        block = design[:, active]
        if np.linalg.matrix_rank(block) == int(active.sum()):
            dist_oracle = lambda x, x_ref=x_ref: float(np.linalg.norm(x - x_ref))
    elif lam >= 1.0:
        # Zero is the unique minimizer only in the strictly subdifferentiable
        # regime; at lam == 1 uniqueness can fail, so no oracle there.
        if lam > 1.0:
            dist_oracle = lambda x: float(np.linalg.norm(x))
    meta = replace(instance.metadata, f_star=f_star, dist_oracle=dist_oracle)
    return replace(instance, metadata=meta)


def make_holder(n: int = 50, gamma: float = 1.5, seed: int = 0,
                lam: float = 0.0) -> ProblemInstance:
    """Strongly convex objective 0.5||x||^2 + sum |x_i|^(1+gamma) (+ lam*l1).

    For gamma in (1, 2) the Hessian is Holder continuous with exponent
    gamma - 1 but not Lipschitz at the solution x* = 0.
    """
    if not 1.0 < gamma < 2.0:
        raise ConfigError(f"gamma must lie in (1, 2), got {gamma}")
    if lam < 0:
        raise ConfigError(f"lam must be nonnegative, got {lam}")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(n)
    radius = 10.0 * max(1.0, float(np.linalg.norm(x0)))
    lip = 1.0 + (1.0 + gamma) * gamma * radius ** (gamma - 1.0)

    def f_value(x):
        return 0.5 * float(x @ x) + float(np.sum(np.abs(x) ** (1.0 + gamma)))

    def f_grad(x):
        return x + (1.0 + gamma) * np.sign(x) * np.abs(x) ** gamma

    def f_hess(x):
        return np.diag(1.0 + (1.0 + gamma) * gamma * np.abs(x) ** (gamma - 1.0))

    psi_is_zero = lam == 0.0
    reg = RegularizedProblem(
        f_value=f_value,
        f_grad=f_grad,
        f_hess=f_hess,
        psi_value=lambda x: lam * float(np.abs(x).sum()),
        psi_prox=(lambda tau, z: z) if psi_is_zero
        else (lambda tau, z: soft_threshold(z, tau * lam)),
        lipschitz_L=lip,
        psi_is_zero=psi_is_zero,
    )
    meta = ProblemMetadata(
        holder_p=gamma - 1.0,
        holder_zeta=(1.0 + gamma) * gamma,
        eb_q=1.0,
        eb_kappa=1.0,
        dist_oracle=lambda x: float(np.linalg.norm(x)),
        f_star=0.0,
    )
    return ProblemInstance(name="holder", dim=n, default_x0=x0,
                           metadata=meta, regularized=reg)


def _box_resolvent(tau: float, z: Point) -> Point:
    # Normal cone of [-1, 1]^n: the resolvent is the projection, for any tau.
    return np.clip(z, -1.0, 1.0)


def make_box_ge(n: int = 20, seed: int = 0, nonsymmetric: bool = True) -> ProblemInstance:
    """Affine generalized equation over the box [-1, 1]^n.

    The map is x -> Mx + c with M = S + K, S symmetric PSD and rank deficient,
    K skew-symmetric when nonsymmetric=True. c is chosen so that a known point
    with strictly complementary active bounds solves the inclusion.
    """
    rng = np.random.default_rng(seed)
    rank = max(1, n - n // 4)
    q = _orthogonal(n, rng)
    eigs = np.zeros(n)
    eigs[:rank] = np.linspace(0.5, 2.0, rank)
    s_mat = (q * eigs) @ q.T
    s_mat = 0.5 * (s_mat + s_mat.T)
    if nonsymmetric:
        g = rng.standard_normal((n, n))
        m_mat = s_mat + 0.5 * (g - g.T)
    else:
        m_mat = s_mat

    # A known solution: a third of the coordinates sit at the bounds with
    # strictly positive multipliers, the rest are interior with zero map value.
    x_star = np.zeros(n)
    v = np.zeros(n)
    idx = rng.permutation(n)
    at_upper, at_lower = idx[: n // 6], idx[n // 6: n // 3]
    interior = idx[n // 3:]
    x_star[at_upper] = 1.0
    x_star[at_lower] = -1.0
    x_star[interior] = rng.uniform(-0.5, 0.5, interior.size)
    v[at_upper] = -rng.uniform(0.5, 1.0, at_upper.size)
    v[at_lower] = rng.uniform(0.5, 1.0, at_lower.size)
    c = v - m_mat @ x_star

    ge_map = SmoothMap(
        eval=lambda x: m_mat @ x + c,
        jacobian=lambda x: m_mat,
        lipschitz_bound=float(np.linalg.norm(m_mat, 2)),
    )
    meta = ProblemMetadata(holder_p=1.0, eb_q=1.0)
    return ProblemInstance(
        name="box_ge", dim=n, default_x0=rng.uniform(-0.9, 0.9, n),
        metadata=meta, ge_map=ge_map,
        ge_operator=MonotoneOperator(resolvent=_box_resolvent))


def make_nonmonotone_ge(n: int = 20, eps: float = 0.1, seed: int = 0) -> ProblemInstance:
    """Generalized equation with a cubic perturbation of a singular PSD map.

    A(x) = Mx + eps * phi(x) with phi_i(x) = x_i^2 (a_i - x_i); the Jacobian
    of A at the solution x* = 0 is M (PSD, rank deficient), but A is not
    monotone away from zero when eps > 0. The error bound degrades to
    exponent 1/2 along null(M).
    """
    if eps < 0:
        raise ConfigError(f"eps must be nonnegative, got {eps}")
    rng = np.random.default_rng(seed)
    rank = max(1, n - n // 4)
    q = _orthogonal(n, rng)
    eigs = np.zeros(n)
    eigs[:rank] = np.linspace(0.5, 2.0, rank)
    m_mat = (q * eigs) @ q.T
    m_mat = 0.5 * (m_mat + m_mat.T)
    a_vec = rng.uniform(1.0, 2.0, n)
    range_basis = q[:, :rank]

    def phi(x):
        return x**2 * (a_vec - x)

    def phi_jac(x):
        return np.diag(2.0 * a_vec * x - 3.0 * x**2)

    ge_map = SmoothMap(
        eval=lambda x: m_mat @ x + eps * phi(x),
        jacobian=lambda x: m_mat + eps * phi_jac(x),
        lipschitz_bound=float(eigs.max()) + eps * float(np.max(2.0 * a_vec + 3.0)) * 2.0,
    )
    if eps > 0:
        meta = ProblemMetadata(
            holder_p=1.0, eb_q=0.5,
            eb_kappa=(1.0 / (eps * float(a_vec.min()))) ** 0.5 + 1.0 / float(eigs[eigs > 0].min()),
            dist_oracle=lambda x: float(np.linalg.norm(x)))
    else:
        meta = ProblemMetadata(
            holder_p=1.0, eb_q=1.0,
            eb_kappa=1.0 / float(eigs[eigs > 0].min()),
            dist_oracle=lambda x: float(np.linalg.norm(range_basis.T @ x)))
    return ProblemInstance(
        name="nonmonotone_ge", dim=n,
        default_x0=0.1 * rng.standard_normal(n),
        metadata=meta, ge_map=ge_map,
        ge_operator=MonotoneOperator(resolvent=_box_resolvent))


REGISTRY = {
    "quadratic_singular": make_quadratic_singular,
    "lasso_degenerate": make_lasso_degenerate,
    "holder": make_holder,
    "box_ge": make_box_ge,
    "nonmonotone_ge": make_nonmonotone_ge,
}


def make_problem(name: str, parameters: Optional[dict] = None,
                 seed: int = 0) -> ProblemInstance:
    if name not in REGISTRY:
        raise ConfigError(f"unknown problem {name!r}; known: {sorted(REGISTRY)}")
    params = dict(parameters or {})
    try:
        return REGISTRY[name](seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from exc
