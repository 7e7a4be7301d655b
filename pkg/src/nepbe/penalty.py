"""Penalty-continuation computation of structured backward errors.

The constrained minimization of ||[F~ - F]||_F over the product manifold,
subject to sum_j F~_j V f_j(Lambda) = 0, is replaced by a sequence of
unconstrained penalized problems

    cost(F~) = ||F~ W||_F^2 + mu ||[F~ - F]||_F^2,

solved by the Riemannian trust-region method for a decreasing geometric
schedule of mu, warm-starting each stage at the previous minimizer.  The
gradient and Hessian terms are carried in low-rank-plus-structured ambient
form, so no dense n x n matrix is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import EigenpairSet, SplitNEP, function_matrix
from .manifolds import Ambient, ProductGeometry, manifold_for_spec
from .trustregion import TrustRegionOptions, TrustRegionResult, trust_region_minimize


class PenaltyProblem:
    """Penalized objective on a product of coefficient manifolds.

    W_blocks[j] holds V f_j(Lambda); ``refs`` is the reference point (the
    unperturbed coefficients) on the same product manifold.
    """

    def __init__(self, manifolds, refs, W_blocks, mu: float, use_weingarten: bool = True):
        if mu <= 0:
            raise ValueError("the penalty weight mu must be positive")
        self.manifolds = list(manifolds)
        self.refs = list(refs)
        self.W = [np.ascontiguousarray(Wj, dtype=float) for Wj in W_blocks]
        self.mu = float(mu)
        self.use_weingarten = use_weingarten
        # caches hold a reference to the point object itself: identity-keyed
        # caching by id() alone is unsafe once the point list is collected
        self._fw_cache: tuple[list, np.ndarray] | None = None
        self._egrad_cache: tuple[list, list[Ambient]] | None = None

    # -- building blocks ----------------------------------------------------
    def fw(self, x) -> np.ndarray:
        """F~ W = sum_j F~_j V f_j(Lambda)."""
        if self._fw_cache is not None and self._fw_cache[0] is x:
            return self._fw_cache[1]
        out = None
        for m, p, Wj in zip(self.manifolds, x, self.W):
            term = m.apply(p, Wj)
            out = term if out is None else out + term
        self._fw_cache = (x, out)
        return out

    def constraint_norm(self, x) -> float:
        return float(np.linalg.norm(self.fw(x)))

    def delta_norm_sq(self, x) -> float:
        return float(sum(m.delta_norm_sq(p, r) for m, p, r in zip(self.manifolds, x, self.refs)))

    def cost(self, x) -> float:
        fw = self.fw(x)
        return float(np.sum(fw * fw) + self.mu * self.delta_norm_sq(x))

    def egrad_blocks(self, x) -> list[Ambient]:
        """Euclidean gradient blocks 2 (F~W) W_j^T + 2 mu (F~_j - F_j)."""
        if self._egrad_cache is not None and self._egrad_cache[0] is x:
            return self._egrad_cache[1]
        fw = self.fw(x)
        blocks = []
        for m, p, r, Wj in zip(self.manifolds, x, self.refs, self.W):
            amb = m.delta_ambient(p, r)
            # scale the (F~_j - F_j) term by 2 mu
            if amb.coo is not None:
                rows, cols, vals = amb.coo
                amb.coo = (rows, cols, 2.0 * self.mu * vals)
            amb.ident *= 2.0 * self.mu
            amb.pairs = [(2.0 * self.mu * A, B) for A, B in amb.pairs]
            amb.add_pair(2.0 * fw, Wj)
            blocks.append(amb)
        self._egrad_cache = (x, blocks)
        return blocks

    def grad(self, x):
        return [m.project(p, amb) for m, p, amb in zip(self.manifolds, x, self.egrad_blocks(x))]

    def ehess_blocks(self, x, xi) -> list[Ambient]:
        """Euclidean Hessian along xi: blocks 2 (E W) W_j^T + 2 mu E_j."""
        ew = None
        for m, p, t, Wj in zip(self.manifolds, x, xi, self.W):
            term = m.tangent_apply(p, t, Wj)
            ew = term if ew is None else ew + term
        blocks = []
        for m, p, t, Wj in zip(self.manifolds, x, xi, self.W):
            amb = m.tangent_ambient(p, t)
            if amb.coo is not None:
                rows, cols, vals = amb.coo
                amb.coo = (rows, cols, 2.0 * self.mu * vals)
            amb.ident *= 2.0 * self.mu
            amb.pairs = [(2.0 * self.mu * A, B) for A, B in amb.pairs]
            amb.add_pair(2.0 * ew, Wj)
            blocks.append(amb)
        return blocks

    def hess(self, x, xi):
        """Riemannian Hessian: projected Euclidean Hessian plus, for curved
        manifolds, the Weingarten correction with the ambient gradient."""
        eblocks = self.ehess_blocks(x, xi)
        out = []
        gradients = self.egrad_blocks(x) if self.use_weingarten else None
        for idx, (m, p, t, amb) in enumerate(zip(self.manifolds, x, xi, eblocks)):
            h = m.project(p, amb)
            if self.use_weingarten:
                corr = m.weingarten(p, t, gradients[idx])
                if corr is not None:
                    h = m.axpy(1.0, h, 1.0, corr)
            out.append(h)
        return out


@dataclass
class ContinuationStage:
    mu: float
    iterations: int
    grad_norm: float
    cost: float
    constraint_norm: float
    eta: float
    converged: bool


@dataclass
class PenaltyContinuationResult:
    """Outcome of the penalty continuation.

    eta is ||[F~ - F]||_F at the final iterate; residual_norm is the
    constraint violation ||sum_j F~_j V f_j(Lambda)||_F, reported so callers
    can judge feasibility.
    """

    eta: float
    residual_norm: float
    points: list
    manifolds: list
    refs: list
    stages: list[ContinuationStage] = field(default_factory=list)
    converged: bool = True

    def delta_dense_terms(self) -> list[np.ndarray]:
        """Materialize the perturbations densely (small problems only)."""
        return [
            m.to_dense(p) - m.to_dense(r)
            for m, p, r in zip(self.manifolds, self.points, self.refs)
        ]


def penalty_continuation(
    nep: SplitNEP,
    pairs: EigenpairSet,
    specs,
    eps: float = 1e-8,
    rho: float = 0.1,
    mu0: float = 1.0,
    tr_options: TrustRegionOptions | None = None,
    use_weingarten: bool = True,
    verbose: int = 0,
) -> PenaltyContinuationResult:
    """Structure-preserving backward error by penalty continuation.

    Starting from mu = mu0 at the reference coefficients, each stage
    minimizes the penalized objective on the product manifold and the next
    stage shrinks mu by rho, until sqrt(mu) <= eps.
    """
    if len(specs) != nep.k:
        raise ValueError("one StructureSpec per coefficient is required")
    if not (0 < rho < 1):
        raise ValueError("the decrease factor rho must lie in (0, 1)")
    if not pairs.is_real():
        raise ValueError("the Riemannian solver works in real arithmetic; supply real eigenpairs")
    manifolds = [manifold_for_spec(s, nep.n) for s in specs]
    refs = [m.from_matrix(F) for m, F in zip(manifolds, nep.coeffs)]
    G = np.real(function_matrix(nep, np.real(pairs.lambdas)))
    V = np.real(pairs.V)
    W_blocks = [V * G[:, j] for j in range(nep.k)]

    geometry = ProductGeometry(manifolds)
    opts = tr_options or TrustRegionOptions()
    if opts.gtol_abs == 0.0:
        # late stages warm-start essentially converged; their relative
        # tolerance would chase gradients below machine precision, so anchor
        # an absolute floor to the initial gradient scale and to the rounding
        # noise of a gradient evaluation (which scales with the coefficient
        # magnitudes, not with the residual)
        probe = PenaltyProblem(manifolds, refs, W_blocks, mu0, use_weingarten)
        g0 = geometry.norm(refs, probe.grad(list(refs)))
        coeff_scale = np.sqrt(sum(m.point_norm(r) ** 2 for m, r in zip(manifolds, refs)))
        w_scale = max(np.linalg.norm(Wj, 2) for Wj in W_blocks)
        g_noise = 10.0 * np.finfo(float).eps * 2.0 * coeff_scale * max(w_scale, 1.0) ** 2
        opts = replace(opts, gtol_abs=max(1e-12 * g0, g_noise))

    x = list(refs)
    mu = float(mu0)
    stages: list[ContinuationStage] = []
    all_converged = True
    while np.sqrt(mu) > eps:
        problem = PenaltyProblem(manifolds, refs, W_blocks, mu, use_weingarten)
        result: TrustRegionResult = trust_region_minimize(problem, geometry, x, opts)
        x = result.point
        eta = float(np.sqrt(problem.delta_norm_sq(x)))
        stages.append(
            ContinuationStage(
                mu=mu,
                iterations=result.iterations,
                grad_norm=result.grad_norm,
                cost=result.cost,
                constraint_norm=problem.constraint_norm(x),
                eta=eta,
                converged=result.converged,
            )
        )
        if verbose:
            st = stages[-1]
            print(
                f"mu={st.mu:.1e}  iters={st.iterations:3d}  |grad|={st.grad_norm:.2e}  "
                f"constraint={st.constraint_norm:.3e}  eta={st.eta:.6e}"
            )
        all_converged = all_converged and result.converged
        mu *= rho

    final_problem = PenaltyProblem(manifolds, refs, W_blocks, mu=1.0, use_weingarten=use_weingarten)
    return PenaltyContinuationResult(
        eta=float(np.sqrt(final_problem.delta_norm_sq(x))),
        residual_norm=final_problem.constraint_norm(x),
        points=x,
        manifolds=manifolds,
        refs=refs,
        stages=stages,
        converged=all_converged,
    )
