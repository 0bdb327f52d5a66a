"""Weighted nonlinear least-squares estimation for fringe datasets.

Fringe fits minimize sum w_i (counts_i - N p(tau_i))^2 with Poisson weights
w = 1/max(counts, 1) using damped least squares (MINPACK Levenberg-
Marquardt) from a multi-start grid over phase and delay offset, with
analytic Jacobians.  Internally all times are in picoseconds: scipy's
finite-difference and trust-region scaling misbehave for parameters of
order 1e-10, and the analytic Jacobian keeps the curvature matrix sane.

Accidental floor note: the fringe model's (alpha, V) pair is structurally
degenerate (only (1 - alpha) V is identifiable from a single scan), so
fits hold alpha fixed unless explicitly asked; freeing it is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .counting import FringeDataset
from .errors import DomainError, FitError, ReconstructionError
from .rng import STREAM_RECON, CounterRng
from .states import RestrictedDensityMatrix, fidelity as state_fidelity, restricted_density

__all__ = [
    "FitResult",
    "ReconstructionResult",
    "fit_fringe",
    "fit_envelope",
    "estimate_balance",
    "reconstruct",
    "pool_phases",
]

_PS = 1e-12  # seconds per picosecond

_PHI_STARTS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)

# Costs within this relative band count as ties for start selection.
_TIE_REL = 1e-6


@dataclass(frozen=True)
class FitResult:
    """Estimates, one-sigma uncertainties, and diagnostics of one fit.

    params/sigmas are keyed by parameter name; covariance rows/columns
    follow free_names order and use the reported units (tau0 in seconds).
    """

    params: dict
    sigmas: dict
    covariance: np.ndarray
    free_names: tuple[str, ...]
    residual_ss: float
    converged: bool
    iterations: int
    flags: tuple[str, ...] = ()

    @property
    def visibility(self) -> float:
        return self.params["visibility"]

    @property
    def visibility_clamped(self) -> float:
        """Visibility clamped to [0, 1] for reporting; raw value preserved."""
        return min(max(self.params["visibility"], 0.0), 1.0)

    @property
    def phi(self) -> float:
        return self.params["phi"]

    @property
    def tau0(self) -> float:
        return self.params["tau0"]

    def report(self) -> str:
        """key = value +/- sigma lines plus a covariance block."""
        lines = [
            f"converged = {self.converged}",
            f"iterations = {self.iterations}",
            f"residual_ss = {self.residual_ss!r}",
            f"flags = {','.join(self.flags)}",
        ]
        for name in self.free_names:
            lines.append(f"{name} = {self.params[name]!r} +/- {self.sigmas[name]!r}")
        for name in self.params:
            if name not in self.free_names:
                lines.append(f"{name} = {self.params[name]!r} (fixed)")
        lines.append(f"# covariance order: {','.join(self.free_names)}")
        for row in np.atleast_2d(self.covariance):
            lines.append("cov = " + " ".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def _envelope_ps(t_ps: np.ndarray, sigma_ps: float) -> np.ndarray:
    x = np.minimum(np.abs(sigma_ps * t_ps), 700.0)
    return (1.0 + x) * np.exp(-x)


class _FringeDesign:
    """Residual/Jacobian factory for the shared-(V, phi) fringe model.

    Model: counts ~ N [ 1/2 - (1-alpha) (V/2) B(tau) E(tau) ] with
    B = mean_m cos(2 pi d_m (tau - t0) + phi); times in ps.
    """

    def __init__(self, taus_ps, counts, detunings_ps, sigma_ps,
                 fit_alpha, fit_detuning, alpha_fixed):
        self.t = np.asarray(taus_ps, dtype=np.float64)
        self.c = np.asarray(counts, dtype=np.float64)
        self.d = tuple(float(d) for d in detunings_ps)
        self.sigma_ps = sigma_ps
        self.fit_alpha = fit_alpha
        self.fit_detuning = fit_detuning
        self.alpha_fixed = alpha_fixed
        self.sw = np.sqrt(1.0 / np.maximum(self.c, 1.0))
        self.names = ["scale", "visibility", "phi", "tau0"]
        if fit_alpha:
            self.names.append("alpha")
        if fit_detuning:
            self.names.append("detuning")

    def _unpack(self, theta):
        n, v, phi, t0 = theta[:4]
        i = 4
        alpha = self.alpha_fixed
        if self.fit_alpha:
            alpha = theta[i]
            i += 1
        dets = self.d
        if self.fit_detuning:
            dets = (theta[i],)
        return n, v, phi, t0, alpha, dets

    def _parts(self, theta):
        n, v, phi, t0, alpha, dets = self._unpack(theta)
        dt = self.t - t0
        if self.sigma_ps is None:
            env = np.ones_like(dt)
            denv_dt0 = np.zeros_like(dt)
            x = np.zeros_like(dt)
        else:
            x = np.minimum(np.abs(self.sigma_ps * dt), 700.0)
            ex = np.exp(-x)
            env = (1.0 + x) * ex
            # dE/dt0 = sigma sign(dt) x e^{-x}
            denv_dt0 = self.sigma_ps * np.sign(dt) * x * ex
        cosb = np.zeros_like(dt)
        sinb = np.zeros_like(dt)
        sinb_d = np.zeros_like(dt)
        for d in dets:
            th = 2.0 * math.pi * d * dt + phi
            cosb += np.cos(th)
            sinb += np.sin(th)
            sinb_d += np.sin(th) * d
        m = len(dets)
        cosb /= m
        sinb /= m
        sinb_d /= m
        return n, v, phi, t0, alpha, dets, dt, env, denv_dt0, cosb, sinb, sinb_d

    def model(self, theta):
        n, v, _, _, alpha, _, _, env, _, cosb, _, _ = self._parts(theta)
        return n * (0.5 - (1.0 - alpha) * 0.5 * v * cosb * env)

    def residual(self, theta):
        return self.sw * (self.c - self.model(theta))

    def jacobian(self, theta):
        (n, v, phi, t0, alpha, dets, dt, env, denv_dt0,
         cosb, sinb, sinb_d) = self._parts(theta)
        one_m_a = 1.0 - alpha
        g = cosb * env
        p = 0.5 - one_m_a * 0.5 * v * g
        cols = []
        cols.append(-self.sw * p)                                   # scale
        cols.append(self.sw * n * one_m_a * 0.5 * g)                # visibility
        cols.append(-self.sw * n * one_m_a * 0.5 * v * sinb * env)  # phi
        db_dt0 = 2.0 * math.pi * sinb_d
        dp_dt0 = -one_m_a * 0.5 * v * (db_dt0 * env + cosb * denv_dt0)
        cols.append(-self.sw * n * dp_dt0)                          # tau0
        if self.fit_alpha:
            cols.append(-self.sw * n * 0.5 * v * g)                 # alpha
        if self.fit_detuning:
            db_dd = -sinb * 2.0 * math.pi * dt
            dp_dd = -one_m_a * 0.5 * v * db_dd * env
            cols.append(-self.sw * n * dp_dd)                       # detuning
        return np.column_stack(cols)


def _run_starts(design, starts, max_nfev, tol):
    best = []
    for x0 in starts:
        try:
            res = least_squares(
                design.residual, x0=np.asarray(x0, dtype=np.float64),
                jac=design.jacobian, method="lm",
                xtol=tol, ftol=tol, gtol=tol, max_nfev=max_nfev,
            )
        except Exception:
            continue
        best.append(res)
    return best


def _canonical_fringe(theta):
    """Wrap the solution into V >= 0, phi in (-pi, pi]."""
    theta = np.array(theta, dtype=np.float64)
    if theta[1] < 0:
        theta[1] = -theta[1]
        theta[2] += math.pi
    theta[2] = math.pi - (math.pi - theta[2]) % (2.0 * math.pi)
    return theta


def _covariance(design, theta):
    j = design.jacobian(theta)
    jtj = j.T @ j
    cov = np.linalg.pinv(jtj)
    return 0.5 * (cov + cov.T)


def fit_fringe(
    data: FringeDataset,
    detunings,
    sigma: float | None = None,
    *,
    alpha: float = 0.0,
    fit_alpha: bool = False,
    fit_detuning: bool = False,
    max_iter: int = 200,
) -> FitResult:
    """Fit scale, visibility, phase, and delay offset to a count scan.

    detunings lists the known beat detunings in Hz (one entry per
    multiplexed pair; visibility and phase are shared across pairs).
    sigma is the known envelope angular linewidth in rad/s, or None to fit
    the locally flat model (envelope factor omitted), appropriate for fine
    windows much shorter than the envelope.

    alpha fixes the accidental floor fraction; fit_alpha frees it (flagged:
    alpha and visibility are jointly unidentifiable from one scan).
    fit_detuning (single pair only) frees the beat detuning so the
    oscillation period is itself measured.

    Multi-start over phi in {0, pi/2, pi, 3/2 pi} and eight tau0 offsets
    spanning one oscillation period; ties resolved by residual, then
    smallest |tau0|, then smallest |phi|.

    Single-pair fits without the envelope determine phi and tau0 only
    jointly (the beat phase at zero delay); such fits are reported in the
    tau0 = 0 gauge with phi the zero-delay beat phase, flagged
    "phase-gauge", and sigma(tau0) set to zero.
    """
    if len(data) < 8:
        raise DomainError("fit_fringe needs at least 8 data points")
    detunings = [float(d) for d in np.atleast_1d(detunings)]
    if not detunings or any(d <= 0 for d in detunings):
        raise DomainError("detunings must be positive")
    if fit_detuning and len(detunings) != 1:
        raise DomainError("fit_detuning requires a single pair")

    order = np.argsort(data.taus)
    taus_ps = data.taus[order] * 1e12
    counts = data.counts[order].astype(np.float64)
    d_ps = [d * _PS for d in detunings]
    sigma_ps = None if sigma is None else float(sigma) * _PS

    design = _FringeDesign(taus_ps, counts, d_ps, sigma_ps,
                           fit_alpha, fit_detuning, alpha)

    flags: list[str] = []
    if np.ptp(counts) == 0:
        # Degenerate data: no fringe information; report V = 0, not an error.
        theta = [2.0 * counts.mean() if counts.mean() > 0 else 1.0, 0.0, 0.0, 0.0]
        if fit_alpha:
            theta.append(alpha)
        if fit_detuning:
            theta.append(d_ps[0])
        theta = np.array(theta)
        cov = _covariance(design, theta)
        return _package_fringe(design, theta, cov, 0.0, True, 0,
                               ("degenerate-data",), sigma)

    n0 = 2.0 * counts.mean()
    v0 = float(np.clip(np.ptp(counts) / max(counts.mean(), 1.0) / 2.0, 0.05, 0.9))
    period_ps = 1.0 / min(d_ps)
    t0_ref = float(taus_ps[np.argmin(counts)]) if sigma_ps is not None else 0.0
    starts = []
    for phi0 in _PHI_STARTS:
        for j in range(8):
            x0 = [n0, v0, phi0, t0_ref + j * period_ps / 8.0]
            if fit_alpha:
                x0.append(max(alpha, 0.01))
            if fit_detuning:
                x0.append(d_ps[0])
            starts.append(x0)

    results = _run_starts(design, starts, max_iter, 1e-9)
    converged = [r for r in results if r.status > 0]
    if not converged:
        best_cost = min((r.cost for r in results), default=math.nan)
        raise FitError(
            f"fringe fit did not converge from any of {len(starts)} starts "
            f"(best residual ss {2 * best_cost!r})"
        )

    # Polish the contenders at tight tolerance, then break ties.
    costs = np.array([r.cost for r in converged])
    cutoff = costs.min() * (1.0 + _TIE_REL) + 1e-12
    contenders = []
    for r in converged:
        if r.cost <= cutoff:
            p = least_squares(design.residual, x0=r.x, jac=design.jacobian,
                              method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                              max_nfev=2 * max_iter)
            contenders.append(p)
    costs = np.array([r.cost for r in contenders])
    cutoff = costs.min() * (1.0 + _TIE_REL) + 1e-12
    ties = [r for r in contenders if r.cost <= cutoff]
    keyed = sorted(
        (tuple(np.abs(_canonical_fringe(r.x)[[3, 2]])), i)
        for i, r in enumerate(ties)
    )
    winner = ties[keyed[0][1]]

    theta = _canonical_fringe(winner.x)
    # Without the envelope a single-pair model depends on (phi, tau0) only
    # through the beat phase at zero delay, so the pair is an exact flat
    # direction and the optimizer parks anywhere along it.  Slide the
    # solution to the tau0 = 0 gauge, pin tau0 there, and propagate the
    # covariance through the reparameterization so sigma(phi) is the
    # uncertainty of the identifiable combination.
    gauge = sigma_ps is None and len(d_ps) == 1
    if gauge:
        det_hat = theta[design.names.index("detuning")] if fit_detuning else d_ps[0]
        theta[2] -= 2.0 * math.pi * det_hat * theta[3]
        theta[3] = 0.0
        theta = _canonical_fringe(theta)
    cov = _covariance(design, theta)
    jac = design.jacobian(theta)
    if gauge:
        gmap = np.eye(len(theta))
        gmap[2, 3] = -2.0 * math.pi * det_hat
        cov = gmap @ cov @ gmap.T
        cov[3, :] = 0.0
        cov[:, 3] = 0.0
        flags.append("phase-gauge")
        jac = np.delete(jac, 3, axis=1)
    if fit_alpha:
        flags.append("alpha-degenerate")
    cond = np.linalg.cond(jac.T @ jac)
    if cond > 1e10:
        flags.append("ill-conditioned")
    iterations = int(winner.nfev)
    return _package_fringe(design, theta, cov, 2.0 * winner.cost, True,
                           iterations, tuple(flags), sigma)


def _package_fringe(design, theta, cov, residual_ss, converged, iterations,
                    flags, sigma):
    names = tuple(design.names)
    scale_units = {"tau0": _PS, "detuning": 1e12}
    d = np.array([scale_units.get(n, 1.0) for n in names])
    cov_rep = cov * np.outer(d, d)
    values = {}
    sigmas = {}
    for i, name in enumerate(names):
        values[name] = float(theta[i] * d[i])
        sigmas[name] = float(math.sqrt(max(cov_rep[i, i], 0.0)))
    if not design.fit_alpha:
        values["alpha"] = design.alpha_fixed
    if sigma is not None:
        values["sigma"] = float(sigma)
    return FitResult(values, sigmas, cov_rep, names, float(residual_ss),
                     converged, iterations, flags)


class _EnvelopeDeviationDesign:
    """Reduced baseline-plus-envelope model for coarse scans.

    The unresolved oscillation is folded out: |counts - mean| is fitted to
    sqrt(((2/pi) A E)^2 + 2 b/pi), the folded-normal mean of beat plus
    Poisson noise around the baseline b.
    """

    def __init__(self, taus_ps, dev, baseline):
        self.t = taus_ps
        self.dev = dev
        self.floor2 = 2.0 * baseline / math.pi

    def residual(self, theta):
        a, t0, u = theta
        e = _envelope_ps(self.t - t0, math.exp(u))
        m = np.sqrt((2.0 / math.pi * a * e) ** 2 + self.floor2)
        return self.dev - m


class _EnvelopeFullDesign:
    """Full fringe model with free log-linewidth for the refine stage."""

    def __init__(self, taus_ps, counts, detunings_ps):
        self.t = taus_ps
        self.c = counts
        self.d = detunings_ps
        self.sw = np.sqrt(1.0 / np.maximum(counts, 1.0))

    def _parts(self, theta):
        n, v, phi, t0, u = theta
        s = math.exp(u)
        dt = self.t - t0
        x = np.minimum(np.abs(s * dt), 700.0)
        ex = np.exp(-x)
        env = (1.0 + x) * ex
        cosb = np.zeros_like(dt)
        sinb = np.zeros_like(dt)
        sinb_d = np.zeros_like(dt)
        for d in self.d:
            th = 2.0 * math.pi * d * dt + phi
            cosb += np.cos(th)
            sinb += np.sin(th)
            sinb_d += np.sin(th) * d
        m = len(self.d)
        return (n, v, phi, t0, s, dt, x, ex, env,
                cosb / m, sinb / m, sinb_d / m)

    def residual(self, theta):
        n, v, _, _, _, _, _, _, env, cosb, _, _ = self._parts(theta)
        model = n * (0.5 - 0.5 * v * cosb * env)
        return self.sw * (self.c - model)

    def jacobian(self, theta):
        n, v, phi, t0, s, dt, x, ex, env, cosb, sinb, sinb_d = self._parts(theta)
        g = cosb * env
        p = 0.5 - 0.5 * v * g
        denv_dt0 = s * np.sign(dt) * x * ex
        denv_du = -(x**2) * ex  # dE/du with x proportional to e^u
        cols = [
            -self.sw * p,
            self.sw * n * 0.5 * g,
            -self.sw * n * 0.5 * v * sinb * env,
            -self.sw * n * (-0.5 * v) * (2.0 * math.pi * sinb_d * env
                                         + cosb * denv_dt0),
            -self.sw * n * (-0.5 * v) * cosb * denv_du,
        ]
        return np.column_stack(cols)


def fit_envelope(data: FringeDataset, detunings=None, max_iter: int = 200) -> FitResult:
    """Estimate the coherence envelope linewidth from a coarse delay scan.

    Stage one fits the envelope-averaged model (baseline plus folded
    envelope of the unresolved beat) to |counts - mean|; stage two refines
    all parameters against the full fringe model with the linewidth free,
    which needs the beat detunings (argument, else dataset metadata
    `detunings_hz`).  Without detunings the stage-one estimate is returned
    with flag "coarse-only".

    The linewidth is reported as equivalent fwhm in Hz.
    """
    if len(data) < 8:
        raise DomainError("fit_envelope needs at least 8 data points")
    order = np.argsort(data.taus)
    taus_ps = data.taus[order] * 1e12
    counts = data.counts[order].astype(np.float64)
    span_ps = float(taus_ps[-1] - taus_ps[0])
    if span_ps < 1000.0:
        raise DomainError("envelope fit needs a scan spanning at least 1 ns")

    if detunings is None and "detunings_hz" in data.metadata:
        raw = str(data.metadata["detunings_hz"])
        detunings = [float(tok) for tok in raw.split(",") if tok]
    d_ps = None
    if detunings is not None:
        d_ps = [float(d) * _PS for d in np.atleast_1d(detunings)]
        if any(d <= 0 for d in d_ps):
            raise DomainError("detunings must be positive")

    baseline = counts.mean()
    dev = np.abs(counts - baseline)
    flags: list[str] = []

    if np.ptp(counts) == 0:
        nanv = float("nan")
        params = {"fwhm": nanv, "tau0": nanv, "scale": 2.0 * baseline,
                  "visibility": 0.0, "phi": 0.0}
        sig = {k: nanv for k in ("fwhm", "tau0", "scale", "visibility", "phi")}
        return FitResult(params, sig, np.full((5, 5), np.nan),
                         ("scale", "visibility", "phi", "tau0", "fwhm"),
                         0.0, True, 0, ("ill-conditioned", "degenerate-data"))

    coarse = _EnvelopeDeviationDesign(taus_ps, dev, baseline)
    sigma0 = 2.0 / span_ps
    starts = []
    for t0_frac in (0.0, 0.25, 0.5, 0.75):
        for mult in (0.5, 1.0, 2.0, 4.0):
            starts.append([
                max(dev.max(), 1.0),
                taus_ps[0] + t0_frac * span_ps,
                math.log(sigma0 * mult),
            ])
    best = None
    for x0 in starts:
        try:
            r = least_squares(coarse.residual, x0=np.asarray(x0), method="lm",
                              xtol=1e-10, ftol=1e-10, gtol=1e-10,
                              max_nfev=40 * max_iter)
        except Exception:
            continue
        if best is None or r.cost < best.cost:
            best = r
    if best is None:
        raise FitError("envelope fit did not converge from any start")
    a1, t01, u1 = best.x

    if d_ps is None:
        sigma_ps = math.exp(u1)
        fwhm = sigma_ps / (2.0 * math.pi) / _PS
        flags.append("coarse-only")
        if span_ps < 1.0 / sigma_ps:
            flags.append("ill-conditioned")
        params = {"amplitude": float(abs(a1)), "fwhm": float(fwhm),
                  "tau0": float(t01 * _PS),
                  "scale": float(2.0 * baseline),
                  "visibility": float(np.clip(abs(a1) / max(baseline, 1.0), 0.0, 1.0)),
                  "phi": 0.0}
        # Coarse-stage curvature in (A, t0, u), mapped onto (tau0, fwhm).
        j = _numeric_jacobian(coarse.residual, best.x)
        cov = np.linalg.pinv(j.T @ j)
        d = np.array([1.0, _PS, fwhm])
        cov_rep = cov * np.outer(d, d)
        sig = {"amplitude": float(math.sqrt(max(cov_rep[0, 0], 0.0))),
               "fwhm": float(math.sqrt(max(cov_rep[2, 2], 0.0))),
               "tau0": float(math.sqrt(max(cov_rep[1, 1], 0.0)))}
        return FitResult(params, sig, cov_rep, ("amplitude", "tau0", "fwhm"),
                         float(2.0 * best.cost), True, int(best.nfev),
                         tuple(flags))

    full = _EnvelopeFullDesign(taus_ps, counts, d_ps)
    v1 = float(np.clip(abs(a1) / max(baseline, 1.0), 0.05, 1.0))
    full_starts = [[2.0 * baseline, v1, phi0, t01, u1] for phi0 in _PHI_STARTS]
    winner = None
    for x0 in full_starts:
        try:
            r = least_squares(full.residual, x0=np.asarray(x0), jac=full.jacobian,
                              method="lm", xtol=1e-9, ftol=1e-9, gtol=1e-9,
                              max_nfev=40 * max_iter)
        except Exception:
            continue
        if winner is None or r.cost < winner.cost:
            winner = r
    if winner is None or winner.status <= 0:
        raise FitError("envelope refinement did not converge")
    polished = least_squares(full.residual, x0=winner.x, jac=full.jacobian,
                             method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                             max_nfev=40 * max_iter)

    n, v, phi, t0, u = polished.x
    if v < 0:
        v, phi = -v, phi + math.pi
    phi = math.pi - (math.pi - phi) % (2.0 * math.pi)
    sigma_ps = math.exp(u)
    fwhm = sigma_ps / (2.0 * math.pi) / _PS
    theta = np.array([n, v, phi, t0, u])
    j = full.jacobian(theta)
    cov = np.linalg.pinv(j.T @ j)
    d = np.array([1.0, 1.0, 1.0, _PS, fwhm])
    cov_rep = 0.5 * (cov + cov.T) * np.outer(d, d)
    if span_ps < 1.0 / sigma_ps or math.sqrt(max(cov[4, 4], 0.0)) > 1.0:
        flags.append("ill-conditioned")
    names = ("scale", "visibility", "phi", "tau0", "fwhm")
    values = {"scale": float(n), "visibility": float(v), "phi": float(phi),
              "tau0": float(t0 * _PS), "fwhm": float(fwhm)}
    sig = {name: float(math.sqrt(max(cov_rep[i, i], 0.0)))
           for i, name in enumerate(names)}
    return FitResult(values, sig, cov_rep, names, float(2.0 * polished.cost),
                     True, int(polished.nfev), tuple(flags))


def _numeric_jacobian(fun, x, rel=1e-6):
    x = np.asarray(x, dtype=np.float64)
    f0 = fun(x)
    cols = []
    for i in range(x.size):
        h = rel * max(abs(x[i]), 1.0)
        xp = x.copy()
        xp[i] += h
        cols.append((fun(xp) - f0) / h)
    return np.column_stack(cols)


def estimate_balance(n1: float, s1: float, n2: float, s2: float) -> tuple[float, float]:
    """Balance p = n1/(n1 + n2) with propagated one-sigma uncertainty.

    sigma_p = sqrt(n2^2 s1^2 + n1^2 s2^2) / (n1 + n2)^2.
    """
    total = n1 + n2
    if total <= 0:
        raise DomainError("total counts must be positive")
    p = n1 / total
    sigma_p = math.sqrt(n2**2 * s1**2 + n1**2 * s2**2) / total**2
    return float(p), float(sigma_p)


@dataclass(frozen=True)
class ReconstructionResult:
    """Density matrix plus Monte Carlo fidelity uncertainty."""

    rho: RestrictedDensityMatrix
    fidelity: float
    sigma_fidelity: float
    rejection_rate: float
    samples_accepted: int
    theta_target: float


def reconstruct(
    p: float, sigma_p: float,
    V: float, sigma_V: float,
    phi: float, sigma_phi: float,
    *,
    theta_target: float = 0.0,
    samples: int = 20000,
    seed: int = 0,
) -> ReconstructionResult:
    """Build the restricted density matrix and propagate its fidelity error.

    Central values must be physical (checked by the matrix constructor).
    Uncertainty: Gaussian draws of (p, V, phi); p and V are clamped to
    [0, 1] and draws violating positivity are discarded (rejection above
    50% aborts).  sigma_F is the sample standard deviation of the fidelity
    over accepted draws.
    """
    if samples < 2:
        raise DomainError("samples must be at least 2")
    rho = restricted_density(p, V, phi)
    f_central = state_fidelity(rho, theta_target)

    rng = CounterRng(seed, STREAM_RECON)
    idx = np.arange(samples)
    zp = rng.normals(idx, slot=0)
    zv = rng.normals(idx, slot=1)
    zf = rng.normals(idx, slot=2)
    ps = np.clip(p + sigma_p * zp, 0.0, 1.0)
    vs = np.clip(V + sigma_V * zv, 0.0, 1.0)
    fs = phi + sigma_phi * zf
    ok = (ps - 0.5) ** 2 + vs**2 / 4.0 <= 0.25 + 1e-12
    accepted = int(np.count_nonzero(ok))
    rejection = 1.0 - accepted / samples
    if rejection > 0.5:
        raise ReconstructionError(
            f"rejection rate {rejection:.1%} exceeds 50%: uncertainties "
            "inconsistent with a physical state"
        )
    f_samples = 0.5 + 0.5 * vs[ok] * np.cos(fs[ok] - theta_target)
    sigma_f = float(np.std(f_samples, ddof=1)) if accepted >= 2 else 0.0
    return ReconstructionResult(rho, float(f_central), sigma_f,
                                float(rejection), accepted, float(theta_target))


def pool_phases(phis, sigmas) -> tuple[float, float]:
    """Inverse-variance pooling of phase estimates.

    Phases are unwrapped relative to the first entry before averaging, so
    estimates straddling the wrap seam pool correctly.
    """
    phis = np.asarray(phis, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if phis.size == 0 or phis.shape != sigmas.shape:
        raise DomainError("phis and sigmas must be equal-length and non-empty")
    if np.any(sigmas <= 0):
        raise DomainError("sigmas must be positive")
    ref = phis.flat[0]
    adj = ref + (phis - ref + math.pi) % (2.0 * math.pi) - math.pi
    w = 1.0 / sigmas**2
    mean = float(np.sum(w * adj) / np.sum(w))
    mean = math.pi - (math.pi - mean) % (2.0 * math.pi)
    return mean, float(1.0 / math.sqrt(np.sum(w)))
