"""Reduced resolvent on both sheets, resonance poles, projectors and residues.

The reduced resolvent is ``R(z) = h(z)^{-1}`` with
``h(z) = z - H0 - i alpha(z)``. Continuing ``alpha`` to the second sheet gives
``h_II``; its zeros in the lower half plane are the resonance poles. At each
pole the non-Hermitian generator ``W_II(z) = H0 + i alpha_II(z)`` has an
eigenvalue equal to ``z``, and the corresponding rank-one spectral projector
gives the weak-coupling residue.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .errors import (DegeneracyError, DomainError, NearDefectivePoleError,
                     NotApplicableError, PoleConsistencyError)
from .kernel import CorrelationKernel
from .model import FlatWindow, Lorentzian, SpectralDensityModel


@dataclass
class PoleRecord:
    """A second-sheet zero of ``det h_II`` with its spectral data."""

    z_pole: complex
    eigenvalue_branch: complex
    branch: int
    right_vec: np.ndarray
    left_vec: np.ndarray
    projector: np.ndarray
    residue: np.ndarray
    newton_residual: float
    omega_prime: complex = 0.0

    @property
    def lifetime(self) -> float:
        """Mean lifetime of the survival probability, ``1 / (-2 Im z)``."""
        return 1.0 / (-2.0 * self.z_pole.imag)

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {"z_pole": cplx(self.z_pole), "eigenvalue_branch": cplx(self.eigenvalue_branch),
                "branch": self.branch, "right_vec": cplx(self.right_vec),
                "left_vec": cplx(self.left_vec), "projector": cplx(self.projector),
                "residue": cplx(self.residue), "newton_residual": self.newton_residual,
                "omega_prime": cplx(self.omega_prime)}


class PoleList(list):
    """List of :class:`PoleRecord` with diagnostic ``notes``."""

    def __init__(self, poles=(), notes=()):
        super().__init__(poles)
        self.notes = list(notes)


@dataclass(frozen=True)
class PoleSearch:
    """Pole-search configuration.

    ``seeds`` overrides the perturbative seeds; ``max_poles`` defaults to the
    number of levels plus, for rational models, the number of Lorentzian
    channels (the degree of the numerator polynomial).
    """

    seeds: tuple = ()
    max_poles: int = None
    tol: float = 1e-12
    max_iter: int = 200
    merge_tol: float = 1e-8


class ReducedGenerator:
    """Evaluators for ``h``, ``h_II`` and ``W_II`` of a model.

    Parameters
    ----------
    model : SpectralDensityModel
    kernel : CorrelationKernel, optional
    deg_tol : float
        Relative eigenvalue gap of ``W_II`` below which projectors are refused.
    """

    def __init__(self, model: SpectralDensityModel, kernel: CorrelationKernel = None,
                 deg_tol: float = 1e-8):
        self.model = model
        self.kernel = kernel or CorrelationKernel(model)
        self.deg_tol = deg_tol
        self.h0 = model.h0
        self.eye = np.eye(model.n, dtype=complex)
        self._channel_poles = [complex(ch.center, -ch.width) for ch in model.channels
                               if isinstance(ch, Lorentzian) and not ch.is_zero]

    @property
    def n(self):
        return self.model.n

    def h_first_sheet(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag <= 0):
            raise DomainError("h on the first sheet is evaluated here for Im z > 0 only")
        return z[..., None, None] * self.eye - self.h0 - self.kernel.cauchy_sum(z, "I")

    def h_second_sheet(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        ia = 1j * self.kernel.alpha_z_second_sheet(z)
        return z[..., None, None] * self.eye - self.h0 - ia

    def h_mixed(self, z, continued) -> np.ndarray:
        """``h`` with a per-channel choice of sheet (no domain checks)."""
        z = np.asarray(z, dtype=complex)
        return z[..., None, None] * self.eye - self.h0 - \
            self.kernel.cauchy_sum(z, continued=continued)

    def w_second_sheet(self, z) -> np.ndarray:
        """Non-Hermitian reduced generator ``W_II(z) = H0 + i alpha_II(z)``."""
        z = np.asarray(z, dtype=complex)
        return self.h0 + 1j * self.kernel.alpha_z_second_sheet(z)

    def dw_dz(self, z) -> np.ndarray:
        return 1j * self.kernel.dalpha_dz(z, "II")

    def dh_dz(self, z) -> np.ndarray:
        return self.eye - self.dw_dz(z)

    def det_h(self, z) -> complex:
        return complex(np.linalg.det(self.h_second_sheet(z)))

    # spectral data of W_II

    def _eig(self, z):
        vals, right = linalg.eig(self.w_second_sheet(z))
        return vals, right

    def projector_at(self, z, branch: int):
        """Rank-one projector of ``W_II(z)`` for eigenvalue ``branch``.

        Branches are indexed in the order of the levels they connect to in the
        zero-coupling limit: branch ``a`` is the eigenvalue nearest to the
        level energy ``lambda_a`` after matching. Returns ``(Q, omega)``.
        """
        q, vals, _, _ = self._projectors(z)
        return q[branch], vals[branch]

    def projectors(self, z):
        """All projectors and eigenvalues at ``z``: ``(Q list, eigenvalues)``."""
        q, vals, _, _ = self._projectors(z)
        return q, vals

    def _projectors(self, z):
        vals, right = self._eig(z)
        order = _match_to_levels(vals, self.model.energies)
        vals, right = vals[order], right[:, order]
        self._check_gap(vals)
        right = right / np.linalg.norm(right, axis=0)
        left = np.linalg.inv(right)
        q = [np.outer(right[:, a], left[a, :]) for a in range(self.n)]
        return q, vals, right, left

    def _check_gap(self, vals):
        scale = max(1.0, float(np.max(np.abs(vals))))
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                if abs(vals[i] - vals[j]) < self.deg_tol * scale:
                    raise DegeneracyError(
                        f"eigenvalue branches {i} and {j} of W_II collide "
                        f"({vals[i]:.6g} vs {vals[j]:.6g})", branches=(i, j))

    # poles

    def default_seeds(self, eta: float = 1e-9) -> list:
        """Second-order perturbative pole estimates plus channel-pole seeds.

        One seed per level, ``lambda_a + [i alpha(lambda_a + i0)]_aa``, i.e. the
        principal-value level shift minus ``i pi omega_aa(lambda_a)``. For
        Lorentzian channels a seed next to ``mu - i gamma`` is added, where
        the extra roots of the rational determinant sit.
        """
        seeds = []
        for a, lam in enumerate(self.model.energies):
            z = complex(lam, 0.0)
            if z.real in self.model.branch_points:
                z += eta * max(1.0, abs(lam))
            shift = self.kernel.cauchy_sum(z, "II")[a, a]
            s = z + shift
            if s.imag >= 0:
                s = complex(s.real, -max(abs(s.imag), 1e-6 * max(1.0, abs(s.real))))
            seeds.append(s)
        for ch in self.model.channels:
            if isinstance(ch, Lorentzian) and not ch.is_zero:
                seeds.append(complex(ch.center + 0.01 * ch.width, -1.01 * ch.width))
        return seeds

    def find_poles(self, search: PoleSearch = None, mode: str = "exact") -> PoleList:
        """Zeros of ``det h_II`` in the lower half plane.

        Newton iteration on ``d(z) = det h_II(z)`` using
        ``d'/d = tr(h_II^{-1} dh_II/dz)``. The function iterated is
        ``d(z) prod_c (z - p_c)``, with ``p_c = mu_c - i gamma_c`` the
        Lorentzian singularities, so that roots next to ``p_c`` are reachable.
        It is deflated by the roots already found, and each root is then
        polished without deflation. Roots that land on
        the real axis are dropped with a note; a root with ``Im z > 0``
        raises :class:`PoleConsistencyError`.
        """
        search = search or PoleSearch()
        max_poles = search.max_poles
        if max_poles is None:
            max_poles = self.n
            if self.model.is_rational:
                max_poles += sum(isinstance(ch, Lorentzian) and not ch.is_zero
                                 for ch in self.model.channels)
        notes = []
        if all(ch.is_zero for ch in self.model.channels):
            notes.append("zero coupling: det h_II vanishes only at the real level energies; "
                         "no poles below the real axis")
            return PoleList([], notes)
        seeds = list(search.seeds) or self.default_seeds()
        roots = []
        for seed in seeds:
            if len(roots) >= max_poles:
                break
            z = self._newton(complex(seed), roots, search)
            if z is None:
                notes.append(f"seed {complex(seed):.6g}: Newton did not converge")
                continue
            z = self._newton(z, [], search, polish=True) or z
            if z.imag > search.tol * max(1.0, abs(z)):
                raise PoleConsistencyError(
                    f"root z = {z} of det h_II lies above the real axis")
            if abs(z.imag) <= search.tol * max(1.0, abs(z)) * 10:
                notes.append(f"root {z:.6g} lies on the real axis; not a resonance, dropped")
                continue
            if any(abs(z - r) < search.merge_tol * max(1.0, abs(r)) for r in roots):
                notes.append(f"seed {complex(seed):.6g}: converged to a known pole")
                continue
            roots.append(z)
        # deflated restarts from shifted seeds until max_poles or nothing new
        if len(roots) < max_poles:
            for seed in seeds:
                for shift in (0.1j, -0.1j, 0.1, -0.1):
                    if len(roots) >= max_poles:
                        break
                    s = complex(seed) + shift * max(abs(complex(seed).imag), 1e-3)
                    if s.imag >= 0:
                        continue
                    z = self._newton(s, roots, search)
                    if z is None or z.imag >= -search.tol:
                        continue
                    z = self._newton(z, [], search, polish=True) or z
                    if z.imag > search.tol * max(1.0, abs(z)):
                        raise PoleConsistencyError(
                            f"root z = {z} of det h_II lies above the real axis")
                    if z.imag < 0 and not any(
                            abs(z - r) < search.merge_tol * max(1.0, abs(r)) for r in roots):
                        roots.append(z)
        if not roots:
            notes.append("no pole found from any seed")
        poles = PoleList([], notes)
        for z in sorted(roots, key=lambda w: (w.real, w.imag)):
            poles.append(self.pole_record(z, mode=mode))
        return poles

    def _newton(self, z, deflate, search, polish=False):
        scale = max(1.0, abs(z))
        for _ in range(search.max_iter):
            try:
                h = self.h_second_sheet(z)
                g = np.trace(np.linalg.solve(h, self.dh_dz(z)))
            except (np.linalg.LinAlgError, ValueError):
                return z if polish else None
            if not np.isfinite(g):
                return None
            # multiply d by prod (z - p_c) over Lorentzian poles, then deflate
            g = g + sum(1.0 / (z - q) for q in self._channel_poles) \
                - sum(1.0 / (z - r) for r in deflate)
            if g == 0:
                return None
            step = 1.0 / g
            if abs(step) <= search.tol * scale:
                return z - step
            # keep iterates strictly below the real axis
            while (z - step).imag >= 0:
                step *= 0.5
            z = z - step
            if not np.isfinite(z) or abs(z) > 1e8 * scale:
                return None
        return z if polish else None

    def pole_record(self, z, mode: str = "exact") -> PoleRecord:
        """Spectral data of ``W_II`` at a converged pole ``z``."""
        z = complex(z)
        q, vals, right, left = self._projectors(z)
        branch = int(np.argmin(np.abs(vals - z)))
        r, l = right[:, branch], left[branch, :]
        wp = complex(l @ self.dw_dz(z) @ r)
        rec = PoleRecord(z_pole=z, eigenvalue_branch=complex(vals[branch]), branch=branch,
                         right_vec=r, left_vec=l, projector=q[branch], residue=None,
                         newton_residual=float(abs(np.linalg.det(self.h_second_sheet(z)))),
                         omega_prime=wp)
        rec.residue = self.residue_at_pole(rec, mode)
        return rec

    def residue_at_pole(self, pole: PoleRecord, mode: str = "exact", tol: float = 1e-10):
        """Residue of ``R_II`` at the pole (``exact``) or its projector (``ww``)."""
        if mode in ("ww", "ww_approx"):
            return pole.projector
        if mode != "exact":
            raise ValueError(f"unknown residue mode {mode!r}")
        denom = 1.0 - pole.omega_prime
        if abs(denom) < tol:
            raise NearDefectivePoleError(
                f"1 - omega'(z) = {denom:.3g} at pole {pole.z_pole:.6g}")
        return pole.projector / denom

    # propagators

    def pole_approx_propagator(self, poles, t, mode: str = "exact") -> np.ndarray:
        """``sum_j exp(-i z_j t) Res_j`` for ``t >= 0``; shape ``t.shape + (N, N)``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("pole approximation is for t >= 0")
        out = np.zeros(t.shape + (self.n, self.n), dtype=complex)
        for p in poles:
            res = p.projector if mode in ("ww", "ww_approx") else p.residue
            out = out + np.exp(-1j * p.z_pole * t)[..., None, None] * res
        return out

    def _sheet_masks(self):
        """Per-branch-point channel sheet choices left and right of each point."""
        pts = self.model.branch_points
        out = []
        for b in pts:
            masks = []
            for side in (-1, 1):
                x = b + side * 1e-9 * max(1.0, abs(b))
                masks.append([(not ch.is_zero) and _covers(ch, x) for ch in self.model.channels])
            out.append((b, masks[0], masks[1]))
        return out

    def background_integral(self, t, depth: float = None, n_nodes: int = None,
                            full_output: bool = False):
        """Branch-point contribution to the reduced propagator.

        For each branch point ``b`` the integration contour hangs down from
        ``b`` along ``Re z = b``. The integrand is the jump between the
        continuations of ``R`` from the intervals left and right of ``b``::

            (1/2pi) int_0^Y [R_R - R_L](b - iy) exp(-i b t - y t) dy

        ``depth`` defaults to ``40/t``, so the truncated tail is below
        ``exp(-40)`` relative. With ``n_nodes`` a fixed Gauss-Legendre rule in
        ``y = Y u^2`` is used, otherwise adaptive quadrature.

        Returns the ``N x N`` matrix, or ``(matrix, info)`` with
        ``full_output``; ``info`` reports the depth, the truncation bound
        ``exp(-Y t)``, the offset ``eps`` from the branch point, and the
        quadrature error estimate.
        """
        if self.model.spectrum_kind != "half_line":
            raise NotApplicableError(
                "background_integral needs a half_line spectrum with a branch point at 0; "
                "for a full_line continuum the contour is not hung from a threshold")
        t = float(t)
        if not t > 0:
            raise ValueError("background_integral requires t > 0")
        y_max = depth if depth is not None else 40.0 / t
        total = np.zeros((self.n, self.n), dtype=complex)
        err_total = 0.0
        eps_used = []
        for b, left, right in self._sheet_masks():
            if left == right:
                # no channel changes sheet across b, so the jump vanishes identically
                continue
            eps = 1e-8 * max(1.0, abs(b))
            eps_used.append(eps)

            def jump(y, b=b, left=left, right=right, eps=eps):
                z_l = complex(b - eps, -y)
                z_r = complex(b + eps, -y)
                rl = np.linalg.inv(self.h_mixed(z_l, left))
                rr = np.linalg.inv(self.h_mixed(z_r, right))
                return (rr - rl) * np.exp(-1j * b * t - y * t)

            if n_nodes:
                u, w = np.polynomial.legendre.leggauss(n_nodes)
                u = 0.5 * (u + 1.0)
                w = 0.5 * w
                val = sum(wk * 2 * y_max * uk * jump(y_max * uk * uk) for uk, wk in zip(u, w))
                err = float("nan")
            else:
                def f(u):
                    m = jump(y_max * u * u) * 2 * y_max * u
                    return np.concatenate([m.real.ravel(), m.imag.ravel()])
                v, err = integrate.quad_vec(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-10, limit=400)
                k = self.n * self.n
                val = (v[:k] + 1j * v[k:]).reshape(self.n, self.n)
            total += val / (2 * np.pi)
            err_total += err / (2 * np.pi)
        if full_output:
            return total, {"depth": y_max, "truncation_bound": float(np.exp(-y_max * t)),
                           "eps": eps_used, "quad_error": err_total}
        return total


def _covers(ch, x) -> bool:
    lo, hi = ch.support
    return lo < x < hi


def _match_to_levels(vals, levels):
    """Permutation assigning eigenvalues to level indices (greedy by distance)."""
    n = len(vals)
    if n == 1:
        return np.array([0])
    cost = np.abs(vals[None, :] - np.asarray(levels)[:, None])
    order = np.full(n, -1)
    used = set()
    for _ in range(n):
        masked = cost.copy()
        for a in range(n):
            if order[a] >= 0:
                masked[a, :] = np.inf
        for j in used:
            masked[:, j] = np.inf
        a, j = np.unravel_index(np.argmin(masked), masked.shape)
        order[a] = j
        used.add(j)
    return order


def exact_one_level_lorentzian(level, g, center, width):
    """Closed-form poles and residues for one level and one Lorentzian channel.

    ``det h_II = z - level - |g|^2 / (z - center + i width)`` vanishes at the
    roots of ``(z - level)(z - center + i width) = |g|^2``. The residue of
    ``R_II = (z - center + i width) / ((z - z1)(z - z2))`` at ``z1`` is
    ``(z1 - center + i width) / (z1 - z2)``.
    """
    p = center - 1j * width
    b = -(level + p)
    c = level * p - abs(g) ** 2
    disc = np.sqrt(b * b - 4 * c + 0j)
    z1, z2 = (-b + disc) / 2, (-b - disc) / 2
    return [(z1, (z1 - p) / (z1 - z2)), (z2, (z2 - p) / (z2 - z1))]
