"""Cross-module identity checks run by ``nesstransport validate``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fcs
from .errors import EpUndefined
from .fock import MAX_TWO_TIME_MODES, two_time_fcs
from .model import is_time_reversal_invariant
from .scattering import s_matrices, transmittances
from .timeevo import build_finite, finite_fcs, plateau_current, wavepacket_transmission
from .transport import all_currents, current_report, onsager_matrix

SEED = 20240101


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float
    status: str  # PASS, FAIL or SKIP
    note: str = ""

    @property
    def ok(self):
        return self.status != "FAIL"

    def line(self):
        text = f"{self.status} {self.name} residual={self.residual:.3e} tol={self.tolerance:.1e}"
        return f"{text} ({self.note})" if self.note else text


def _result(name, residual, tol, note=""):
    return CheckResult(name, float(residual), tol, "PASS" if residual <= tol else "FAIL", note)


def check_unitarity(cfg, tol=1e-10):
    eps = np.linspace(-0.99, 0.99, 199)
    s = s_matrices(cfg.spec, eps, check=False)
    M = cfg.spec.M
    resid = np.abs(s @ np.conj(np.swapaxes(s, 1, 2)) - np.eye(M)).max()
    return _result("unitarity", resid, tol)


def check_conservation(cfg, tol=1e-9):
    cur, _ = all_currents(cfg.spec, cfg.numerics.abs_tol)
    return _result("conservation", np.abs(cur.sum(axis=1)).max(), tol)


def check_second_law(cfg, tol=1e-10):
    try:
        ep = current_report(cfg.spec, cfg.numerics.abs_tol).entropy_production
    except EpUndefined as exc:
        return CheckResult("second_law", float("nan"), tol, "SKIP", str(exc))
    return _result("second_law", max(-ep, 0.0), tol, f"Ep={ep:.3e}")


def check_lb_vs_fcs(cfg, tol=1e-6):
    spec = cfg.spec
    cur, _ = all_currents(spec, cfg.numerics.abs_tol)
    worst = 0.0
    for k in range(spec.M):
        for a, kind in enumerate(("particle", "energy")):
            d = fcs.current_from_fcs(spec, k, kind, abs_tol=cfg.numerics.fcs_tol)
            worst = max(worst, abs(d - cur[a, k]))
    return _result("lb_vs_fcs_derivative", worst, tol)


def check_onsager(cfg, tol=1e-4):
    if not is_time_reversal_invariant(cfg.spec):
        return CheckResult("onsager_direct_vs_fcs", float("nan"), tol, "SKIP", "not time-reversal invariant")
    direct = onsager_matrix(cfg.spec, cfg.eq, "direct", cfg.numerics.abs_tol)
    via_fcs = onsager_matrix(cfg.spec, cfg.eq, "fcs")
    resid = max(np.abs(direct.L - via_fcs.L).max(), direct.reciprocity_residual())
    return _result("onsager_direct_vs_fcs", resid, tol)


def check_wavepacket(cfg, tol=2e-2):
    spec = cfg.spec
    if spec.M < 2:
        return CheckResult("scattering_vs_wavepacket", float("nan"), tol, "SKIP", "single lead")
    worst = 0.0
    off = ~np.eye(spec.M, dtype=bool)
    for e0 in cfg.numerics.wavepacket_energies:
        frac = wavepacket_transmission(spec, e0, cfg.numerics.wavepacket_R)
        T = transmittances(s_matrices(spec, [e0]))[0]
        worst = max(worst, np.abs(frac - T)[off].max())
    return _result("scattering_vs_wavepacket", worst, tol)


def check_two_time(cfg, tol=1e-9, trials=3):
    spec = cfg.spec
    R = cfg.numerics.oracle_R
    if spec.n_s + spec.M * R > MAX_TWO_TIME_MODES:
        R = (MAX_TWO_TIME_MODES - spec.n_s) // spec.M
    if R < 2:
        return CheckResult("finite_vs_two_time_fcs", float("nan"), tol, "SKIP", "system too large for the Fock oracle")
    fin = build_finite(spec, R)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(trials):
        cf = fcs.CountingField.from_vector(rng.uniform(-1, 1, 2 * spec.M))
        t = rng.uniform(0.5, 5.0)
        worst = max(worst, abs(two_time_fcs(fin, cf, t, check=False) - finite_fcs(fin, cf, t)))
    return _result("finite_vs_two_time_fcs", worst, tol, f"R={R}")


def check_plateau(cfg, rel_tol=1e-2):
    spec = cfg.spec
    cur, _ = all_currents(spec, cfg.numerics.abs_tol)
    fin = build_finite(spec, cfg.numerics.R)
    scale = max(np.abs(cur[0]).max(), 1e-8)
    worst = 0.0
    for k in range(spec.M):
        p = plateau_current(fin, k, "particle", cfg.numerics.window, cfg.numerics.time_samples)
        worst = max(worst, abs(p - cur[0, k]) / scale)
    return _result("plateau_vs_lb", worst, rel_tol, f"R={cfg.numerics.R}, relative to max |Phi|")


CHECKS = (
    check_unitarity,
    check_conservation,
    check_second_law,
    check_lb_vs_fcs,
    check_onsager,
    check_wavepacket,
    check_two_time,
    check_plateau,
)


def run_all(cfg, checks=CHECKS):
    """Run every check, turning unexpected numerical errors into failures."""
    out = []
    for check in checks:
        try:
            out.append(check(cfg))
        except ArithmeticError as exc:
            name = check.__name__.removeprefix("check_")
            out.append(CheckResult(name, float("inf"), 0.0, "FAIL", f"{type(exc).__name__}: {exc}"))
    return out
