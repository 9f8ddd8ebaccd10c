"""Pulse-level Monte Carlo of the protocol, used as an independent oracle.

Each time bin draws both users' intensities, a discrete phase slice
``j in {0..M-1}`` and a random bit ``r`` per user. The global phase seen by
Charlie is ``2 pi (j_a - j_b) / M + pi (r_a - r_b) + kappa t`` where
``kappa`` is the drift rate of the chosen technique. Single clicks are drawn
from the same ``q_L``/``q_R`` model as the analytics; double clicks and no
clicks are discarded.

The run is processed in fixed chunks of bins; chunk ``c`` uses the random
stream ``SeedSequence(seed, spawn_key=(0, c))`` so results do not depend on
how chunks are scheduled. Matching uses its own stream ``spawn_key=(1,)``.

A static base misalignment cannot be seen by a pair of bins, so only the
time-dependent drift is simulated; validations compare against predictions
with zero base misalignment.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from asyncmdi.channel import average_gain, single_click_gains
from asyncmdi.exceptions import ParameterError, ScenarioMismatchError
from asyncmdi.matching import (
    pair_error_fraction,
    slice_phases,
    z_match_arbitrary,
)

LABELS = ("mu", "nu", "o", "ohat")
MU, NU, O, OHAT = range(4)
CHUNK_BINS = 1 << 21
SIGNIFICANCE = 5.0


@dataclass
class Tallies:
    """Integer event counts of one simulated run.

    ``sent[a, b]`` and ``detected[a, b]`` are indexed by the state order
    ``(mu, nu, o, ohat)``; ``x_pairs[m]``/``x_errors[m]`` are per phase group
    ``m < M/2``.
    """

    sent: np.ndarray
    detected: np.ndarray
    case1: int
    case2: int
    z_alice_o: int
    z_alice_mu: int
    n_C: int
    n_E: int
    x_pairs: np.ndarray
    x_errors: np.ndarray
    x_oo_d: int
    m_oo_d: int

    @property
    def detections(self) -> int:
        return int(self.detected.sum())


@dataclass
class SimRun:
    N_sim: int
    seed: int
    scenario: object
    tallies: Tallies
    kappa: float = 0.0


@dataclass
class _Events:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ja: np.ndarray
    jb: np.ndarray
    ra: np.ndarray
    rb: np.ndarray
    right: np.ndarray


def _drift_rate(scenario) -> float:
    return scenario.drift.drift_rate()


def _draw_states(rng, probs, n):
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int8)


def _simulate_chunk(scenario, start: int, n: int, stream: np.random.SeedSequence, kappa: float):
    rng = np.random.default_rng(stream)
    sa, sb, ch, M = scenario.source_a, scenario.source_b, scenario.channel, scenario.matching.M
    pa = np.array([sa.p_mu, sa.p_nu, sa.p_o, sa.p_ohat], dtype=float)
    pb = np.array([sb.p_mu, sb.p_nu, sb.p_o, sb.p_ohat], dtype=float)
    ka_tab = np.array([sa.mu, sa.nu, 0.0, 0.0])
    kb_tab = np.array([sb.mu, sb.nu, 0.0, 0.0])
    a = _draw_states(rng, pa, n)
    b = _draw_states(rng, pb, n)
    ja = rng.integers(0, M, n, dtype=np.int16)
    jb = rng.integers(0, M, n, dtype=np.int16)
    ra = rng.integers(0, 2, n, dtype=np.int8)
    rb = rng.integers(0, 2, n, dtype=np.int8)
    u = rng.random(n)
    t = np.arange(start, start + n, dtype=np.int64)
    phase = 2 * np.pi * (ja - jb) / M + np.pi * (ra - rb)
    if kappa:
        phase = phase + kappa * t / scenario.matching.F
    ql, qr = single_click_gains(ka_tab[a], kb_tab[b], phase, ch)
    det = u < ql + qr
    sent = np.bincount(a.astype(np.int64) * 4 + b, minlength=16).reshape(4, 4)
    ev = _Events(t[det], a[det], b[det], ja[det], jb[det], ra[det], rb[det], u[det] >= ql[det])
    return sent, ev


def _concat(parts: list[_Events]) -> _Events:
    return _Events(*(np.concatenate([getattr(p, f) for p in parts]) for f in _Events.__dataclass_fields__))


def _subset(ev: _Events, mask) -> _Events:
    return _Events(*(getattr(ev, f)[mask] for f in _Events.__dataclass_fields__))


def _classify(t: np.ndarray, window: int) -> np.ndarray:
    """True for case-1 events: another detection within ``window`` bins."""
    if t.size == 0:
        return np.zeros(0, bool)
    gap = np.diff(t)
    near = gap <= window
    case1 = np.zeros(t.size, bool)
    case1[1:] |= near
    case1[:-1] |= near
    return case1


def _group_ranks(group: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random order within each group; returns (order, rank-in-group)."""
    key = rng.random(group.size)
    order = np.lexsort((key, group))
    g = group[order]
    starts = np.r_[0, np.flatnonzero(np.diff(g)) + 1] if g.size else np.zeros(0, np.int64)
    first = np.repeat(starts, np.diff(np.r_[starts, g.size]))
    return order, np.arange(g.size) - first


def _z_match(ev: _Events, window_id, rng):
    z = np.isin(ev.a, (MU, O)) & np.isin(ev.b, (MU, O))
    alice_o = z & (ev.a == O)
    alice_mu = z & (ev.a == MU)
    wo, wm = window_id[alice_o], window_id[alice_mu]
    bo, bm = ev.b[alice_o], ev.b[alice_mu]
    oo, ro = _group_ranks(wo, rng)
    om, rm = _group_ranks(wm, rng)
    big = np.int64(1) << 32
    ko = wo[oo].astype(np.int64) * big + ro
    km = wm[om].astype(np.int64) * big + rm
    _, io, im = np.intersect1d(ko, km, assume_unique=True, return_indices=True)
    b_in_o, b_in_mu = bo[oo][io], bm[om][im]
    n_c = int(np.sum((b_in_o == MU) & (b_in_mu == O)))
    n_e = int(np.sum((b_in_o == O) & (b_in_mu == MU)))
    return int(alice_o.sum()), int(alice_mu.sum()), n_c, n_e


def _x_match(ev: _Events, window_id, M: int, rng):
    x = (ev.a == NU) & (ev.b == NU)
    rel = (ev.ja[x].astype(np.int64) - ev.jb[x]) % M
    grp = rel % (M // 2)
    key = window_id[x].astype(np.int64) * (M // 2) + grp
    order, rank = _group_ranks(key, rng)
    k = key[order]
    first = rank % 2 == 0
    has_next = np.r_[k[1:] == k[:-1], False]
    i = np.flatnonzero(first & has_next)
    j = i + 1
    sel = order
    rel_s = rel[sel]
    ra, rb, right = ev.ra[x][sel], ev.rb[x][sel], ev.right[x][sel]
    same_phase = rel_s[i] == rel_s[j]
    flip = (right[i] != right[j]) ^ ~same_phase
    alice = ra[i] ^ ra[j]
    bob = (rb[i] ^ rb[j]) ^ flip.astype(np.int8)
    err = alice != bob
    g = grp[sel][i]
    pairs = np.bincount(g, minlength=M // 2)
    errors = np.bincount(g, weights=err, minlength=M // 2).astype(np.int64)
    return pairs, errors


def simulate(scenario, N_sim: int, seed: int) -> SimRun:
    """Simulate ``N_sim`` time bins of ``scenario``.

    In short mode only case-1 events are matched, and only inside the fixed
    windows of ``N_Tc`` bins; in arbitrary mode every detection is matched.
    """
    N_sim = int(N_sim)
    if N_sim < 1:
        raise ParameterError("N_sim must be at least 1")
    match = scenario.matching
    n_tc = max(int(round(match.N_Tc)), 1)
    kappa = _drift_rate(scenario)
    root = np.random.SeedSequence(seed)
    sent = np.zeros((4, 4), np.int64)
    parts = []
    for c, start in enumerate(range(0, N_sim, CHUNK_BINS)):
        n = min(CHUNK_BINS, N_sim - start)
        s, ev = _simulate_chunk(scenario, start, n, np.random.SeedSequence(root.entropy, spawn_key=(0, c)), kappa)
        sent += s
        parts.append(ev)
    ev = _concat(parts)
    detected = np.bincount(ev.a.astype(np.int64) * 4 + ev.b, minlength=16).reshape(4, 4)
    case1 = _classify(ev.t, n_tc - 1)
    rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(1,)))
    if match.mode == "short":
        used = _subset(ev, case1)
        window_id = used.t // n_tc
    else:
        used = ev
        window_id = np.zeros(ev.t.size, np.int64)
    z_o, z_mu, n_c, n_e = _z_match(used, window_id, rng)
    pairs, errors = _x_match(used, window_id, match.M, rng)
    declared = (ev.a == OHAT) | (ev.b == OHAT)
    m_oo_d = int(np.sum(ev.right[declared] ^ (ev.ra[declared] ^ ev.rb[declared]).astype(bool)))
    tallies = Tallies(
        sent=sent, detected=detected, case1=int(case1.sum()), case2=int((~case1).sum()),
        z_alice_o=z_o, z_alice_mu=z_mu, n_C=n_c, n_E=n_e, x_pairs=pairs, x_errors=errors,
        x_oo_d=int(declared.sum()), m_oo_d=m_oo_d,
    )
    return SimRun(N_sim, seed, scenario, tallies, kappa)


@dataclass(frozen=True)
class Prediction:
    value: float
    std_error: float


@dataclass
class Predictions:
    """Expected values and standard errors keyed by quantity name."""

    scenario: object
    N_sim: int
    values: dict[str, Prediction] = field(default_factory=dict)


@dataclass(frozen=True)
class Check:
    quantity: str
    empirical: float
    analytic: float
    z_score: float
    passed: bool


@dataclass
class ValidationReport:
    checks: list[Check]
    significance: float = SIGNIFICANCE

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "empirical", "analytic", "z_score"])
        for c in self.checks:
            w.writerow([c.quantity, repr(float(c.empirical)), repr(float(c.analytic)), repr(float(c.z_score))])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")


def empirical(sim: SimRun) -> dict[str, float]:
    """Empirical values of every tracked quantity."""
    t = sim.tallies
    out = {}
    for i, la in enumerate(LABELS):
        for j, lb in enumerate(LABELS):
            out[f"gain_{la}_{lb}"] = t.detected[i, j] / t.sent[i, j] if t.sent[i, j] else 0.0
    out["detections"] = float(t.detections)
    out["case1"] = float(t.case1)
    out["case2"] = float(t.case2)
    out["n_C"] = float(t.n_C)
    out["n_E"] = float(t.n_E)
    n_z = t.n_C + t.n_E
    out["E_z"] = t.n_E / n_z if n_z else 0.0
    M = sim.scenario.matching.M
    for m in range(M // 2):
        out[f"x_error_slice_{m}"] = t.x_errors[m] / t.x_pairs[m] if t.x_pairs[m] else 0.0
    n_x = int(t.x_pairs.sum())
    out["E_x"] = t.x_errors.sum() / n_x if n_x else 0.0
    out["e_oo_d"] = t.m_oo_d / t.x_oo_d if t.x_oo_d else 0.0
    return out


def _binom_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else 0.0


def _expected_case2(p_bar: float, n: int, w: int) -> float:
    """Expected case-2 count with truncated neighbourhoods at the run ends."""
    if w <= 0:
        return n * p_bar
    s = 1.0 - p_bar
    if n <= 2 * w:
        t = np.arange(n)
        nb = np.minimum(t, w) + np.minimum(n - 1 - t, w)
        return float(p_bar * np.sum(s ** nb))
    edge = 2 * s**w * (1 - s**w) / p_bar if p_bar > 0 else 2 * w
    return p_bar * ((n - 2 * w) * s ** (2 * w) + edge)


def predict(sim: SimRun) -> Predictions:
    """Analytic predictions for the tracked quantities of ``sim``.

    Standard errors are binomial, conditioned on the realised number of
    trials (pulses sent, pairs formed) where that is the natural
    denominator. Count quantities use a delta-method error over the
    underlying Poisson counts plus the binomial spread of random pairing.
    """
    sc, t = sim.scenario, sim.tallies
    src = {"a": sc.source_a, "b": sc.source_b}
    ch, match = sc.channel, sc.matching
    k = {
        "a": [src["a"].mu, src["a"].nu, 0.0, 0.0],
        "b": [src["b"].mu, src["b"].nu, 0.0, 0.0],
    }
    p = {
        s: [src[s].p_mu, src[s].p_nu, src[s].p_o, src[s].p_ohat] for s in ("a", "b")
    }
    N = sim.N_sim
    vals: dict[str, Prediction] = {}
    gains = np.zeros((4, 4))
    for i, la in enumerate(LABELS):
        for j, lb in enumerate(LABELS):
            q = float(average_gain(k["a"][i], k["b"][j], ch))
            gains[i, j] = q
            vals[f"gain_{la}_{lb}"] = Prediction(q, _binom_se(q, int(t.sent[i, j])))
    pa, pb = np.array(p["a"], float), np.array(p["b"], float)
    p_bar = float(pa @ gains @ pb)
    vals["detections"] = Prediction(N * p_bar, math.sqrt(N * p_bar * (1 - p_bar)))
    n_tc = max(int(round(match.N_Tc)), 1)
    e2 = _expected_case2(p_bar, N, n_tc - 1)
    vals["case2"] = Prediction(e2, math.sqrt(max(e2, 1.0)))
    e1 = N * p_bar - e2
    vals["case1"] = Prediction(e1, math.sqrt(N * p_bar * (1 - p_bar) + max(e2, 1.0)))

    if match.mode == "arbitrary":
        x = {(i, j): N * pa[i] * pb[j] * gains[i, j] for i in (MU, O) for j in (MU, O)}
        args = (x[MU, O], x[O, MU], x[MU, MU], x[O, O])
        z = z_match_arbitrary(*args)
        vals["n_C"] = Prediction(z.n_C, _count_se(args, "n_C", z))
        vals["n_E"] = Prediction(z.n_E, _count_se(args, "n_E", z))
        n_z = z.n_C + z.n_E
        vals["E_z"] = Prediction(z.E_z, math.sqrt(_binom_se(z.E_z, n_z) ** 2 + _ez_delta_var(args)))

    M = match.M
    phases = slice_phases(M)[: M // 2]
    nu_a, nu_b = src["a"].nu, src["b"].nu
    if sim.kappa and match.mode == "short":
        # the absolute drift offset wanders over the run, so every group
        # sees a uniformly distributed phase
        span = sim.kappa * match.T_c
        grid = 2 * np.pi * np.arange(64) / 64
        avg = np.mean([drift_averaged_error_fraction_single(nu_a, nu_b, ph, span, ch) for ph in grid])
        f = np.full(M // 2, avg)
    else:
        f = np.asarray(pair_error_fraction(nu_a, nu_b, phases, 0.0, ch), dtype=float)
    for m in range(M // 2):
        vals[f"x_error_slice_{m}"] = Prediction(float(f[m]), _binom_se(float(f[m]), int(t.x_pairs[m])))
    n_x = int(t.x_pairs.sum())
    if n_x:
        e_x = float(np.sum(t.x_pairs * f) / n_x)
        se = math.sqrt(float(np.sum(t.x_pairs * f * (1 - f)))) / n_x
    else:
        e_x, se = 0.0, 0.0
    vals["E_x"] = Prediction(e_x, se)
    vals["e_oo_d"] = Prediction(0.5, _binom_se(0.5, t.x_oo_d))
    return Predictions(sc, N, vals)


def drift_averaged_error_fraction_single(k_a, k_b, phi, span, ch, nodes: int = 257) -> float:
    """Pair error at one phase group under linear drift over the window."""
    from scipy.integrate import simpson

    u = np.linspace(0.0, 1.0, nodes)
    f = pair_error_fraction(k_a, k_b, phi, span * u, ch)
    return float(simpson(f * 2 * (1 - u), x=u))


def _count_se(args, name: str, z) -> float:
    """Delta-method error of a matched-pair count plus pairing spread."""
    base = np.array(args, dtype=float)
    grad = np.zeros(4)
    for i in range(4):
        h = max(base[i] * 1e-6, 1e-6)
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] = max(dn[i] - h, 0.0)
        grad[i] = (getattr(z_match_arbitrary(*up), name) - getattr(z_match_arbitrary(*dn), name)) / (up[i] - dn[i])
    var = float(np.sum(grad**2 * base))
    x0, x1 = base[1] + base[3], base[0] + base[2]
    pairs = min(x0, x1)
    value = getattr(z, name)
    if pairs > 0:
        prob = value / pairs
        var += pairs * prob * (1 - prob)
    return math.sqrt(max(var, 1.0))


def _ez_delta_var(args) -> float:
    base = np.array(args, dtype=float)
    grad = np.zeros(4)
    for i in range(4):
        h = max(base[i] * 1e-6, 1e-6)
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] = max(dn[i] - h, 0.0)
        grad[i] = (z_match_arbitrary(*up).E_z - z_match_arbitrary(*dn).E_z) / (up[i] - dn[i])
    return float(np.sum(grad**2 * base))


def validate(sim: SimRun, predictions: Predictions | None = None,
             significance: float = SIGNIFICANCE) -> ValidationReport:
    """Compare empirical tallies with predictions.

    A check passes when ``|z| <= significance``. When the standard error is
    zero, the check passes only on exact agreement.

    Raises:
        ScenarioMismatchError: if the predictions were made for a different
            scenario or run length.
    """
    if predictions is None:
        predictions = predict(sim)
    if predictions.scenario != sim.scenario or predictions.N_sim != sim.N_sim:
        raise ScenarioMismatchError("predictions belong to a different scenario or run length")
    emp = empirical(sim)
    checks = []
    for name, pred in predictions.values.items():
        if name not in emp:
            continue
        diff = emp[name] - pred.value
        if pred.std_error > 0:
            z = diff / pred.std_error
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        checks.append(Check(name, emp[name], pred.value, z, abs(z) <= significance))
    return ValidationReport(checks, significance)
