"""Private state signals, traveler beliefs and the system's occupancy forecast."""
from __future__ import annotations

import csv
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

ROW_TOL = 1e-9


class DegenerateSignalError(ValueError):
    def __init__(self, edge, msg="zero normalizer"):
        super().__init__(f"edge {edge}: {msg}")
        self.edge = edge


def check_distribution(vec: np.ndarray, what: str = "distribution", tol: float = ROW_TOL) -> None:
    vec = np.asarray(vec, dtype=float)
    if np.any(vec < -tol) or np.any(np.abs(vec.sum(axis=-1) - 1.0) > tol):
        raise ValueError(f"{what} is not a probability vector (sums {vec.sum(axis=-1)})")


class Signal:
    """Per-edge right-stochastic matrices; row eta, column lambda.

    Edges without a matrix carry no information (identity).
    """

    def __init__(self, matrices: Mapping[int, np.ndarray], check: bool = True):
        self.matrices = {int(e): np.asarray(m, dtype=float) for e, m in matrices.items()}
        if check:
            for e, m in self.matrices.items():
                if m.ndim != 2 or m.shape[0] != m.shape[1]:
                    raise ValueError(f"edge {e}: signal matrix must be square, got {m.shape}")
                check_distribution(m, f"signal row on edge {e}")

    @classmethod
    def identity(cls, capacities: Mapping[int, int]) -> "Signal":
        return cls({e: np.eye(c + 1) for e, c in capacities.items()})

    @classmethod
    def uniform(cls, capacities: Mapping[int, int]) -> "Signal":
        return cls({e: np.full((c + 1, c + 1), 1.0 / (c + 1)) for e, c in capacities.items()})

    @classmethod
    def random(cls, capacities: Mapping[int, int], rng: np.random.Generator) -> "Signal":
        return cls({e: rng.dirichlet(np.ones(c + 1), size=c + 1) for e, c in capacities.items()})

    def __getitem__(self, edge):
        return self.matrices[edge]

    def __contains__(self, edge):
        return edge in self.matrices

    @property
    def edges(self):
        return sorted(self.matrices)

    def max_row_error(self) -> float:
        if not self.matrices:
            return 0.0
        return max(float(np.max(np.abs(m.sum(axis=1) - 1.0))) for m in self.matrices.values())

    def rows(self, traveler=None) -> Iterable[tuple]:
        for e in self.edges:
            m = self.matrices[e]
            for i in range(m.shape[0]):
                for j in range(m.shape[1]):
                    yield (traveler, e, i, j, float(m[i, j]))


def bayes_update(prior: Mapping[int, np.ndarray], signal: Signal) -> dict:
    """Posterior over next-step counts: sum over the current count eta of prior(eta) * mu(eta, .)."""
    post = {}
    for e, phi in prior.items():
        phi = np.asarray(phi, dtype=float)
        if e not in signal:
            post[e] = phi
            continue
        mu = signal[e]
        if mu.shape[0] != phi.shape[0]:
            raise ValueError(f"edge {e}: belief has {phi.shape[0]} states, signal {mu.shape[0]}")
        joint = phi @ mu
        z = joint.sum()
        if not z > 0:
            raise DegenerateSignalError(e)
        post[e] = joint / z
    return post


def initial_belief(capacities: Mapping[int, int], observed: Optional[Mapping[int, int]] = None,
                   mode: str = "observed") -> dict:
    """Point mass at the last observed count, else uniform over 0..capacity."""
    observed = observed or {}
    out = {}
    for e, c in capacities.items():
        if mode == "observed" and e in observed:
            v = np.zeros(c + 1)
            v[min(int(observed[e]), c)] = 1.0
        elif mode in ("observed", "uniform"):
            v = np.full(c + 1, 1.0 / (c + 1))
        else:
            raise ValueError(f"unknown prior mode {mode!r}")
        out[e] = v
    return out


def presence_matrix(schedules: Sequence[Sequence[tuple]], n_edges: int, t0: int, horizon: int) -> np.ndarray:
    """(n_paths, n_edges, horizon) indicator of being on each edge at ticks t0..t0+horizon-1.

    Each schedule is a list of (edge, enter, exit) with the traveler on the
    edge for enter <= t < exit.
    """
    out = np.zeros((len(schedules), n_edges, horizon), dtype=float)
    for p, sched in enumerate(schedules):
        for edge, enter, exit_ in sched:
            a = max(enter - t0, 0)
            b = min(exit_ - t0, horizon)
            if b > a:
                out[p, edge, a:b] = 1.0
    return out


def presence_probability(profile: Sequence[float], schedules: Sequence[Sequence[tuple]], edge: int,
                         time: int, prev_edge: Optional[int] = None) -> float:
    """Probability the traveler is on `edge` at `time`.

    With `prev_edge`, the probability is conditioned on having been on
    `prev_edge` one tick earlier (zero when that event has no mass).
    """
    def on(sched, e, t):
        return any(s == e and a <= t < b for s, a, b in sched)

    profile = np.asarray(profile, dtype=float)
    hit = np.array([on(s, edge, time) for s in schedules], dtype=float)
    if prev_edge is None:
        return float(profile @ hit)
    before = np.array([on(s, prev_edge, time - 1) for s in schedules], dtype=float)
    denom = float(profile @ before)
    if denom <= 0:
        return 0.0
    return float(profile @ (hit * before)) / denom


def psi_recursion(rhos: Sequence[float], capacity: int) -> np.ndarray:
    """Distribution of how many of the travelers are present, counts above
    `capacity` lumped at `capacity`. Adds one traveler at a time:
    psi(lam | L) = rho_L psi(lam - 1 | L - 1) + (1 - rho_L) psi(lam | L - 1).
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    psi = np.zeros(capacity + 1)
    psi[0] = 1.0
    for r in rhos:
        nxt = (1.0 - r) * psi
        nxt[1:] += r * psi[:-1]
        nxt[-1] += r * psi[-1]
        psi = nxt
    return psi


def poisson_binomial(rhos: np.ndarray) -> np.ndarray:
    """Untruncated count distribution for a batch: rhos (L, ...) -> (..., L + 1)."""
    rhos = np.asarray(rhos, dtype=float)
    n = rhos.shape[0]
    out = np.zeros(rhos.shape[1:] + (n + 1,))
    out[..., 0] = 1.0
    for k in range(n):
        r = rhos[k][..., None]
        nxt = (1.0 - r) * out
        nxt[..., 1:] += r * out[..., :-1]
        out = nxt
    return out


SIGNAL_COLUMNS = ("tick", "traveler", "edge", "row", "column", "probability")


def write_signals_csv(path, rows: Iterable[tuple], leading: Sequence[str] = ()) -> None:
    """One line per signal matrix entry; `leading` names extra columns in front."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(tuple(leading) + SIGNAL_COLUMNS)
        for r in rows:
            w.writerow(r[:-1] + (f"{r[-1]:.12g}",))
