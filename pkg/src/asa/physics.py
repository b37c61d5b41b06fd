"""Ground-truth physics used to grade agent outputs: freely jointed chains,
self-avoiding walks on the cubic lattice, scaling fits, and Newtonian
trajectories.

Exponent convention throughout: nu is the exponent of <R^2> ~ N^nu, i.e.
twice the conventional Flory exponent (random walk: 1, SAW: ~1.18).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

G = 6.674e-11  # m^3 kg^-1 s^-2

RW_NU = 1.0
SAW_NU_LOW, SAW_NU_HIGH = 1.10, 1.25
RW_NU_TOL = 0.08


class NTooLarge(Exception):
    """Exhaustive SAW enumeration requested beyond the supported length."""


class DegenerateInput(Exception):
    """Scaling fit input admits no log-log regression."""


class NumericalBlowup(Exception):
    """Trajectory integration produced a non-finite coordinate."""


@dataclass(frozen=True)
class Conformation:
    """One chain: N segments, N+1 ordered 3D positions."""

    positions: np.ndarray  # (N+1, 3)

    @property
    def n_segments(self) -> int:
        return len(self.positions) - 1

    def end_to_end_sq(self) -> float:
        r = self.positions[-1] - self.positions[0]
        return float(np.dot(r, r))


@dataclass(frozen=True)
class ScalingFit:
    nu: float
    log_prefactor: float
    r_squared: float


@dataclass(frozen=True)
class BodyState:
    mass: float
    position: np.ndarray  # (3,) metres
    velocity: np.ndarray  # (3,) m/s

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")


# ---------------------------------------------------------------------------
# Off-lattice random walk
# ---------------------------------------------------------------------------

def sample_unit_sphere(rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on S^2 via a normalized isotropic Gaussian draw."""
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_walk_chain(N: int, b: float, rng: np.random.Generator) -> Conformation:
    """Freely jointed chain: N independent isotropic steps of length b."""
    if N < 1:
        raise ValueError("N must be >= 1")
    steps = rng.normal(size=(N, 3))
    steps *= b / np.linalg.norm(steps, axis=1, keepdims=True)
    positions = np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])
    return Conformation(positions)


def rw_mean_r2(
    N: int, n_chains: int, rng: np.random.Generator, b: float = 1.0
) -> tuple[float, float]:
    """Vectorized <R^2> estimate over n_chains walks: (mean, standard error)."""
    steps = rng.normal(size=(n_chains, N, 3))
    steps *= b / np.linalg.norm(steps, axis=2, keepdims=True)
    ends = steps.sum(axis=1)
    r2 = np.einsum("ij,ij->i", ends, ends)
    return float(r2.mean()), float(r2.std(ddof=1) / math.sqrt(n_chains))


# ---------------------------------------------------------------------------
# Cubic-lattice self-avoiding walk: pivot sampler + exact enumeration oracle
# ---------------------------------------------------------------------------

_NEIGHBORS = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]


def _signed_permutations() -> list[tuple[tuple[int, int, int], tuple[int, int, int]]]:
    """The 48 cubic-lattice point symmetries as (axis permutation, signs)."""
    group = []
    for perm in itertools.permutations((0, 1, 2)):
        for signs in itertools.product((1, -1), repeat=3):
            group.append((perm, signs))
    return group


_SYMMETRIES = _signed_permutations()


def _apply_symmetry(sym, v: tuple[int, int, int]) -> tuple[int, int, int]:
    perm, signs = sym
    return (signs[0] * v[perm[0]], signs[1] * v[perm[1]], signs[2] * v[perm[2]])


def _pivot_step(positions: list[tuple[int, int, int]], rng) -> bool:
    """One attempted pivot move; mutates positions in place on acceptance."""
    n = len(positions) - 1
    p = int(rng.integers(1, n)) if n > 1 else 1
    if p >= n:
        return False
    sym = _SYMMETRIES[int(rng.integers(len(_SYMMETRIES)))]
    px, py, pz = positions[p]
    head = set(positions[: p + 1])
    new_tail = []
    for k in range(p + 1, n + 1):
        x, y, z = positions[k]
        dx = _apply_symmetry(sym, (x - px, y - py, z - pz))
        site = (px + dx[0], py + dx[1], pz + dx[2])
        if site in head:
            return False
        new_tail.append(site)
    positions[p + 1 :] = new_tail
    return True


def saw_chain_pivot(
    N: int, rng: np.random.Generator, n_pivot_steps: int
) -> Conformation:
    """Self-avoiding walk equilibrated by the pivot algorithm from a rod.

    Each step picks a random interior pivot site and a random lattice
    symmetry, accepting iff the transformed walk remains self-avoiding.
    """
    if N < 1 or n_pivot_steps < 1:
        raise ValueError("N and n_pivot_steps must be >= 1")
    positions = [(k, 0, 0) for k in range(N + 1)]
    if N > 1:
        for _ in range(n_pivot_steps):
            _pivot_step(positions, rng)
    return Conformation(np.array(positions, dtype=float))


def saw_mean_r2(
    N: int,
    n_samples: int,
    rng: np.random.Generator,
    equil_steps: int | None = None,
    stride: int | None = None,
) -> tuple[float, float]:
    """<R^2> over a pivot Markov chain: (mean, standard error).

    Samples are decorrelated by `stride` attempted pivots; the standard error
    comes from batch means, which stays honest under residual correlation.
    """
    if equil_steps is None:
        equil_steps = 10 * max(N, 5)
    if stride is None:
        stride = max(2, N // 2)
    positions = [(k, 0, 0) for k in range(N + 1)]
    if N > 1:
        for _ in range(equil_steps):
            _pivot_step(positions, rng)
    samples = np.empty(n_samples)
    for i in range(n_samples):
        if N > 1:
            for _ in range(stride):
                _pivot_step(positions, rng)
        ex = positions[-1][0] - positions[0][0]
        ey = positions[-1][1] - positions[0][1]
        ez = positions[-1][2] - positions[0][2]
        samples[i] = ex * ex + ey * ey + ez * ez
    mean = float(samples.mean())
    n_batches = min(50, n_samples)
    batches = samples[: n_samples - n_samples % n_batches].reshape(n_batches, -1)
    bm = batches.mean(axis=1)
    se = float(bm.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    return mean, se


ENUM_N_MAX = 6


def enumerate_saw_exact(N: int) -> Fraction:
    """Exact <R^2> over ALL cubic-lattice SAWs of length N, by DFS."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > ENUM_N_MAX:
        raise NTooLarge(f"N={N} exceeds the enumeration limit {ENUM_N_MAX}")
    count = 0
    total = 0

    def dfs(site: tuple[int, int, int], visited: set, depth: int) -> None:
        nonlocal count, total
        if depth == N:
            count += 1
            total += site[0] ** 2 + site[1] ** 2 + site[2] ** 2
            return
        for dx, dy, dz in _NEIGHBORS:
            nxt = (site[0] + dx, site[1] + dy, site[2] + dz)
            if nxt in visited:
                continue
            visited.add(nxt)
            dfs(nxt, visited, depth + 1)
            visited.remove(nxt)

    origin = (0, 0, 0)
    dfs(origin, {origin}, 0)
    return Fraction(total, count)


# ---------------------------------------------------------------------------
# Scaling fit
# ---------------------------------------------------------------------------

def fit_scaling(points: list[tuple[float, float]]) -> ScalingFit:
    """OLS on (ln N, ln <R^2>); nu is the slope."""
    if len(points) < 3:
        raise DegenerateInput("need at least 3 points")
    ns = np.array([p[0] for p in points], dtype=float)
    r2s = np.array([p[1] for p in points], dtype=float)
    if np.any(ns <= 0) or np.any(r2s <= 0):
        raise DegenerateInput("all values must be strictly positive")
    if len(set(ns.tolist())) != len(ns):
        raise DegenerateInput("N values must be distinct")
    x = np.log(ns)
    y = np.log(r2s)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r_squared = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(nu=slope, log_prefactor=float(intercept), r_squared=r_squared)


def grade_exponent(reported_nu: float, model: str) -> bool:
    """Harness acceptance band for a reported <R^2> ~ N^nu exponent."""
    if model == "RW":
        return abs(reported_nu - RW_NU) <= RW_NU_TOL
    if model == "SAW":
        return SAW_NU_LOW <= reported_nu <= SAW_NU_HIGH
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Newtonian trajectories (fixed-step RK4)
# ---------------------------------------------------------------------------

def _accelerations(
    positions: np.ndarray, masses: np.ndarray, probe_pos: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gravitational accelerations of the massive bodies and the massless probe."""
    nb = len(masses)
    acc = np.zeros((nb, 3))
    for i in range(nb):
        d = positions - positions[i]
        r2 = np.einsum("ij,ij->i", d, d)
        r2[i] = 1.0
        inv_r3 = np.where(np.arange(nb) == i, 0.0, r2**-1.5)
        acc[i] = G * np.einsum("i,ij->j", masses * inv_r3, d)
    dp = positions - probe_pos
    r2p = np.einsum("ij,ij->i", dp, dp)
    probe_acc = G * np.einsum("i,ij->j", masses * r2p**-1.5, dp)
    return acc, probe_acc


def simulate_trajectory(
    bodies: list[BodyState],
    probe: BodyState,
    dt: float,
    t_end: float,
) -> tuple[np.ndarray, tuple[int, float, float]]:
    """Integrate a massless probe through mutually gravitating bodies.

    Fixed-step classic RK4. Returns the probe trajectory samples (one row of
    [t, x, y, z, vx, vy, vz] per step, including t=0) and the closest
    approach over all steps as (body index, distance, time).
    """
    if dt <= 0 or t_end < dt:
        raise ValueError("dt must be positive and t_end >= dt")
    pos = np.array([b.position for b in bodies], dtype=float)
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            if np.allclose(pos[i], pos[j]):
                raise ValueError("two bodies coincide")
    masses = np.array([b.mass for b in bodies], dtype=float)
    vel = np.array([b.velocity for b in bodies], dtype=float)
    ppos = np.array(probe.position, dtype=float)
    pvel = np.array(probe.velocity, dtype=float)

    n_steps = int(round(t_end / dt))
    samples = np.empty((n_steps + 1, 7))
    samples[0] = [0.0, *ppos, *pvel]
    best = (0, float("inf"), 0.0)

    def closest(t, probe_pos, body_pos, current):
        d = np.linalg.norm(body_pos - probe_pos, axis=1)
        i = int(np.argmin(d))
        if d[i] < current[1]:
            return (i, float(d[i]), t)
        return current

    best = closest(0.0, ppos, pos, best)

    def deriv(state):
        bp, bv, qp, qv = state
        ba, qa = _accelerations(bp, masses, qp)
        return (bv, ba, qv, qa)

    state = (pos, vel, ppos, pvel)
    for step in range(1, n_steps + 1):
        k1 = deriv(state)
        k2 = deriv(tuple(s + 0.5 * dt * k for s, k in zip(state, k1)))
        k3 = deriv(tuple(s + 0.5 * dt * k for s, k in zip(state, k2)))
        k4 = deriv(tuple(s + dt * k for s, k in zip(state, k3)))
        state = tuple(
            s + (dt / 6.0) * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )
        t = step * dt
        if not all(np.isfinite(s).all() for s in state):
            raise NumericalBlowup(f"non-finite state at t={t}")
        samples[step] = [t, *state[2], *state[3]]
        best = closest(t, state[2], state[0], best)
    return samples, best


def total_energy(bodies: list[BodyState]) -> float:
    """Kinetic plus pairwise gravitational potential energy (massive bodies)."""
    e = 0.0
    for i, b in enumerate(bodies):
        e += 0.5 * b.mass * float(np.dot(b.velocity, b.velocity))
        for j in range(i + 1, len(bodies)):
            r = float(np.linalg.norm(bodies[j].position - b.position))
            e -= G * b.mass * bodies[j].mass / r
    return e


# ---------------------------------------------------------------------------
# Scaling study outputs: CSV data + self-contained SVG plot
# ---------------------------------------------------------------------------

def write_scaling_csv(
    rows: list[tuple[float, float, float]], path: str | Path
) -> None:
    """Rows of (N, mean R^2, standard error)."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "mean_r2", "stderr"])
        for n, mean, se in rows:
            writer.writerow([n, mean, se])


def write_scaling_svg(
    points: list[tuple[float, float]],
    fit: ScalingFit,
    path: str | Path,
    title: str = "scaling fit",
) -> None:
    """Log-log scatter with the fitted line, as plain hand-written SVG."""
    width, height, margin = 480, 360, 50
    xs = [math.log10(p[0]) for p in points]
    ys = [math.log10(p[1]) for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    ln10 = math.log(10)
    fy0 = (fit.log_prefactor + fit.nu * x0 * ln10) / ln10
    fy1 = (fit.log_prefactor + fit.nu * x1 * ln10) / ln10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{title} '
        f"(nu={fit.nu:.4f}, r2={fit.r_squared:.5f})</text>",
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">log10 N</text>',
        f'<line x1="{sx(x0):.1f}" y1="{sy(fy0):.1f}" x2="{sx(x1):.1f}" '
        f'y2="{sy(fy1):.1f}" stroke="crimson"/>',
    ]
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="4" fill="navy"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
