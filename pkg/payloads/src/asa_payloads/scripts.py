"""Self-contained payload scripts.

Each PayloadScript is a standalone program: standard library only, no
network, all outputs written under the current working directory with the
fixed names in ``declared_outputs``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

RW_OUTPUTS = ("data.csv", "conformation.svg", "fit.svg", "report.md")


@dataclass(frozen=True)
class PayloadScript:
    name: str
    source: str
    declared_outputs: tuple[str, ...]

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / f"{self.name}.py"
        path.write_text(self.source, encoding="utf-8")
        return path


_RW_TEMPLATE = '''\
"""Random-walk scaling study: freely jointed chains in 3D.

Samples chains at each requested length N, fits <R^2> ~ N^nu on a log-log
scale, and writes the data table, a conformation picture, the fit plot, and
a four-section report into the working directory.
"""

import argparse
import csv
import math
import random
import sys


def chain(n, rng):
    """One freely jointed chain of n unit bonds; list of (x, y, z)."""
    x = y = z = 0.0
    points = [(0.0, 0.0, 0.0)]
    for _ in range(n):
        dx, dy, dz = rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1)
        norm = math.sqrt(dx * dx + dy * dy + dz * dz) or 1.0
        x += dx / norm
        y += dy / norm
        z += dz / norm
        points.append((x, y, z))
    return points


def mean_r2(n, samples, rng):
    total = 0.0
    for _ in range(samples):
        end = chain(n, rng)[-1]
        total += end[0] ** 2 + end[1] ** 2 + end[2] ** 2
    return total / samples


def fit_loglog(points):
    """Least-squares slope/intercept of ln(r2) against ln(n), plus r^2."""
    xs = [math.log(n) for n, _ in points]
    ys = [math.log(r2) for _, r2 in points]
    k = len(xs)
    mx = sum(xs) / k
    my = sum(ys) / k
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    syy = sum((y - my) ** 2 for y in ys)
    slope = sxy / sxx
    intercept = my - slope * mx
    r_squared = 1.0 if syy == 0 else (sxy * sxy) / (sxx * syy)
    return slope, intercept, r_squared


def polyline_svg(points, path):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    span = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    scale = 360.0 / span

    def sx(v):
        return 20 + (v - min(xs)) * scale

    def sy(v):
        return 20 + (v - min(ys)) * scale

    coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    with open(path, "w") as fh:
        fh.write(
            '<svg xmlns="http://www.w3.org/2000/svg" width="400" height="400">'
            f'<polyline points="{coords}" fill="none" stroke="black"/></svg>'
        )


def fit_svg(points, slope, intercept, path):
    lnx = [math.log(n) for n, _ in points]
    lny = [math.log(r2) for _, r2 in points]
    x0, x1 = min(lnx), max(lnx)
    y_all = lny + [slope * x0 + intercept, slope * x1 + intercept]
    y0, y1 = min(y_all), max(y_all)

    def sx(v):
        return 40 + (v - x0) / (x1 - x0 or 1.0) * 320

    def sy(v):
        return 360 - (v - y0) / (y1 - y0 or 1.0) * 320

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="400" height="400">',
        f'<line x1="{sx(x0):.1f}" y1="{sy(slope * x0 + intercept):.1f}" '
        f'x2="{sx(x1):.1f}" y2="{sy(slope * x1 + intercept):.1f}" '
        'stroke="gray"/>',
    ]
    for x, y in zip(lnx, lny):
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="4"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def main(argv=None):
    parser = argparse.ArgumentParser(description="random walk scaling study")
    parser.add_argument("n", nargs="*", type=int, default=__NS__,
                        help="chain lengths to sample")
    parser.add_argument("--samples", type=int, default=__SAMPLES__,
                        help="chains per length")
    parser.add_argument("--seed", type=int, default=__SEED__)
    args = parser.parse_args(argv)
    if not args.n:
        parser.error("at least one chain length N is required")
    if args.samples < 1 or any(n < 1 for n in args.n):
        parser.error("lengths and sample count must be positive")

    rng = random.Random(args.seed)
    points = [(n, mean_r2(n, args.samples, rng)) for n in sorted(args.n)]
    slope, intercept, r_squared = fit_loglog(points)

    with open("data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "mean_r2"])
        for n, r2 in points:
            writer.writerow([n, f"{r2:.6f}"])

    show = chain(max(args.n), random.Random(args.seed + 1))
    polyline_svg([(p[0], p[1]) for p in show], "conformation.svg")
    fit_svg(points, slope, intercept, "fit.svg")

    lines = ", ".join(f"N={n}: {r2:.2f}" for n, r2 in points)
    report = (
        "# Introduction\\n"
        "Scaling of the mean square end-to-end distance of freely jointed "
        "chains.\\n\\n"
        "# Methods\\n"
        f"{args.samples} chains per length at N in "
        f"{sorted(args.n)}; isotropic unit bonds; least-squares fit of "
        "ln <R^2> against ln N.\\n\\n"
        "# Results\\n"
        f"Measured {lines}. The fit gives nu = {slope:.3f} with "
        f"r_squared = {r_squared:.4f}.\\n\\n"
        "# Conclusion\\n"
        "The mean square end-to-end distance grows linearly with chain "
        "length, consistent with ideal random-walk statistics.\\n"
    )
    with open("report.md", "w") as fh:
        fh.write(report)

    print(f"nu = {slope:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
'''


def provided_rw_payload(
    ns: list[int] | tuple[int, ...] = (10, 100, 1000),
    samples: int = 500,
    seed: int = 2024,
) -> PayloadScript:
    """The provided random-walk simulation program.

    The given lengths and sample count become the script's defaults; both can
    still be overridden on its command line.
    """
    source = (
        _RW_TEMPLATE
        .replace("__NS__", repr(list(ns)))
        .replace("__SAMPLES__", repr(int(samples)))
        .replace("__SEED__", repr(int(seed)))
    )
    return PayloadScript("rw_payload", source, RW_OUTPUTS)
