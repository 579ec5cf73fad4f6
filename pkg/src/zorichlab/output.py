"""Writers for the delimited output formats.

Every file carries a leading header naming its columns and units.  Floats are
rendered with repr (shortest round trip), so identical inputs give byte
identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_point_cloud(path, points) -> None:
    """One "x y z" triple per line, scene units."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# x y z (scene units)\n")
        for p in points:
            fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")


def write_triangle_soup(path, triangles) -> None:
    """One triangle per line as nine reals (x y z for each vertex)."""
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 9)
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# x1 y1 z1 x2 y2 z2 x3 y3 z3 (scene units, one triangle per line)\n")
        for t in triangles:
            fh.write(" ".join(repr(float(v)) for v in t) + "\n")


def write_report(path, results, overall: bool) -> None:
    """One machine-parsable key=value record per line plus an overall line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# verification report: one record per line, key=value pairs\n")
        for r in results:
            fh.write(
                "check={name} claim={claim} value={value} bound={bound} "
                "tolerance={tol} pass={ok}\n".format(
                    name=r.name,
                    claim=r.claim,
                    value=_fmt(r.value),
                    bound=_fmt(r.bound),
                    tol=_fmt(r.tolerance),
                    ok=_fmt(r.passed),
                )
            )
        fh.write(
            "overall pass={ok} checks={n} failed={k}\n".format(
                ok=_fmt(overall),
                n=len(results),
                k=sum(1 for r in results if not r.passed),
            )
        )
