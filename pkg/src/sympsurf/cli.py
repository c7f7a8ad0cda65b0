"""Command line front end.

JSON in, JSON out, one subcommand per task.  Every output carries the package
version, outputs are bit-identical under a fixed seed, and failures use a
fixed exit code scheme: 2 for unreadable input, 3 for violated preconditions,
4 for numerical failures.
"""

import json
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from .acoords import ACoords, flip_acoords
from .core import SympContext, maslov_index, random_decorated, random_lagrangian
from .invariants import check_ptolemy, lambda_length
from .pairforms import canonical_pair, classify_pair
from .surface import PRESETS, IdealTriangulation, parse_arrow
from .xcoords import (
    XECoords,
    XPlusDeltaCoords,
    _en_to_payload,
    canonical_zclass,
    count_components,
    extract_xE,
    hol_xE,
    hol_xplus,
    pi_components,
    random_xe,
    xover_of_xe,
)

EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_NUMERICAL = 4


@dataclass
class RunConfig:
    """Knobs shared by the subcommands."""

    tol: float = 1e-9
    cluster_tol: float = 1e-6
    seed: int = 0
    src: str = None
    out: str = None

    def __post_init__(self):
        if self.tol <= 0 or self.cluster_tol <= 0:
            _fail(EXIT_PRECONDITION, "tolerances must be positive")


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _emit(payload, out):
    payload["version"] = __version__
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        _fail(EXIT_PARSE, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_PARSE, f"malformed JSON in {path}: {exc}")


def _load_surface(spec):
    """A triangulation from a preset name, a JSON file, or an inline object."""
    if isinstance(spec, dict):
        try:
            return IdealTriangulation.from_json(json.dumps(spec))
        except (KeyError, TypeError, ValueError) as exc:
            _fail(EXIT_PARSE, f"bad triangulation object: {exc}")
    if spec in PRESETS:
        return PRESETS[spec]()
    try:
        with open(spec) as fh:
            return IdealTriangulation.from_json(fh.read())
    except OSError:
        _fail(
            EXIT_PARSE,
            f"unknown surface {spec!r}; use one of {sorted(PRESETS)} or a JSON file",
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        _fail(EXIT_PARSE, f"bad triangulation in {spec}: {exc}")


def _zclass_payload(z):
    return {
        "x_g": z.x_g,
        "signatures": {f"{f}.{s}": int(v) for (f, s), v in z.s},
        "residues": {key: int(v) for key, v in z.h},
    }


@click.group()
@click.version_option(__version__)
def main():
    """Invariants and coordinates of framed symplectic surface-group
    representations."""


@main.command("classify-pair")
@click.option("--in", "src", required=True, help="JSON file with matrices b0 and b1.")
@click.option("--out", default=None, help="Output path (default: stdout).")
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--cluster-tol", default=1e-6, show_default=True)
@click.option("--seed", default=0, show_default=True)
def cmd_classify_pair(src, out, tol, cluster_tol, seed):
    """Canonical form of a pair of symmetric bilinear forms."""
    cfg = RunConfig(tol=tol, cluster_tol=cluster_tol, seed=seed, src=src, out=out)
    data = _load_json(cfg.src)
    try:
        b0 = np.array(data["b0"], dtype=float)
        b1 = np.array(data["b1"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        _fail(EXIT_PARSE, f"input needs square matrices b0 and b1: {exc}")
    try:
        en, P = classify_pair(
            b0, b1, tol=cfg.tol, cluster_tol=cfg.cluster_tol, seed=cfg.seed
        )
    except ValueError as exc:
        _fail(EXIT_PRECONDITION, str(exc))
    c0, c1 = canonical_pair(en)
    _emit(
        {
            "en": _en_to_payload(en),
            "transform": P.tolist(),
            "residuals": {
                "b0": float(np.linalg.norm(P.T @ b0 @ P - c0)),
                "b1": float(np.linalg.norm(P.T @ b1 @ P - c1)),
            },
        },
        cfg.out,
    )


@main.command("holonomy")
@click.option("--surface", required=True, help="Preset name or triangulation JSON file.")
@click.option("--in", "src", required=True, help="Chart JSON (xplus_delta or xE).")
@click.option("--out", default=None)
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--cluster-tol", default=1e-6, show_default=True)
def cmd_holonomy(surface, src, out, tol, cluster_tol):
    """Framed twisted system of a coordinate chart, with its invariants."""
    cfg = RunConfig(tol=tol, cluster_tol=cluster_tol, src=src, out=out)
    tri = _load_surface(surface)
    data = _load_json(cfg.src)
    chart = data.get("chart") if isinstance(data, dict) else None
    try:
        if chart == "xplus_delta":
            x = XPlusDeltaCoords.from_json(json.dumps(data))
        elif chart == "xE":
            x = XECoords.from_json(json.dumps(data))
        else:
            _fail(EXIT_PARSE, f"unknown chart kind {chart!r}")
    except (KeyError, TypeError, ValueError) as exc:
        _fail(EXIT_PARSE, f"bad chart payload: {exc}")
    try:
        if chart == "xplus_delta":
            sys_ = hol_xplus(tri, x, tol=cfg.tol)
        else:
            sys_ = hol_xE(tri, x, tol=cfg.tol)
    except ValueError as exc:
        _fail(EXIT_PRECONDITION, str(exc))
    try:
        xe = extract_xE(sys_, cluster_tol=cfg.cluster_tol)
        z = canonical_zclass(tri, pi_components(tri, xover_of_xe(tri, xe)))
    except ValueError as exc:
        _fail(EXIT_NUMERICAL, f"component class extraction failed: {exc}")
    payload = {
        "system": json.loads(sys_.to_json()),
        "mu_T": {str(f): int(sys_.mu_T(f)) for f in range(tri.num_faces)},
        "maximal": bool(sys_.is_maximal()),
        "component_class": _zclass_payload(z),
    }
    if tri.boundary_sides:
        payload["toledo"] = None
        payload["notice"] = (
            "Toledo number omitted: the triangulation has boundary sides"
        )
    else:
        payload["toledo"] = str(sys_.toledo())
    _emit(payload, cfg.out)


@main.command("flip")
@click.option("--in", "src", required=True, help="JSON with surface and coords.")
@click.option("--edge", "edge_key", required=True, help="Side to flip, as 'face.side'.")
@click.option("--out", default=None)
@click.option("--tol", default=1e-9, show_default=True)
def cmd_flip(src, edge_key, out, tol):
    """Flip one edge of a lambda-length chart."""
    cfg = RunConfig(tol=tol, src=src, out=out)
    data = _load_json(cfg.src)
    try:
        tri = _load_surface(data["surface"])
        a = ACoords.from_json(json.dumps(data["coords"]))
        f, s = edge_key.split(".")
        side = (int(f), int(s))
    except (KeyError, TypeError, ValueError) as exc:
        _fail(EXIT_PARSE, f"input needs surface, coords and a 'face.side' edge: {exc}")
    if side not in tri.sides:
        _fail(EXIT_PRECONDITION, f"{edge_key} is not a side of the triangulation")
    try:
        new_tri, b = flip_acoords(tri, a, side, tol=cfg.tol)
    except ValueError as exc:
        msg = str(exc)
        if "singular" in msg or "non-transverse" in msg:
            _fail(EXIT_NUMERICAL, msg)
        _fail(EXIT_PRECONDITION, msg)
    new_edge = new_tri.edge_of((side[0], 2))
    _emit(
        {
            "surface": json.loads(new_tri.to_json()),
            "coords": json.loads(b.to_json()),
            "new_edge": f"{new_edge[0]}.{new_edge[1]}",
        },
        cfg.out,
    )


@main.command("components")
@click.option("--surface", required=True, help="Preset name or triangulation JSON file.")
@click.option("--n", "n", required=True, type=int)
@click.option(
    "--mode",
    type=click.Choice(["transverse", "maximal", "isogenic"]),
    default="transverse",
    show_default=True,
)
@click.option("--out", default=None)
def cmd_components(surface, n, mode, out):
    """Number of connected components of the framed locus."""
    tri = _load_surface(surface)
    if n < 1:
        _fail(EXIT_PRECONDITION, "n must be at least 1")
    # the isogeny-central count is the transverse formula at trivial x_G
    x_g = 1 if mode == "isogenic" else 2
    count = count_components(tri, n, mode=mode, x_g=x_g)
    _emit({"surface": surface, "n": n, "mode": mode, "count": count}, out)


def _suite_ptolemy(count, rng, tol):
    worst = 0.0
    failures = 0
    for case in range(count):
        ctx = SympContext(1 + case % 3, tol)
        while True:
            vs = [random_decorated(ctx, rng) for _ in range(4)]
            if abs(np.linalg.det(lambda_length(vs[0], vs[2], ctx))) > 1e-2:
                break
        res = check_ptolemy(*vs, ctx)
        worst = max(worst, res)
        failures += res >= 1e-8
    return failures, worst


def _suite_cocycle(count, rng, tol):
    worst = 0.0
    failures = 0
    for case in range(count):
        ctx = SympContext(1 + case % 3, tol)
        L = [random_lagrangian(ctx, rng) for _ in range(4)]
        total = (
            maslov_index(L[0], L[1], L[2], ctx)
            - maslov_index(L[0], L[1], L[3], ctx)
            + maslov_index(L[0], L[2], L[3], ctx)
            - maslov_index(L[1], L[2], L[3], ctx)
        )
        worst = max(worst, abs(total))
        failures += total != 0
    return failures, worst


def _suite_roundtrip_xe(count, rng, tol, cluster_tol):
    from .surface import once_punctured_torus, pair_of_pants, polygon

    tris = (once_punctured_torus(), pair_of_pants(), polygon(5))
    worst = 0.0
    failures = 0
    for case in range(count):
        tri = tris[case % 3]
        n = 1 + case % 3
        xe = random_xe(tri, n, rng)
        back = extract_xE(hol_xE(tri, xe, tol=tol), cluster_tol=cluster_tol)
        ok = back.mu == xe.mu
        for e in tri.internal_edges:
            a, b = xe.en[e], back.en[e]
            ok = ok and a.dn == b.dn
            for f1, f2 in zip(
                (a.lam11, a.lam1m, a.lamm1, a.lammm, a.lamC),
                (b.lam11, b.lam1m, b.lamm1, b.lammm, b.lamC),
            ):
                diff = np.max(np.abs(np.asarray(f1) - np.asarray(f2))) if f1 else 0.0
                worst = max(worst, float(diff))
                ok = ok and diff < 1e-7
        failures += not ok
    return failures, worst


@main.command("proptest")
@click.option(
    "--suite",
    required=True,
    type=click.Choice(["ptolemy", "cocycle", "roundtrip-xE"]),
)
@click.option("--count", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--cluster-tol", default=1e-6, show_default=True)
@click.option("--out", default=None)
def cmd_proptest(suite, count, seed, tol, cluster_tol, out):
    """Run a batch of randomized identity checks."""
    cfg = RunConfig(tol=tol, cluster_tol=cluster_tol, seed=seed, out=out)
    rng = np.random.default_rng(cfg.seed)
    if suite == "ptolemy":
        failures, worst = _suite_ptolemy(count, rng, cfg.tol)
    elif suite == "cocycle":
        failures, worst = _suite_cocycle(count, rng, cfg.tol)
    else:
        failures, worst = _suite_roundtrip_xe(count, rng, cfg.tol, cfg.cluster_tol)
    payload = {
        "suite": suite,
        "count": count,
        "seed": cfg.seed,
        "failures": int(failures),
        "worst": float(worst),
        "pass": failures == 0,
    }
    _emit(payload, cfg.out)
    if failures:
        sys.exit(EXIT_NUMERICAL)


if __name__ == "__main__":
    main()
