"""Command-line driver: quasitile | tile | match | check | render.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 parameter infeasibility. Failures print one machine-parseable line on
stderr: ``error[<code-word>]: <reason>``.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import serialize
from .config import RunConfig, format_rational, parse_k, parse_rational
from .errors import (FoltileError, InfeasibleParameters, InvalidInput,
                     VerificationFailure)
from .groups import Shape, get_model
from .matching import (BipartiteRelation, certify_expansivity,
                       match_saturating)
from .quasitiling import (group_quasitile, group_quasitile_ladder,
                          quasitile_window)
from .render import RenderSpec, render_artifact
from .tiling import run_from_config, verify_tiling
from .windows import make_window


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for key in ("model", "n", "k", "delta", "beta", "eps", "folner_cap",
                "u_cap", "out", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "ladder", None):
        cfg.ladder = [int(v) for v in args.ladder.split(",")]
    cfg.validate()
    return cfg


def _cmd_tile(args) -> int:
    cfg = _config_from_args(args)
    tiling = run_from_config(cfg)
    text = serialize.dumps(serialize.tiling_to_json(tiling))
    _write(cfg.out, text)
    if args.svg:
        data = serialize.loads(text)
        _write(args.svg, render_artifact(data, RenderSpec(cell=args.cell)))
    print(f"tiling: {len(tiling.shapes)} shape classes, "
          f"{sum(len(c) for c in tiling.centers)} tiles, all checks passed",
          file=sys.stderr)
    return 0


def _cmd_quasitile(args) -> int:
    cfg = _config_from_args(args)
    model = get_model(cfg.model)
    if args.mode == "group":
        beta = cfg.beta_value()
        E = model.folner(args.target_index)
        ladder = group_quasitile_ladder(model, E, beta)
        qt = group_quasitile(E, ladder, beta)
        covered = qt.covered_count()
        text = serialize.dumps(serialize.group_quasitiling_to_json(qt))
        _write(cfg.out, text)
        print(f"group quasitiling: covered {covered}/{len(E)} "
              f"(target >= {(1 - beta) * len(E)})", file=sys.stderr)
        return 0
    window = make_window(cfg.model, cfg.n)
    K = parse_k(model, cfg.k)
    eps = cfg.eps_value() or Fraction(1, 8)
    if not cfg.ladder:
        raise InvalidInput("quasitile needs --ladder folner indices")
    ladder = [model.folner(i) for i in cfg.ladder]
    atlas = quasitile_window(window, K, eps, ladder,
                             check_hypotheses=args.strict)
    text = serialize.dumps(serialize.atlas_to_json(atlas))
    _write(cfg.out, text)
    cov = atlas.covered.count()
    print(f"atlas: {len(atlas.entries)} tiles cover {cov}/{window.size} "
          f"({cov / window.size:.4f})", file=sys.stderr)
    return 0


def _cmd_match(args) -> int:
    edges = []
    n_left = n_right = 0
    with open(args.edges) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInput(f"{args.edges}:{lineno}: expected 'x y'")
            x, y = int(parts[0]), int(parts[1])
            if x < 0 or y < 0:
                raise InvalidInput(f"{args.edges}:{lineno}: negative vertex")
            edges.append((x, y))
            n_left = max(n_left, x + 1)
            n_right = max(n_right, y + 1)
    rel = BipartiteRelation.from_edges(n_left, n_right, edges)
    cert = certify_expansivity(rel)
    if not cert.expansive:
        print(f"note: relation is not expansive (c = {cert.c}); phase "
              f"bounds not guaranteed", file=sys.stderr)
    state, transcript = match_saturating(rel, cert, require_expansive=False)
    text = serialize.dumps(serialize.matching_to_json(rel, state, transcript,
                                                      cert))
    _write(args.out, text)
    for n, unmatched, ok in transcript:
        bound = Fraction(cert.b, cert.a) ** n
        print(f"phase {n}: unmatched {unmatched}, bound c^-n = "
              f"{format_rational(bound)}, ok={ok}", file=sys.stderr)
    left = rel.n_left - state.matched_count()
    if left:
        print(f"note: {left} left vertices remain unmatched", file=sys.stderr)
    return 0


def _cmd_check(args) -> int:
    with open(args.input) as fh:
        data = serialize.loads(fh.read())
    if data.get("kind") == "tiling":
        tiling = serialize.tiling_from_json(data)
        report = verify_tiling(tiling.window, tiling, tiling.K, tiling.delta)
        for chk in report["checks"]:
            status = "pass" if chk["passed"] else "FAIL"
            print(f"{status}: {chk['name']}: {chk['detail']}", file=sys.stderr)
        if not report["all_passed"]:
            raise VerificationFailure("tiling check failed")
        return 0
    if data.get("kind") == "atlas":
        atlas = serialize.atlas_from_json(data)
        atlas.verify()
        print("pass: atlas invariants", file=sys.stderr)
        return 0
    if data.get("kind") == "group-quasitiling":
        from .quasitiling import verify_group_quasitiling

        qt = serialize.group_quasitiling_from_json(data)
        verify_group_quasitiling(qt)
        print("pass: group quasitiling clauses", file=sys.stderr)
        return 0
    raise InvalidInput(f"cannot check artifact kind {data.get('kind')!r}")


def _cmd_render(args) -> int:
    with open(args.input) as fh:
        data = serialize.loads(fh.read())
    spec = RenderSpec(cell=args.cell, palette_seed=args.palette_seed,
                      layers=args.layers.split(","))
    _write(args.out, render_artifact(data, spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="foltile",
        description="exact tilings of amenable-group action windows")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--model", help="z1|z2|z3|heis|lamplighter")
        sp.add_argument("--n", type=int, help="carrier side")
        sp.add_argument("--k", help="K preset (cross1|box1|zcross) or JSON list")
        sp.add_argument("--delta", help="invariance target, p/q")
        sp.add_argument("--eps", help="working fraction override, p/q")
        sp.add_argument("--beta", help="group quasitiling fraction, p/q")
        sp.add_argument("--ladder", help="comma-separated folner indices")
        sp.add_argument("--folner-cap", type=int, dest="folner_cap")
        sp.add_argument("--u-cap", type=int, dest="u_cap")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("tile", help="exact tiling pipeline")
    add_common(sp)
    sp.add_argument("--svg", help="also render to this SVG path")
    sp.add_argument("--cell", type=int, default=6)
    sp.set_defaults(func=_cmd_tile)

    sp = sub.add_parser("quasitile", help="quasitiling only")
    add_common(sp)
    sp.add_argument("--mode", choices=["action", "group"], default="action")
    sp.add_argument("--target-index", type=int, default=12,
                    help="group mode: folner index of the target set E")
    sp.add_argument("--strict", action="store_true",
                    help="verify the full hypothesis set")
    sp.set_defaults(func=_cmd_quasitile)

    sp = sub.add_parser("match", help="match an edge-list file")
    sp.add_argument("--edges", required=True, help="lines of 'x y'")
    sp.add_argument("--out", help="output path (default stdout)")
    sp.set_defaults(func=_cmd_match)

    sp = sub.add_parser("check", help="re-verify an artifact")
    sp.add_argument("--input", required=True)
    sp.set_defaults(func=_cmd_check)

    sp = sub.add_parser("render", help="render an artifact to SVG")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--cell", type=int, default=6)
    sp.add_argument("--palette-seed", type=int, default=0,
                    dest="palette_seed")
    sp.add_argument("--layers", default="tiles,leftover")
    sp.set_defaults(func=_cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationFailure as exc:
        print(f"error[verification]: {exc}", file=sys.stderr)
        return 1
    except InvalidInput as exc:
        print(f"error[invalid-input]: {exc}", file=sys.stderr)
        return 2
    except InfeasibleParameters as exc:
        print(f"error[infeasible]: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error[invalid-input]: {exc}", file=sys.stderr)
        return 2
    except FoltileError as exc:
        print(f"error[invalid-input]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
