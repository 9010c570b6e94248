"""Command line: ``semdot run`` and ``semdot sweep``.

Exit codes: 0 converged, 2 stopped at max_iter, 1 error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .io import write_boundary_svg, write_design_field, write_history, write_json
from .optimize import RunResult, run_semdot, run_simp_baseline
from .problems import PRESETS

EXIT_CONVERGED, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2

log = logging.getLogger("semdot")


def _range(text: str) -> np.ndarray:
    """``a:b:s`` inclusive of ``b`` (within half a step)."""
    try:
        a, b, s = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:s, got {text!r}") from None
    if s <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"need a <= b and s > 0, got {text!r}")
    n = int(np.floor((b - a) / s + 0.5)) + 1
    return np.round(a + s * np.arange(n), 10)


def execute(cfg: RunConfig) -> RunResult:
    problem = cfg.problem()
    params = cfg.params()
    if cfg.optimizer == "simp-d":
        return run_simp_baseline(problem, params)
    return run_semdot(problem, params)


def write_outputs(result: RunResult, cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    mesh = result.problem.mesh
    write_history(result.history, out / "history.csv")
    if result.xnew is not None:
        write_design_field(result.xnew, mesh, out / "design.txt")
        write_design_field(result.xnew, mesh, out / "design.vti")
    write_boundary_svg(result.boundary or [], mesh, out / "boundary.svg",
                       spacing=1.0 / cfg.n_grid)
    write_json({"config": cfg.to_dict(), "converged": result.converged,
                "iterations": result.iterations, "objective": result.objective,
                "error": result.error}, out / "run.json")


def _status(result: RunResult) -> int:
    if result.error is not None:
        return EXIT_ERROR
    return EXIT_CONVERGED if result.converged else EXIT_MAX_ITER


def cmd_run(args) -> int:
    cfg = load_config(args.config, preset=args.preset, r_min=args.rmin, upsilon_min=args.upsilon,
                      mode=args.mode, optimizer=args.optimizer, out=args.out)
    result = execute(cfg)
    write_outputs(result, cfg, Path(cfg.out))
    if result.error:
        log.error("run failed: %s", result.error)
    print(f"{cfg.preset}: objective {result.objective:.6g} after {result.iterations} iterations"
          f" ({'converged' if result.converged else 'not converged'})")
    return _status(result)


def cmd_sweep(args) -> int:
    base = load_config(args.config, preset=args.preset, mode=args.mode, optimizer=args.optimizer,
                       out=args.out)
    out = Path(base.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    worst = EXIT_CONVERGED
    for r in args.rmin_range:
        for u in args.upsilon_range:
            cfg = load_config(args.config, **{**base.to_dict(), "r_min": float(r), "upsilon_min": float(u),
                                              "out": str(out / f"r{r:g}_u{u:g}")})
            result = execute(cfg)
            write_outputs(result, cfg, Path(cfg.out))
            status = _status(result)
            worst = max(worst, status, key=[EXIT_CONVERGED, EXIT_MAX_ITER, EXIT_ERROR].index)
            rows.append((r, u, result.objective, result.iterations, int(result.converged)))
            print(f"r_min={r:g} upsilon_min={u:g}: objective {result.objective:.6g}, "
                  f"{result.iterations} iterations", flush=True)
    with (out / "sweep.csv").open("w") as fh:
        fh.write("r_min,upsilon_min,objective,iterations,converged\n")
        for r, u, c, n, ok in rows:
            fh.write(f"{r:g},{u:g},{c:.6g},{n},{ok}\n")
    return worst


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semdot", description="Topology optimization with smooth iso-contour boundaries")
    ap.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, preset_default=None):
        p.add_argument("--preset", choices=sorted(PRESETS), default=preset_default,
                       required=preset_default is None)
        p.add_argument("--config", type=Path)
        p.add_argument("--mode", choices=("step", "smooth"))
        p.add_argument("--optimizer", choices=("mma", "oc", "simp-d"))
        p.add_argument("--out")

    run = sub.add_parser("run", help="optimize one preset")
    common(run)
    run.add_argument("--rmin", type=float)
    run.add_argument("--upsilon", type=float)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="grid of filter radii")
    common(sweep, preset_default="mbb")
    sweep.add_argument("--rmin-range", type=_range, required=True, metavar="A:B:S")
    sweep.add_argument("--upsilon-range", type=_range, required=True, metavar="A:B:S")
    sweep.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        print(f"configuration error{where}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
