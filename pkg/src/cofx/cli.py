"""``cofx`` command line interface.

Exit codes: 0 ok, 2 schema/input error, 3 unstable model, 4 validation failure.
Numbers are written with 15 significant digits; curves go to CSV, matrices and
mode vectors to JSON. ``--model`` accepts a file path or a built-in model name
(``A``, ``B``, ``A1`` .. ``C2``, ``chain``).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cof, effects, estimation, mssa, oracle, spectral
from .errors import CofxError, SchemaError, ValidationError
from .var_model import SamplePaths, load_builtin, load_model, simulate


FIG6_MODELS = ("A1", "A2", "B1", "B2", "C1", "C2")


def _r15(obj):
    if isinstance(obj, dict):
        return {k: _r15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_r15(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _r15(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not np.isfinite(x) else float(f"{x:.15g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(_r15(doc), indent=1) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _model(arg: str):
    try:
        return load_model(arg)
    except FileNotFoundError as exc:
        raise SchemaError(f"model file not found: {arg}") from exc


def _spec(args) -> effects.WindowSpec:
    tj = args.tj if args.tj is not None else args.ti
    return effects.WindowSpec(args.cause, args.effect, args.tau, args.ti, tj)


def _seed(args, default: int = 0) -> int:
    if args.seed is None:
        if args.strict:
            raise SchemaError(f"--strict: '{args.command}' draws random numbers and needs --seed")
        return default
    return args.seed


# subcommands -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = _model(args.model)
    paths = simulate(model, args.length, _seed(args), args.burn_in)
    _emit(paths.to_csv(), args.out)
    return 0


def cmd_fit(args) -> int:
    try:
        data = SamplePaths.from_csv(Path(args.data).read_text(encoding="utf-8"))
        graph = estimation.Graph.from_dict(json.loads(Path(args.graph).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(str(exc)) from exc
    model = estimation.fit_var(data, graph)
    _emit(dumps(model.to_dict()), args.out)
    return 0


def cmd_twce(args) -> int:
    eff = effects.twce(_model(args.model), _spec(args))
    _emit(dumps(eff.to_dict()), args.out)
    return 0


def _load_bases(path: str, side: str, rows: int) -> list[cof.ProjectionBasis]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for cols in doc.get(side, []):
        mat = np.asarray(cols, dtype=float).T  # stored as a list of column vectors
        out.append(cof.ProjectionBasis(mat, side))
    if not out:
        out.append(cof.ProjectionBasis(np.eye(rows), side))
    return out


def cmd_cof(args) -> int:
    model = _model(args.model)
    spec = _spec(args)
    eff = effects.twce(model, spec)
    extra = {}
    if args.constraints:
        ps = _load_bases(args.constraints, "impulse", spec.t_cause)
        qs = _load_bases(args.constraints, "response", spec.t_effect)
        if len(ps) == 1 and len(qs) == 1:
            cofs = cof.constrained_cofs(eff, ps[0], qs[0])
        else:
            cofs = cof.jointly_constrained_cofs(eff, ps, qs)
    elif args.wavelet_scale:
        s_in, s_out = (int(x) for x in args.wavelet_scale.split(":"))
        basis = spectral.wavelet_matrix(spec.t_cause, args.levels, args.filter)
        omega, cofs = spectral.scale_effects(eff, basis, s_in, s_out)
        extra["omega"] = omega
    elif args.ssa_top:
        data = simulate(model, args.samples, _seed(args))
        e_cause = cof.ssa_basis(data.values[spec.cause - 1], spec.t_cause, args.ssa_top, "impulse")
        e_effect = cof.ssa_basis(
            data.values[spec.effect - 1], spec.t_effect, args.ssa_top, "response"
        )
        cofs = cof.ssa_restricted_cofs(eff, e_cause, e_effect)
    else:
        cofs = cof.compute_cofs(eff, args.rank)
    doc = cofs.to_dict()
    doc.update(extra)
    _emit(dumps(doc), args.out)
    return 0


def _freq_curves(model, name: str, cause: int, effect: int, T: int, gc_mode: str):
    spec = effects.WindowSpec(cause, effect, 0, T, T)
    ce = spectral.frequency_causal_effects(effects.twce(model, spec), model_name=name)
    modes = ("standard", "paper-literal") if gc_mode == "both" else (gc_mode,)
    gcs = [
        spectral.frequency_granger(model, cause, effect, ce.frequencies, mode, name)
        for mode in modes
    ]
    return ce, gcs


def cmd_freq(args) -> int:
    model = _model(args.model)
    name = model.name or Path(args.model).stem
    ce, gcs = _freq_curves(model, name, args.cause, args.effect, args.T, args.gc_mode)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}_ce.csv").write_text(ce.to_csv(), encoding="utf-8")
        for g in gcs:
            (out / f"{name}_gc_{g.mode}.csv").write_text(g.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write(spectral.curves_csv([ce, *gcs]))
    return 0


def _mssa_outputs(model, spec, n_modes, samples, seed, out_dir: Path | None, stem: str):
    rows, vectors = mssa.mssa_cof_report(model, spec, n_modes, samples, seed, with_vectors=True)
    csv_text = mssa.report_csv(rows)
    if out_dir is None:
        sys.stdout.write(csv_text)
        return rows
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.csv").write_text(csv_text, encoding="utf-8")
    (out_dir / f"{stem}.json").write_text(mssa.report_json(rows, vectors) + "\n", encoding="utf-8")
    return rows


def cmd_mssa_compare(args) -> int:
    model = _model(args.model)
    spec = effects.WindowSpec(args.cause, args.effect, 0, args.T, args.T)
    out = Path(args.out_dir) if args.out_dir else None
    _mssa_outputs(model, spec, args.n_modes, args.samples, _seed(args), out, "mssa_compare")
    return 0


def cmd_wavelet(args) -> int:
    basis = spectral.wavelet_matrix(args.T, args.J, args.filter)
    doc = {
        "total_length": basis.total_length,
        "levels": basis.levels,
        "filter": basis.filter_name,
        "blocks": [blk.T for blk in basis.scale_blocks],
    }
    _emit(dumps(doc), args.out)
    return 0


def cmd_validate(args) -> int:
    report = oracle.validation_report(
        _model(args.model), _spec(args), replicates=args.replicates, seed=_seed(args)
    )
    _emit(dumps(report), args.out)
    if not report["passed"]:
        raise ValidationError(
            f"oracle mismatch: max |z| = {report['max_abs_z']:.3g}, "
            f"path diff = {report.get('path_max_abs_diff', float('nan')):.3g}"
        )
    return 0


def cmd_figures(args) -> int:
    out = Path(args.out_dir)
    if args.preset in ("figA", "figB"):
        name = args.preset[-1]
        spec = effects.WindowSpec(1, 3, 0, 100, 100)
        _mssa_outputs(load_builtin(name), spec, 3, args.samples, _seed(args), out, f"mssa_vs_cof_{name}")
    elif args.preset == "fig6":
        out.mkdir(parents=True, exist_ok=True)
        curves = []
        for name in FIG6_MODELS:
            ce, gcs = _freq_curves(load_builtin(name), name, 1, 2, args.T, "both")
            curves += [ce, *gcs]
        (out / "fig6_curves.csv").write_text(spectral.curves_csv(curves), encoding="utf-8")
    return 0


# parser ------------------------------------------------------------------------


def _window_args(p, ti_default=None):
    p.add_argument("--model", required=True, help="model JSON path or built-in name")
    p.add_argument("--cause", type=int, required=True)
    p.add_argument("--effect", type=int, required=True)
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--ti", type=int, required=ti_default is None, default=ti_default)
    p.add_argument("--tj", type=int, default=None, help="defaults to --ti")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cofx", description=__doc__.splitlines()[0])
    parser.add_argument("--strict", action="store_true", help="require --seed wherever randomness is used")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a model to CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit coefficients on a given graph")
    p.add_argument("--data", required=True, help="sample-path CSV")
    p.add_argument("--graph", required=True, help="graph JSON (model schema without coeff)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("twce", help="time-windowed causal effect matrix as JSON")
    _window_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_twce)

    p = sub.add_parser("cof", help="causal orthogonal functions")
    _window_args(p)
    p.add_argument("--rank", type=int)
    p.add_argument("--constraints", help="JSON with 'impulse'/'response' lists of bases")
    p.add_argument("--wavelet-scale", help="S_IN:S_OUT (J+1 is the smooth block)")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--filter", default="haar", choices=sorted(spectral.FILTERS))
    p.add_argument("--ssa-top", type=int, help="restrict to the top-n SSA modes per side")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cof)

    p = sub.add_parser("freq", help="frequency causal effects and frequency Granger causality")
    p.add_argument("--model", required=True)
    p.add_argument("--cause", type=int, required=True)
    p.add_argument("--effect", type=int, required=True)
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--gc-mode", choices=("standard", "paper-literal", "both"), default="both")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("mssa-compare", help="mSSA pattern pairs versus COF pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--cause", type=int, default=1)
    p.add_argument("--effect", type=int, default=3)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--n-modes", type=int, default=3)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_mssa_compare)

    p = sub.add_parser("wavelet", help="orthogonal wavelet matrix blocks as JSON")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--filter", default="haar", choices=sorted(spectral.FILTERS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_wavelet)

    p = sub.add_parser("validate", help="check twce against the path and interventional oracles")
    _window_args(p)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("figures", help="emit figure data for a named preset")
    p.add_argument("preset", choices=("figA", "figB", "fig6"))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_figures)
    return parser


def _thread_limit():
    cap = os.environ.get("COFX_THREADS")
    if not cap:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(cap))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        with _thread_limit():
            return args.func(args)
    except CofxError as exc:
        print(f"cofx: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"cofx: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
