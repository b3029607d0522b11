"""Command-line interface: estimate, fit, validate, sweep, serve.

Exit codes: 0 success, 1 validation/input errors, 2 I/O errors. All file
outputs are byte-deterministic for identical inputs and seed; table output
rounds success rates to two decimals in percent, JSON keeps full precision.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .fitting import (
    fit_model,
    fit_result_to_document,
    metrics_to_document,
    read_trials_csv,
    validate_model,
)
from .model import (
    ModelVariant,
    model_from_document,
    model_to_document,
    preset,
)
from .scene import (
    SchemaError,
    estimate_scene,
    parse_scene,
    report_to_document,
    sweep,
)

MODEL_ENV_VAR = "RAYSR_MODEL"


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_output(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _read_file(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_model(path_arg: str | None, scene_model_path: str | None = None):
    """Resolve the model: --model flag, then the scene's model_path, then
    the RAYSR_MODEL environment variable, then the builtin baseline."""
    path = path_arg or scene_model_path or os.environ.get(MODEL_ENV_VAR)
    if path is None:
        return None
    return model_from_document(_read_file(path))


def _fmt_pct(value: float) -> str:
    return f"{value * 100.0:.2f}%"


def _cmd_estimate(args) -> int:
    scene = parse_scene(_read_file(args.scene))
    spec = _load_model(args.model, scene.options.model_path)
    if spec is None:
        spec = preset(scene.options.variant)
    report = estimate_scene(scene, spec)
    if args.format == "json":
        _write_output(_dump_json(report_to_document(report)), args.output)
    else:
        lines = []
        for t in report.targets:
            if t.error is not None:
                lines.append(f"{t.id}\tERROR\t{t.error}")
                continue
            flags = f"\t[{', '.join(t.warnings)}]" if t.warnings else ""
            lines.append(
                f"{t.id}\t{t.extent.w_x:.2f}°\t{_fmt_pct(t.success_rate.value)}{flags}"
            )
        _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_fit(args) -> int:
    trials = read_trials_csv(_read_file(args.trials).decode("utf-8"))
    result = fit_model(trials, ModelVariant(args.variant))
    _write_output(_dump_json(model_to_document(result.spec)), args.output)
    if args.diagnostics:
        _write_output(_dump_json(fit_result_to_document(result)), args.diagnostics)
    n_pass = sum(1 for r in result.normality if r.result.passed)
    print(
        f"fit: screened out {result.screened_out} trials; "
        f"normality passed {n_pass}/{len(result.normality)} cell-axes; "
        + "; ".join(
            f"{name}: r2={reg.r_squared:.3f}" for name, reg in sorted(result.regressions.items())
        ),
        file=sys.stderr,
    )
    return 0


def _cmd_validate(args) -> int:
    spec = model_from_document(_read_file(args.model_doc))
    trials = read_trials_csv(_read_file(args.trials).decode("utf-8"))
    metrics = validate_model(spec, trials)
    _write_output(_dump_json(metrics_to_document(metrics)), args.output)
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_model(args.model)
    if spec is None:
        spec = preset(ModelVariant(args.variant))
    rows = sweep(spec, args.shape, (getattr(args, "from"), args.to), args.step,
                 amplitude=args.amplitude)
    if args.format == "json":
        doc = {
            "raysr_sweep": 1,
            "shape": args.shape,
            "rows": [
                {"w_deg": r.w, "success_rate": r.success_rate, "warnings": list(r.warnings)}
                for r in rows
            ],
        }
        _write_output(_dump_json(doc), args.output)
    elif args.format == "table":
        lines = [f"{r.w:.2f}°\t{_fmt_pct(r.success_rate)}" for r in rows]
        _write_output("\n".join(lines) + "\n", args.output)
    else:
        lines = ["w_deg,success_rate"]
        lines += [f"{r.w!r},{r.success_rate!r}" for r in rows]
        _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    spec = _load_model(args.model)
    app = create_app(spec)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raysr",
        description="Success-rate estimation for raycasting selection in VR scenes.",
    )
    parser.add_argument("--version", action="version", version=f"raysr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate success rates for a scene document")
    p.add_argument("scene", help="scene.json path")
    p.add_argument("-m", "--model", help=f"model.json path (default: ${MODEL_ENV_VAR} or builtin)")
    p.add_argument("-o", "--output", help="output path (default: stdout)")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fit", help="fit a model from a trials CSV")
    p.add_argument("trials", help="trials CSV path")
    p.add_argument("--variant", choices=[v.value for v in ModelVariant], default="baseline")
    p.add_argument("-o", "--output", help="model.json output path (default: stdout)")
    p.add_argument("--diagnostics", help="optional path for the full fit diagnostics JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("validate", help="validate a model against a trials CSV")
    p.add_argument("model_doc", metavar="model", help="model.json path")
    p.add_argument("trials", help="trials CSV path")
    p.add_argument("-o", "--output", help="metrics.json output path (default: stdout)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sweep", help="tabulate success rate over a width range")
    p.add_argument("--shape", choices=["disc", "square"], default="disc")
    p.add_argument("--from", type=float, required=True, help="start width (deg)")
    p.add_argument("--to", type=float, required=True, help="end width (deg)")
    p.add_argument("--step", type=float, required=True, help="grid step (deg)")
    p.add_argument("--variant", choices=[v.value for v in ModelVariant], default="baseline")
    p.add_argument("--amplitude", type=float, help="movement amplitude (deg), for amplitude-aware models")
    p.add_argument("-m", "--model", help=f"model.json path (default: ${MODEL_ENV_VAR} or builtin)")
    p.add_argument("-o", "--output", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "table", "json"], default="csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("serve", help="serve the HTTP estimation API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("-m", "--model", help=f"model.json path (default: ${MODEL_ENV_VAR} or builtin)")
    p.set_defaults(func=_cmd_serve)

    # reproducibility hook for stochastic diagnostics; current commands are
    # deterministic, the flag pins the contract
    parser.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"raysr: i/o error: {exc}", file=sys.stderr)
        return 2
    except (SchemaError, ValueError, ArithmeticError) as exc:
        print(f"raysr: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
