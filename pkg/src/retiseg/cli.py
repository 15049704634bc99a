"""Command-line interface: decompose, segment, validate, export-bundle.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numeric failure.
"""

import argparse
import csv
import json
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from . import bundle as bundle_mod
from . import image_io, ops, oracle, segment, solver

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_CONFIG_KEYS = (
    "alpha", "beta", "gamma", "mu", "tau", "sigma",
    "regularizer", "max_iter", "tol", "log_floor", "dual_ball",
)


def load_presets():
    """Parameter presets (alpha, beta, gamma, thresholds) for named images."""
    text = resources.files("retiseg").joinpath("data/presets.json").read_text()
    return json.loads(text)


def _read_config_file(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _build_config(args, parser):
    values = {}
    if args.config:
        file_values = _read_config_file(args.config)
        unknown = set(file_values) - set(_CONFIG_KEYS)
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    if args.preset:
        presets = load_presets()
        if args.preset not in presets:
            parser.error(f"unknown preset {args.preset!r}; have {sorted(presets)}")
        row = presets[args.preset]
        values.update(alpha=row["alpha"], beta=row["beta"], gamma=row["gamma"])
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    values.setdefault("regularizer", "tf")
    # The two regularizers ship with different default dual step sizes.
    values.setdefault("sigma", 0.1 if values["regularizer"] == "tf" else 0.15)
    missing = [k for k in ("alpha", "beta", "gamma") if k not in values]
    if missing:
        parser.error(f"missing {missing}; set them via flags, --preset, or --config")
    try:
        return solver.SolverConfig(**values)
    except (TypeError, ValueError) as exc:
        parser.error(f"invalid solver configuration: {exc}")


def _write_iteration_csv(path, result):
    sampled = dict(result.energy_history)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "residual", "energy"])
        for i, residual in enumerate(result.residual_history, start=1):
            energy = sampled.get(i, "")
            writer.writerow([i, f"{residual:.12e}", "" if energy == "" else f"{energy:.12e}"])


def cmd_decompose(args, parser):
    config = _build_config(args, parser)
    img = image_io.load_image(args.input)
    s = image_io.to_log_domain(img, floor=config.log_floor)

    result = solver.run(s, config)
    print(result.audit.describe())
    print(f"iterations run: {result.iterations_run}, "
          f"final residual: {result.residual_history[-1]:.3e}, "
          f"final energy: {result.energy_history[-1][1]:.6e}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, field in (("r", result.r), ("l", result.l),
                        ("reflectance", result.reflection),
                        ("illumination", result.illumination)):
        image_io.save_field_raw(field, out / f"{name}.f32")
        image_io.save_image(image_io.rescale_unit(field), out / f"{name}.png", clamp=True)
    image_io.save_image(img, out / "source.png", clamp=True)
    _write_iteration_csv(out / "iterations.csv", result)

    meta = {
        "config": asdict(result.config),
        "iterations_run": result.iterations_run,
        "residual_tail": [float(x) for x in result.residual_history[-20:]],
        "final_energy": result.energy_history[-1][1],
        "audit": asdict(result.audit),
        "source": str(args.input),
    }
    (out / "decompose_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    print(f"decomposition written to {out}")
    return EXIT_OK


def _parse_thresholds(args, parser):
    if args.thresholds_file:
        spec = json.loads(Path(args.thresholds_file).read_text())
        interior = spec["thresholds"] if isinstance(spec, dict) else spec
    elif args.thresholds:
        try:
            interior = [float(tok) for tok in args.thresholds.split(",") if tok.strip()]
        except ValueError:
            parser.error(f"cannot parse --thresholds {args.thresholds!r}")
    elif args.preset:
        presets = load_presets()
        if args.preset not in presets:
            parser.error(f"unknown preset {args.preset!r}")
        interior = presets[args.preset]["thresholds"]
    else:
        parser.error("need --thresholds, --thresholds-file, or --preset")
    if any(not 0.0 < t < 1.0 for t in interior):
        parser.error("interior thresholds must lie strictly inside (0, 1)")
    try:
        return segment.Thresholds.from_interior(interior)
    except ValueError as exc:
        parser.error(f"malformed thresholds: {exc}")


def cmd_segment(args, parser):
    thresholds = _parse_thresholds(args, parser)
    base = None
    if args.bundle:
        loaded = bundle_mod.read_bundle(args.bundle)
        reflectance = loaded.reflectance
        base = loaded.source
    else:
        path = Path(args.reflectance)
        if path.suffix.lower() == ".f32":
            reflectance = image_io.rescale_unit(image_io.load_field_raw(path))
        else:
            reflectance = image_io.load_image(path)
        base = reflectance

    label_map = segment.threshold_phases(reflectance, thresholds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    segment.save_label_map(label_map, out / "labels.png")
    if args.raw_labels:
        # Column-major uint8 labels, for byte-exact comparison by other tools.
        (out / "labels.u8").write_bytes(
            label_map.labels.astype(np.uint8).tobytes(order="F")
        )
    if args.overlay:
        image_io.save_image_rgb(segment.render_overlay(label_map, base), out / "overlay.png")
    counts = np.bincount(label_map.labels.ravel(), minlength=label_map.K + 1)[1:]
    print(f"{label_map.K}-phase map written to {out} "
          f"(pixels per phase: {counts.tolist()})")
    return EXIT_OK


def cmd_export_bundle(args, parser):
    src = Path(args.decomposed)
    meta_path = src / "decompose_meta.json"
    if not meta_path.is_file():
        raise image_io.ImageIOError(f"missing decompose outputs in {src}")
    meta = json.loads(meta_path.read_text())
    reflectance = image_io.load_field_raw(src / "reflectance.f32")
    illumination = image_io.load_field_raw(src / "illumination.f32")
    source = image_io.load_image(src / "source.png")
    manifest = bundle_mod.write_bundle(
        args.out,
        source=source,
        reflectance=image_io.rescale_unit(reflectance),
        illumination=illumination,
        solver_meta=meta,
    )
    print(f"bundle written: {manifest}")
    return EXIT_OK


def _check(report, name, ok, detail):
    report.append((name, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")


def _run_validation(sizes, draws, seed):
    rng = np.random.default_rng(seed)
    report = []

    for n in sizes:
        worst_g = worst_w = 0.0
        for _ in range(20):
            u = rng.standard_normal((n, n))
            vf = rng.standard_normal((2, n, n))
            g = ops.grad(u)
            gap = abs(np.sum(g * vf) - np.sum(u * ops.grad_adjoint(vf)))
            worst_g = max(worst_g, gap / (np.linalg.norm(g) * np.linalg.norm(vf)))
            p = rng.standard_normal((9, n, n))
            coeffs = ops.framelet_analyze(u)
            gap = abs(np.sum(coeffs * p) - np.sum(u * ops.framelet_synthesize(p)))
            worst_w = max(worst_w, gap / (np.linalg.norm(coeffs) * np.linalg.norm(p)))
        _check(report, f"adjoint-gradient-{n}x{n}", worst_g <= 1e-12,
               f"max relative discrepancy {worst_g:.2e}")
        _check(report, f"adjoint-framelet-{n}x{n}", worst_w <= 1e-12,
               f"max relative discrepancy {worst_w:.2e}")

        worst = 0.0
        for _ in range(10):
            u = rng.standard_normal((n, n))
            recon = ops.framelet_synthesize(ops.framelet_analyze(u))
            worst = max(worst, np.abs(recon - u).max() / np.abs(u).max())
        _check(report, f"perfect-reconstruction-{n}x{n}", worst <= 1e-12,
               f"max relative error {worst:.2e}")

        apply_g, adj_g, dim = ops.grad_operator((n, n))
        est_g = ops.operator_norm_estimate(apply_g, adj_g, dim, seed=seed)
        _check(report, f"norm-gradient-{n}x{n}", est_g <= np.sqrt(8.0) + 1e-9,
               f"estimate {est_g:.6f} <= sqrt(8)")
        apply_k, adj_k, dim = ops.coupled_operator((n, n), "tf")
        est_k = ops.operator_norm_estimate(apply_k, adj_k, dim, seed=seed)
        _check(report, f"norm-coupled-{n}x{n}", est_k <= 3.0 + 1e-9,
               f"estimate {est_k:.6f} <= 3")

    ok_proj = True
    detail = ""
    for _ in range(draws):
        p = rng.standard_normal((9, 8, 8)) * rng.uniform(0.1, 4.0)
        radius = rng.uniform(0.2, 2.0, size=(8, 8))
        proj = solver.project_dual_ball(p, radius)
        again = solver.project_dual_ball(proj, radius)
        feasible = np.sqrt(np.sum(proj**2, axis=0)) <= radius + 1e-12
        if not (np.array_equal(proj, again) and feasible.all()):
            ok_proj = False
            detail = "idempotence or feasibility violated"
            break
    _check(report, "projection", ok_proj, detail or f"{draws} random draws")

    ok_pix = True
    detail = ""
    for _ in range(draws):
        coeff = rng.standard_normal(3) * 2.0
        s, r_n, l_n = rng.standard_normal(3)
        gamma = rng.uniform(0.5, 10.0)
        mu = 10.0 ** rng.uniform(-6, -1)
        sigma = rng.uniform(0.05, 2.0)
        got = solver.solve_pixel_primal(*coeff, s, abs(r_n), l_n, gamma, mu, sigma)
        want = oracle.pixel_qp_oracle(*coeff, s, abs(r_n), l_n, gamma, mu, sigma)
        e_got = oracle._pixel_objective(got[0], got[1], *coeff, s, abs(r_n), l_n,
                                        gamma, mu, sigma)
        if abs(e_got - want[2]) > 1e-6:
            ok_pix = False
            detail = f"objective gap {abs(e_got - want[2]):.2e}"
            break
    _check(report, "pixel-update-vs-oracle", ok_pix, detail or f"{draws} random draws")

    audit = solver.audit_step_sizes(
        solver.SolverConfig(alpha=1.0, beta=1.0, gamma=1.0)
    )
    _check(report, "step-size-audit-defaults", audit.passed, audit.describe())
    return all(ok for _, ok, _ in report)


def cmd_validate(args, parser):
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    faulted = args.inject_fault == "flip-filter-sign"
    original = ops.FILTER_BANK
    if faulted:
        # Test hook: corrupt one tap sign so reconstruction must fail.
        h0, h1, h2 = (f.copy() for f in original)
        h2[0] = -h2[0]
        ops.FILTER_BANK = (h0, h1, h2)
    try:
        all_ok = _run_validation(sizes, args.draws, args.seed)
    finally:
        ops.FILTER_BANK = original
    print("validation " + ("PASSED" if all_ok else "FAILED"))
    return EXIT_OK if all_ok else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(
        prog="retiseg",
        description="Two-stage segmentation of images with intensity "
                    "inhomogeneity: decompose into illumination and "
                    "reflection, then threshold the reflection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="stage one: solve the decomposition")
    dec.add_argument("--in", dest="input", required=True, help="input PGM/PNG image")
    dec.add_argument("--out", required=True, help="output directory")
    dec.add_argument("--reg", dest="regularizer", choices=solver.REGULARIZERS,
                     default=None, help="regularizer (default tf)")
    dec.add_argument("--preset", help="named parameter preset (see data/presets.json)")
    dec.add_argument("--config", help="TOML/JSON file with solver config keys")
    for key in ("alpha", "beta", "gamma", "mu", "tau", "sigma", "tol", "log_floor"):
        dec.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None)
    dec.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    dec.add_argument("--dual-ball", dest="dual_ball", choices=solver.DUAL_BALLS,
                     default=None, help=argparse.SUPPRESS)
    dec.set_defaults(func=cmd_decompose)

    seg = sub.add_parser("segment", help="stage two: threshold a reflection field")
    src = seg.add_mutually_exclusive_group(required=True)
    src.add_argument("--bundle", help="bundle directory from export-bundle")
    src.add_argument("--reflectance", help="raw .f32 field or PNG to threshold")
    seg.add_argument("--out", required=True, help="output directory")
    seg.add_argument("--thresholds", help="comma-separated interior thresholds in (0,1)")
    seg.add_argument("--thresholds-file", dest="thresholds_file",
                     help="JSON file {thresholds: [...], K: ...}")
    seg.add_argument("--preset", help="take thresholds from a named preset")
    seg.add_argument("--overlay", action="store_true", help="also write overlay.png")
    seg.add_argument("--raw-labels", dest="raw_labels", action="store_true",
                     help="also write labels.u8 (column-major raw labels)")
    seg.set_defaults(func=cmd_segment)

    val = sub.add_parser("validate", help="run the numerical invariant suite")
    val.add_argument("--sizes", default="8,16,32,64", help="grid sizes, comma separated")
    val.add_argument("--draws", type=int, default=300)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--inject-fault", dest="inject_fault",
                     choices=("none", "flip-filter-sign"), default="none",
                     help=argparse.SUPPRESS)
    val.set_defaults(func=cmd_validate)

    exp = sub.add_parser("export-bundle", help="pack decompose outputs for the explorer")
    exp.add_argument("--decomposed", required=True, help="directory written by decompose")
    exp.add_argument("--out", required=True, help="bundle output directory")
    exp.set_defaults(func=cmd_export_bundle)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (image_io.ImageIOError, bundle_mod.BundleError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (solver.SolverDivergenceError, oracle.GridBracketError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
