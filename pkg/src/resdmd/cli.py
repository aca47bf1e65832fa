"""Command-line front end.

Exit status: 0 on success, 2 for invalid usage or input (bad flag, missing
file, malformed matrix, shape mismatch), 1 for failures while computing.
Diagnostics go to stderr as a single ``resdmd: error: <kind>: <reason>``
line; results go to ``--output`` or stdout.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .errors import (ConfigurationError, DegenerateError, EmbeddingError, ParseError,
                     RankError, ShapeError)
from .exact_dmd import exact_dmd, exact_pseudo_point
from .kernel_edmd import kedmd, kedmd_pseudo_point
from .kernels import KernelSpec, default_scale
from .selftest import run_selftest
from .snapshot_io import (SnapshotPairs, TrajectorySet, delay_embed, format_csv, load_matrix,
                          mean_subtract, save_matrix, split_realizations)
from .spectral import (eigfun_evaluator, filter_modes, fit_kmd, forecast, grid_sweep, mise,
                       parse_grid)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument helpers

def _rank(text):
    if text == "auto":
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("rank must be a positive integer or 'auto'")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _complex(text):
    try:
        re, im = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    return complex(re, im)


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("mode counts must be nonnegative")
    return values


def _add_pairs_input(p):
    p.add_argument("--input", required=True,
                   help="X matrix (d x M), or a d x T trajectory when --input-y is absent")
    p.add_argument("--input-y", help="Y matrix (d x M)")
    p.add_argument("--input-format", choices=("csv", "binary"))
    p.add_argument("--transpose", action="store_true", help="files store snapshots as rows")
    p.add_argument("--mean-subtract", action="store_true")


def _add_method(p, with_method=True):
    if with_method:
        p.add_argument("--method", choices=("dmd", "kedmd"), default="dmd")
    p.add_argument("--rank", type=_rank, default=None)
    p.add_argument("--kernel", default="gaussian",
                   choices=("gaussian", "laplacian", "lorentzian", "poly", "polynomial"))
    p.add_argument("--scale", default="auto", help="kernel scale c, or 'auto'")
    p.add_argument("--degree", type=int, default=None)


def _add_output(p):
    p.add_argument("--output", default="-", help="output file ('-' for stdout)")


def _add_trajectories(p):
    p.add_argument("--input", action="append", required=True,
                   help="realization file (T x p); repeat for several")
    p.add_argument("--input-format", choices=("csv", "binary"))
    p.add_argument("--columns", action="store_true",
                   help="each column of each file is a separate scalar realization")
    p.add_argument("--delay", type=int, required=True)


def build_parser():
    parser = _Parser(prog="resdmd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dmd", help="exact DMD with residuals")
    _add_pairs_input(p)
    p.add_argument("--rank", type=_rank, default=None)
    _add_output(p)

    p = sub.add_parser("kedmd", help="kernelized EDMD with residuals")
    _add_pairs_input(p)
    _add_method(p, with_method=False)
    _add_output(p)

    p = sub.add_parser("pseudospec", help="pseudospectrum on a grid")
    _add_pairs_input(p)
    _add_method(p)
    p.add_argument("--grid", required=True, help="re0:re1:n_re,im0:im1:n_im")
    p.add_argument("--epsilon", type=_positive_float)
    p.add_argument("--output-format", choices=("csv", "json"), default="csv")
    _add_output(p)

    p = sub.add_parser("validate", help="keep eigen-triples with residual <= epsilon")
    _add_pairs_input(p)
    _add_method(p)
    p.add_argument("--epsilon", type=_positive_float, required=True)
    _add_output(p)

    p = sub.add_parser("eigfun", help="approximate eigenfunction at a point")
    _add_pairs_input(p)
    _add_method(p)
    p.add_argument("--lambda", dest="lam", type=_complex, required=True, help="re,im")
    _add_output(p)

    p = sub.add_parser("embed", help="time-delay embed realizations into X, Y")
    _add_trajectories(p)
    p.add_argument("--output-x", required=True)
    p.add_argument("--output-y", required=True)
    _add_output(p)

    for name, helptext in (("forecast", "fit a KMD and forecast held-out realizations"),
                           ("compress", "forecast error versus number of kept modes")):
        p = sub.add_parser(name, help=helptext)
        _add_trajectories(p)
        _add_method(p)
        p.add_argument("--n-test", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        if name == "forecast":
            p.add_argument("--modes", type=int, default=None, help="modes to keep (default: all)")
            p.add_argument("--ordering", choices=("residual", "pca"), default="residual")
        else:
            p.add_argument("--modes-list", type=_int_list, required=True)
            p.add_argument("--output-format", choices=("csv", "json"), default="json")
        _add_output(p)

    sub.add_parser("selftest", help="run the oracle equivalence suite")
    return parser


# --------------------------------------------------------------------------
# pipeline pieces

def _write(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)


def _load_pairs(args):
    x = load_matrix(args.input, args.input_format, args.transpose)
    if args.input_y:
        y = load_matrix(args.input_y, args.input_format, args.transpose)
        pairs = SnapshotPairs(x, y)
    else:
        pairs = SnapshotPairs.from_trajectory(x)
    if args.mean_subtract:
        pairs, _ = mean_subtract(pairs)
    return pairs


def _kernel_spec(args, x):
    kind = args.kernel
    degree = args.degree
    if kind in ("poly", "polynomial"):
        degree = 1 if degree is None else degree
    elif degree is not None:
        raise ConfigurationError(f"--degree only applies to the polynomial kernel")
    scale = default_scale(x) if args.scale == "auto" else float(args.scale)
    return KernelSpec(kind, scale, degree)


def _fit(args, pairs, method=None):
    method = method or getattr(args, "method", "dmd")
    if method == "dmd":
        return exact_dmd(pairs, args.rank), None
    spec = _kernel_spec(args, pairs.x_matrix)
    return kedmd(pairs, spec, args.rank), spec


def _result_dict(result, indices=None):
    if hasattr(result, "svd"):
        return serialize.exact_dmd_to_dict(result, indices)
    return serialize.kedmd_to_dict(result, indices)


def _load_trajectories(args):
    reals = []
    for path in args.input:
        m = load_matrix(path, args.input_format)
        if args.columns:
            reals.extend(m[:, [j]] for j in range(m.shape[1]))
        else:
            reals.append(m)
    return TrajectorySet(tuple(reals))


def _embedded_truth(real, q):
    """Delay vectors of one realization, ``d x (T - q + 1)``."""
    single = delay_embed(TrajectorySet((real,)), q)
    return np.hstack([single.x_matrix, single.y_matrix[:, -1:]])


def _forecast_setup(args):
    traj = _load_trajectories(args)
    train, test = split_realizations(traj, args.n_test, args.seed)
    if len(test) == 0:
        raise ConfigurationError("--n-test must be >= 1 to score forecasts")
    pairs, mean = mean_subtract(delay_embed(train, args.delay))
    result, spec = _fit(args, pairs)
    truths = [_embedded_truth(r, args.delay) for r in test.realizations]
    return pairs, mean, result, spec, test, truths


def _run_forecasts(result, pairs, spec, mean, k, ordering, truths):
    model = fit_kmd(result, pairs, k, ordering, mean=mean)
    geval = eigfun_evaluator(model, pairs, spec)
    preds = [forecast(model, t[:, 0], geval, t.shape[1] - 1) for t in truths]
    return model, preds, mise(preds, [t[:, 1:] for t in truths])


# --------------------------------------------------------------------------
# subcommands

def cmd_dmd(args):
    _write(args, serialize.dumps(_result_dict(_fit(args, _load_pairs(args), "dmd")[0])))


def cmd_kedmd(args):
    _write(args, serialize.dumps(_result_dict(_fit(args, _load_pairs(args), "kedmd")[0])))


def cmd_pseudospec(args):
    re_axis, im_axis = parse_grid(args.grid)
    result, _ = _fit(args, _load_pairs(args))
    point = exact_pseudo_point if args.method == "dmd" else kedmd_pseudo_point
    grid = grid_sweep(lambda z: point(result, z), re_axis, im_axis, args.epsilon)
    if args.output_format == "csv":
        _write(args, format_csv(grid.tau))
    else:
        out = grid.to_dict()
        out["eigenvalues"] = serialize.complex_list(result.eigenvalues)
        _write(args, serialize.dumps(out))


def cmd_validate(args):
    result, _ = _fit(args, _load_pairs(args))
    keep = filter_modes(result.eigenvalues, result.residuals, args.epsilon)
    out = _result_dict(result, keep)
    out["epsilon"] = args.epsilon
    _write(args, serialize.dumps(out))


def cmd_eigfun(args):
    result, _ = _fit(args, _load_pairs(args))
    if args.method == "dmd":
        tau, v = exact_pseudo_point(result, args.lam)
        values = {"state_vector": serialize.complex_list(result.svd.u @ v)}
    else:
        tau, v = kedmd_pseudo_point(result, args.lam)
        values = {"values_on_data": serialize.complex_list((result.q_hat * result.sigma_hat) @ v)}
    out = {"method": args.method, "lambda": serialize.complex_list([args.lam])[0],
           "residual": tau, "coeffs": serialize.complex_list(v)}
    out.update(values)
    _write(args, serialize.dumps(out))


def cmd_embed(args):
    pairs = delay_embed(_load_trajectories(args), args.delay)
    save_matrix(args.output_x, pairs.x_matrix)
    save_matrix(args.output_y, pairs.y_matrix)
    _write(args, serialize.dumps({"dim": pairs.dim, "n_pairs": pairs.n_pairs,
                                  "delay": args.delay}))


def cmd_forecast(args):
    pairs, mean, result, spec, test, truths = _forecast_setup(args)
    k = result.rank if args.modes is None else args.modes
    model, preds, score = _run_forecasts(result, pairs, spec, mean, k, args.ordering, truths)
    out = {
        "method": args.method,
        "ordering": args.ordering,
        "modes": k,
        "test_labels": [int(l) for l in test.labels],
        "mise": score,
        "eigenvalues": serialize.complex_list(model.eigenvalues),
        "residuals": serialize.real_list(model.residuals),
        "forecasts": [serialize.matrix(p) for p in preds],
    }
    _write(args, serialize.dumps(out))


def cmd_compress(args):
    pairs, mean, result, spec, test, truths = _forecast_setup(args)
    rows = []
    for k in args.modes_list:
        if k > result.rank:
            raise ConfigurationError(f"cannot keep {k} modes; rank is {result.rank}")
        scores = {o: _run_forecasts(result, pairs, spec, mean, k, o, truths)[2]
                  for o in ("residual", "pca")}
        rows.append({"modes": k, "mise_residual": scores["residual"], "mise_pca": scores["pca"]})
    if args.output_format == "csv":
        text = "modes,mise_residual,mise_pca\n" + "".join(
            f"{r['modes']},{r['mise_residual']:.17g},{r['mise_pca']:.17g}\n" for r in rows)
    else:
        text = serialize.dumps({"method": args.method, "rank": result.rank,
                                "test_labels": [int(l) for l in test.labels], "rows": rows})
    _write(args, text)


def cmd_selftest(args):
    return 0 if run_selftest(lambda line: print(line, file=sys.stdout)) else 1


COMMANDS = {
    "dmd": cmd_dmd, "kedmd": cmd_kedmd, "pseudospec": cmd_pseudospec,
    "validate": cmd_validate, "eigfun": cmd_eigfun, "embed": cmd_embed,
    "forecast": cmd_forecast, "compress": cmd_compress, "selftest": cmd_selftest,
}

_INPUT_ERRORS = (UsageError, OSError, ParseError, ShapeError, EmbeddingError,
                 ConfigurationError, argparse.ArgumentTypeError)


def _fail(kind, exc, code):
    reason = " ".join(str(exc).split()) or "no details"
    print(f"resdmd: error: {kind}: {type(exc).__name__}: {reason}", file=sys.stderr)
    return code


def _join_values(argv):
    # let values such as "-1.5:1.5:61,..." follow their flag without "="
    out = list(argv)
    for i in range(len(out) - 1):
        if out[i] in ("--grid", "--lambda") and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"{out[i]}={out[i + 1]}", None]
    return [a for a in out if a is not None]


def main(argv=None) -> int:
    try:
        argv = sys.argv[1:] if argv is None else argv
        args = build_parser().parse_args(_join_values(argv))
        return COMMANDS[args.command](args) or 0
    except (RankError, DegenerateError) as exc:
        return _fail("runtime", exc, 1)
    except _INPUT_ERRORS as exc:
        return _fail("validation", exc, 2)
    except ValueError as exc:
        return _fail("validation", exc, 2)
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        return _fail("runtime", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
