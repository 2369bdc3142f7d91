"""
Command-line front end.

Every verb prints one JSON report on stdout (or a plain-text table with
``--pretty``). Exit codes: 0 analysis completed, 2 input error,
3 precondition violation, 4 numerical failure.
"""
import argparse
import datetime
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from qcav import __version__
from qcav.analysis import CodeKind, classify, find_joint_eigenspace, search_random_code
from qcav.channel import OptimizerSettings, code_fidelity, efficiency, state_fidelity
from qcav.codes import exact_recovery_fidelity, monte_carlo, roundtrip
from qcav.errors import IncompleteFamilyError, NotPSDError, NumericalError, QcavError
from qcav.hilbert import DEFAULT_TOL, Subspace, normalize
from qcav.io import CodeSpec, ModelSpec, SpecError, decode_ket, encode_complex, encode_ket, load_json, \
    parse_code, parse_model
from qcav.noise import COMPLETE_TOL, complete_family

log = logging.getLogger("qcav")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_NUMERICAL = 4


def _matrix(m) -> List[List[List[float]]]:
    return [[encode_complex(v) for v in row] for row in np.asarray(m)]


def _clean(v, eps=1e-14):
    # drop rounding residue so reported kets stay readable
    re, im = v.real.copy(), v.imag.copy()
    re[np.abs(re) < eps] = 0.0
    im[np.abs(im) < eps] = 0.0
    return re + 1j * im


def _subspace_kets(code: Subspace) -> List[Dict[str, List[float]]]:
    return [encode_ket(_clean(code.basis[:, j]), code.n_qubits) for j in range(code.dim)]


def _model_config(spec: ModelSpec, source: str) -> Dict[str, Any]:
    return {"source": source, "spec": spec.to_dict()}


def _code_config(spec: CodeSpec, source: str) -> Dict[str, Any]:
    return {"source": source, "spec": spec.to_dict()}


def _check_dims(code: Subspace, family):
    if code.n_qubits != family.n_qubits:
        raise SpecError("code", f"code has {code.n_qubits} qubits but the model has {family.n_qubits}")


def cmd_classify(args) -> Dict[str, Any]:
    spec = parse_model(args.model)
    cspec = parse_code(args.code)
    family = spec.build()
    code = cspec.build()
    _check_dims(code, family)
    res = classify(code, family, args.tol)
    g = res.gamma
    out: Dict[str, Any] = {
        "labels": list(family.labels),
        "kl_satisfied": g.kl_satisfied,
        "kind": res.kind.value,
        "rank": g.rank,
        "eigenvalues": [float(v) for v in g.eigenvalues],
        "gamma": _matrix(g.entries) if g.kl_satisfied else None,
        "violation": None,
        "completeness_residual": family.completeness_residual,
    }
    if g.violation is not None:
        v = g.violation
        out["violation"] = {"i": v.i, "j": v.j, "a": family.labels[v.a], "b": family.labels[v.b],
                            "magnitude": v.magnitude}
    if res.kind == CodeKind.QEAC:
        gam = res.qeac_eigenvalues
        out["qeac_eigenvalues"] = dict(zip(family.labels, (encode_complex(z) for z in gam)))
        out["qeac_norm"] = float(np.sum(np.abs(gam) ** 2))
    config = {"model": _model_config(spec, args.model), "code": _code_config(cspec, args.code), "tol": args.tol}
    return {"config": config, "result": out}


def cmd_find_dfs(args) -> Dict[str, Any]:
    spec = parse_model(args.model)
    family = spec.build()
    found = find_joint_eigenspace(list(family.operators), args.tol)
    best = max((r.dim for r in found), default=0)
    subspaces = []
    for r in found:
        if r.dim != best or best == 0:
            continue
        subspaces.append({
            "dimension": r.dim,
            "eigenvalues": dict(zip(family.labels, (encode_complex(z) for z in r.eigenvalue_tuple))),
            "basis": _subspace_kets(r.subspace),
            "efficiency": efficiency(r.dim, family.n_qubits),
        })
    out = {"labels": list(family.labels), "dimension": best, "subspaces": subspaces}
    config = {"model": _model_config(spec, args.model), "tol": args.tol}
    return {"config": config, "result": out}


def _load_state(text: str, n_qubits: Optional[int] = None) -> np.ndarray:
    obj = load_json(text) if text.endswith(".json") else None
    if obj is None:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"--state:{exc.lineno}:{exc.colno}", exc.msg)
    psi = decode_ket(obj, n_qubits, "state")
    if np.linalg.norm(psi) < 1e-12:
        raise SpecError("state", "zero vector")
    return normalize(psi)


def cmd_fidelity(args) -> Dict[str, Any]:
    spec = parse_model(args.model)
    family = spec.build()
    if family.completeness_residual > COMPLETE_TOL:
        if not args.complete:
            raise IncompleteFamilyError(
                f"family is not complete (residual {family.completeness_residual:.3e}); pass --complete",
                family.completeness_residual)
        family = complete_family(family)
    config: Dict[str, Any] = {"model": _model_config(spec, args.model), "complete": args.complete}
    if args.state is not None:
        psi = _load_state(args.state, family.n_qubits)
        config["state"] = encode_ket(psi, family.n_qubits)
        out = {"mode": "state", "fidelity": state_fidelity(psi, family)}
        return {"config": config, "result": out}
    if args.code is None:
        raise SpecError("arguments", "fidelity needs --code or --state")
    cspec = parse_code(args.code)
    code = cspec.build()
    _check_dims(code, family)
    opts = OptimizerSettings(starts=args.starts, seed=args.seed)
    res = code_fidelity(code, family, opts)
    config.update({"code": _code_config(cspec, args.code), "starts": args.starts, "seed": args.seed})
    out = {"mode": "code", "fidelity": res.value, "argmin": encode_ket(res.argmin_state, family.n_qubits),
           "converged": res.converged, "iterations": res.iterations, "optimizer_starts": res.starts}
    return {"config": config, "result": out}


def _simulate_code(name: str):
    base, _, rest = name.partition(":")
    if base == "four-qubit":
        if rest:
            raise SpecError("--code", "four-qubit takes no options")
        return "four-qubit", 1
    if base == "general-parity":
        if not rest.startswith("L="):
            raise SpecError("--code", "general-parity needs L=<n>")
        try:
            L = int(rest[2:])
        except ValueError:
            raise SpecError("--code", f"not an integer: {rest[2:]!r}")
        if L < 1:
            raise SpecError("--code", "L must be >= 1")
        return "general-parity", L
    raise SpecError("--code", f"simulate supports four-qubit and general-parity:L=<n>, got {name!r}")


def _pattern(t) -> str:
    return ",".join(f"{v:+d}" if v else "0" for v in t)


def cmd_simulate(args) -> Dict[str, Any]:
    scheme, L = _simulate_code(args.code)
    n_pairs = L + 1 if scheme == "general-parity" else 2
    model_arg = args.model or f"pairwise:L={n_pairs}"
    spec = parse_model(model_arg)
    family = spec.build()
    if family.n_qubits != 2 * n_pairs:
        raise SpecError("--model", f"model has {family.n_qubits} qubits but the code needs {2 * n_pairs}")
    if args.input is not None:
        psi = _load_state(args.input, L)
    else:
        rng = np.random.default_rng([args.seed, 2**31])
        psi = normalize(rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L))
    config = {"code": args.code, "model": _model_config(spec, model_arg), "seed": args.seed,
              "input": encode_ket(psi, L)}
    if args.inject is not None:
        if args.inject not in family.labels:
            raise SpecError("--inject", f"unknown label {args.inject!r}; model has {list(family.labels)}")
        config["inject"] = args.inject
        rep = roundtrip(psi, family, args.inject, scheme, seed=args.seed)
        out = {"mode": "inject", "injected_error": rep.injected_error,
               "syndrome": list(rep.syndrome.outcomes), "syndrome_probability": rep.syndrome.probability,
               "recovery": rep.recovery.describe(), "logical_fidelity": rep.logical_fidelity,
               "success": rep.success, "note": rep.note}
        return {"config": config, "result": out}
    config["trials"] = args.trials
    rep = monte_carlo(psi, family, args.trials, args.seed, scheme)
    exact = exact_recovery_fidelity(psi, family, scheme)
    z = (rep.mean_fidelity - exact) / rep.std_error if rep.std_error > 0 else 0.0
    out = {
        "mode": "monte-carlo",
        "trials": rep.trials,
        "mean_fidelity": rep.mean_fidelity,
        "std_error": rep.std_error,
        "exact_fidelity": exact,
        "z_score": z,
        "syndrome_counts": {_pattern(k): v for k, v in sorted(rep.syndrome_counts.items())},
        "branch_counts": rep.outcome_counts,
        "branch_mean_fidelity": rep.outcome_mean_fidelity,
        "uncorrectable": rep.uncorrectable,
        "recoveries": {_pattern(k): v for k, v in sorted(rep.recoveries.items())},
    }
    return {"config": config, "result": out}


def cmd_search_code(args) -> Dict[str, Any]:
    spec = parse_model(args.model)
    family = spec.build()
    rep = search_random_code(family, args.dim, args.trials, args.seed, args.tol, max_iter=args.max_iter)
    out: Dict[str, Any] = {"found": rep.found, "residual": rep.residual, "best_residual": rep.best_residual,
                           "trials_run": rep.trials_run, "success_trial": rep.success_trial, "code": None}
    if rep.found:
        out["code"] = {"qubits": family.n_qubits, "basis": _subspace_kets(rep.code)}
        cls = classify(rep.code, family, max(args.tol, DEFAULT_TOL) * 10)
        out["kind"] = cls.kind.value
    config = {"model": _model_config(spec, args.model), "dim": args.dim, "trials": args.trials,
              "seed": args.seed, "tol": args.tol, "max_iter": args.max_iter}
    return {"config": config, "result": out}


COMMANDS = {
    "classify": cmd_classify,
    "find-dfs": cmd_find_dfs,
    "fidelity": cmd_fidelity,
    "simulate": cmd_simulate,
    "search-code": cmd_search_code,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="print a readable table instead of JSON")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the report")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qcav", description="Verify, classify and simulate quantum codes under operator-sum noise.")
    parser.add_argument("--version", action="version", version=f"qcav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="Knill-Laflamme check and code classification")
    p.add_argument("model", help="model JSON file or preset (pairwise:L=2, collective:n=4, correlated, ...)")
    p.add_argument("code", help="code JSON file or built-in (four-qubit, general-parity:L=<n>, correlated)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("find-dfs", parents=[common], help="largest joint eigenspace of the interaction operators")
    p.add_argument("model")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("fidelity", parents=[common], help="state or worst-case code fidelity")
    p.add_argument("model")
    p.add_argument("code", nargs="?")
    p.add_argument("--state", help="ket as inline JSON or a .json file")
    p.add_argument("--complete", action="store_true", help="square-root complete an incomplete family first")
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", parents=[common], help="encode, inject or sample noise, correct, decode")
    p.add_argument("--code", required=True, help="four-qubit or general-parity:L=<n>")
    p.add_argument("--model", help="defaults to the completed pairwise preset matching the code")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--inject", help="label of the single error to inject")
    mode.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", help="logical input ket (inline JSON or .json file); random from --seed otherwise")

    p = sub.add_parser("search-code", parents=[common], help="randomized search for a Knill-Laflamme code")
    p.add_argument("model")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=300)
    return parser


def _pretty(value, indent=0) -> List[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k:<24} {_scalar(v)}")
    elif isinstance(value, list):
        for v in value:
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}-")
                lines.extend(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(value))
    return lines


def _flat(v) -> bool:
    return isinstance(v, list) and all(isinstance(x, (int, float)) for x in v) and len(v) <= 8


def _scalar(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v)


def _emit(report, pretty: bool, stream):
    if pretty:
        stream.write("\n".join(_pretty(report)) + "\n")
    else:
        stream.write(json.dumps(report, sort_keys=False) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    report: Dict[str, Any] = {"command": args.command, "version": __version__}
    try:
        report.update(COMMANDS[args.command](args))
        code = EXIT_OK
    except IncompleteFamilyError as exc:
        report["error"] = {"type": "precondition", "message": str(exc)}
        code = EXIT_PRECONDITION
    except NotPSDError as exc:
        # completion impossible for these couplings: the input is at fault
        report["error"] = {"type": "input", "message": f"{exc}; reduce the coupling strengths"}
        code = EXIT_INPUT
    except NumericalError as exc:
        report["error"] = {"type": "numerical", "message": str(exc)}
        code = EXIT_NUMERICAL
    except (QcavError, OSError, ValueError, TypeError, KeyError) as exc:
        # malformed files surface as lookup or type errors deep in parsing
        report["error"] = {"type": "input", "message": str(exc)}
        code = EXIT_INPUT
    report["exit_code"] = code
    if not args.no_timestamp:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _emit(report, args.pretty, sys.stdout)
    if code:
        print(f"qcav: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
