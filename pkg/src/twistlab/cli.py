"""Command-line front end (``twistlab``).

Exit codes: 0 success, 2 bad input or malformed file, 3 unnormalized state,
4 system too large, 5 invariant or consistency failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import bell_product_coefficients, haar_average_fraction, haar_statistics
from .ansatz import build_state, fidelity, fit, load_params, random_params, save_params
from .corrmeas import AGREE_RTOL, METHODS, purity_spectrum, purity_upper_bound, twisted_purity
from .errors import ConsistencyError, InvalidInputError, NormalizationError
from .fock import StateVector, basis, load_state, mask_of, random_hermitian, save_state, single_particle_rotate
from .models import eigenstates, hubbard, relative_energy_index, spectrum, syk
from .pluecker import random_ci_state

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NORM = 3
EXIT_DIM = 4
EXIT_INVARIANT = 5

MAX_MODES = 16


class DimensionError(Exception):
    pass


class InvariantFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _header(args) -> str:
    if args.no_timestamp:
        return ""
    return "# generated " + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") + "\n"


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _summary(msg: str) -> None:
    print(msg, file=sys.stderr)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def _spectrum_csv(args, omegas) -> str:
    return _header(args) + _csv(["k", "omega"], [[k, w] for k, w in enumerate(omegas)])


def _check_modes(l: int) -> None:
    if l > MAX_MODES:
        raise DimensionError(f"{l} modes exceeds the cap of {MAX_MODES}")


def _parse_modes(text: str) -> int:
    try:
        return mask_of(int(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse mode list {text!r}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_purity(args) -> int:
    v = load_state(args.state)
    _check_modes(v.l)
    kmax = v.n if args.kmax is None else args.kmax
    if args.method == "all":
        rows = []
        for k in range(kmax + 1):
            vals = [twisted_purity(v, k, m) for m in METHODS]
            if max(vals) - min(vals) > AGREE_RTOL * max(1.0, abs(vals[0])):
                raise InvariantFailure(f"methods disagree at k={k}: {vals}")
            rows.append([k, *vals])
        _emit(_header(args) + _csv(["k", *METHODS], rows), args.out)
        _summary(f"purity: l={v.l} n={v.n} kmax={kmax}; three methods agree")
        return EXIT_OK
    method = None if args.method == "auto" else args.method
    spec = purity_spectrum(v, kmax, method, cross_check=args.cross_check)
    _emit(_spectrum_csv(args, spec.omegas), args.out)
    _summary(f"purity: l={v.l} n={v.n} omega_1={spec.omegas[1] if kmax >= 1 else float('nan'):.6e}")
    return EXIT_OK


def _pick_state(H, choice: str, sz2):
    if choice == "ground":
        return eigenstates(H, 1, sz2=sz2)[0]
    try:
        if choice.startswith("rel:"):
            idx = relative_energy_index(spectrum(H, sz2), float(choice[4:]))
        else:
            idx = int(choice)
    except ValueError:
        raise InvalidInputError(f"--state must be 'ground', an index or 'rel:<fraction>', got {choice!r}") from None
    return eigenstates(H, sz2=sz2, indices=[idx])[0]


def _model_outputs(args, H, label: str) -> int:
    sz2 = 0 if getattr(args, "sz_restrict", False) else None
    energy, v = _pick_state(H, args.state, sz2)
    spec = purity_spectrum(v)
    header = _header(args) + f"# {label} energy={energy:.16e}\n"
    _emit(header + _csv(["k", "omega"], [[k, w] for k, w in enumerate(spec.omegas)]), args.out_spectrum)
    if args.out_state:
        save_state(v, args.out_state)
    _summary(f"{label}: E={energy:.12f} omega={np.array2string(spec.omegas, precision=4)}")
    return EXIT_OK


def cmd_hubbard(args) -> int:
    _check_modes(2 * args.sites)
    H = hubbard(args.sites, args.t, args.U)
    return _model_outputs(args, H, f"hubbard sites={args.sites} t={args.t} U={args.U}")


def cmd_syk(args) -> int:
    _check_modes(args.modes)
    H = syk(args.modes, args.seed, args.n)
    return _model_outputs(args, H, f"syk modes={args.modes} seed={args.seed}")


def cmd_haar(args) -> int:
    _check_modes(args.l)
    kmax = min(args.n, args.l - args.n)
    mean, se = haar_statistics(args.l, args.n, args.samples, args.seed, kmax)
    rows = []
    for k in range(kmax + 1):
        unsigned = float(haar_average_fraction(args.l, args.n, k))
        corrected = float(haar_average_fraction(args.l, args.n, k, sign_corrected=True))
        rows.append([k, mean[k], se[k], unsigned, corrected])
    _emit(_header(args) + _csv(["k", "mean", "stderr", "closed_form", "closed_form_signed"], rows), args.out)
    _summary(
        f"haar: l={args.l} n={args.n} samples={args.samples} seed={args.seed} "
        f"mean omega_1={mean[1] if kmax >= 1 else float('nan'):.6f}"
    )
    return EXIT_OK


def cmd_bell(args) -> int:
    coeffs = bell_product_coefficients(args.copies)
    _emit(_spectrum_csv(args, [float(c) for c in coeffs]), args.out)
    _summary(f"bell: copies={args.copies} omega={coeffs}")
    return EXIT_OK


def cmd_fit(args) -> int:
    v = load_state(args.state)
    _check_modes(v.l)
    G = _parse_modes(args.G) if args.G else (1 << v.n) - 1
    params = fit(v, G, args.k)
    w = build_state(params)
    fid = fidelity(v, w)
    omega = twisted_purity(v.normalized(), args.k) if args.k <= min(v.n, v.l - v.n) else 0.0
    if args.out_params:
        save_params(params, args.out_params)
    _summary(f"fit: k={args.k} parameters={len(params.theta)} omega_k={omega:.3e} round-trip fidelity={fid:.16f}")
    if args.min_fidelity is not None and fid < args.min_fidelity:
        raise InvariantFailure(f"fidelity {fid!r} below {args.min_fidelity}")
    return EXIT_OK


def cmd_build(args) -> int:
    params = load_params(args.params)
    _check_modes(params.l)
    w = build_state(params)
    out = w.normalized() if args.normalize else w
    if args.out_state:
        save_state(out, args.out_state)
    msg = f"build: l={params.l} n={params.n} k={params.k} norm={w.norm:.12e}"
    if args.compare:
        fid = fidelity(load_state(args.compare), w)
        msg += f" fidelity={fid:.16f}"
    _summary(msg)
    return EXIT_OK


def cmd_ci_state(args) -> int:
    _check_modes(args.l)
    rng = np.random.default_rng(args.seed)
    v = random_ci_state(args.l, args.n, args.radius, rng)
    if args.rotate:
        v = single_particle_rotate(v, random_hermitian(args.l, rng))
    save_state(v, args.out)
    _summary(f"ci-state: l={args.l} n={args.n} radius={args.radius} rotated={args.rotate} seed={args.seed}")
    return EXIT_OK


def _random_state(l: int, n: int, rng) -> StateVector:
    b = basis(l, n)
    x = rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim)
    return StateVector(b, x / np.linalg.norm(x))


def _verify_invariants(args, rng) -> tuple[list, bool]:
    rows, ok = [], True
    l, n = args.l, args.n
    top = min(n, l - n)
    for trial in range(args.trials):
        v = _random_state(l, n, rng)
        spec = [[twisted_purity(v, k, m) for m in METHODS] for k in range(top + 1)]
        for k, vals in enumerate(spec):
            spread = max(vals) - min(vals)
            good = spread <= AGREE_RTOL * max(1.0, abs(vals[0]))
            rows.append(["cross-method", trial, k, spread, good])
            ok &= good
            bound = purity_upper_bound(l, n, k)
            good = vals[0] <= bound + 1e-9
            rows.append(["upper-bound", trial, k, vals[0] - bound, good])
            ok &= good
        w = single_particle_rotate(v, random_hermitian(l, rng))
        for k in range(top + 1):
            diff = abs(twisted_purity(w, k) - spec[k][0])
            good = diff < 1e-9
            rows.append(["rotation-invariance", trial, k, diff, good])
            ok &= good
        slater = single_particle_rotate(StateVector.basis_state(l, (1 << n) - 1), random_hermitian(l, rng))
        omega1 = twisted_purity(slater, 1) if top >= 1 else 0.0
        good = omega1 < 1e-10
        rows.append(["slater-nullity", trial, 1, omega1, good])
        ok &= good
    return rows, ok


def _verify_oddeven(args, rng) -> list:
    rows = []
    l, n = args.l, args.n
    top = min(n, l - n)
    for trial in range(args.trials):
        k = int(rng.integers(1, top + 1))
        eps = float(rng.choice([0.0, 1e-6, 1e-2]))
        base = build_state(random_params(l, n, k, rng, scale=0.5)).normalized()
        noise = _random_state(l, n, rng)
        v = StateVector(base.basis, base.amps + eps * noise.amps).normalized()
        v = single_particle_rotate(v, random_hermitian(l, rng))
        omegas = purity_spectrum(v).omegas
        for r in range(1, top // 2 + 1):
            odd, even = omegas[2 * r - 1], omegas[2 * r]
            rows.append([trial, k, eps, r, odd, even, odd < args.tol, even < args.tol])
    return rows


def cmd_verify(args) -> int:
    _check_modes(args.l)
    if not (0 < args.n < args.l):
        raise InvalidInputError("need 0 < n < l")
    rng = np.random.default_rng(args.seed)
    if args.suite == "invariants":
        rows, ok = _verify_invariants(args, rng)
        _emit(_header(args) + _csv(["check", "trial", "k", "value", "pass"], rows), args.out)
        failed = sum(1 for r in rows if not r[-1])
        _summary(f"verify invariants: {len(rows)} checks, {failed} failed")
        if not ok:
            raise InvariantFailure(f"{failed} invariant checks failed")
        return EXIT_OK
    rows = _verify_oddeven(args, rng)
    cols = ["trial", "class_k", "eps", "r", "omega_odd", "omega_even", "odd_small", "even_small"]
    _emit(_header(args) + _csv(cols, rows), args.out)
    joint = sum(1 for r in rows if r[-1] == r[-2])
    _summary(f"verify oddeven: {joint}/{len(rows)} pairs small-or-large together (tol={args.tol:g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistlab", description="Twisted purities of fermionic states.")
    parser.add_argument("--version", action="version", version=f"twistlab {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="cap on BLAS threads (env TWISTLAB_THREADS)")
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp comment line")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("purity", help="twisted-purity spectrum of a state file")
    p.add_argument("state")
    p.add_argument("--kmax", type=int)
    p.add_argument("--method", choices=[*METHODS, "auto", "all"], default="auto")
    p.add_argument("--cross-check", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("hubbard", help="periodic Hubbard chain eigenstate spectrum")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--U", type=float, default=1.0)
    p.add_argument("--state", default="ground", help="'ground', an eigen-index, or 'rel:<fraction>'")
    p.add_argument("--sz-restrict", action="store_true", help="diagonalize in the S_z = 0 sector")
    p.add_argument("--out-spectrum")
    p.add_argument("--out-state")
    p.set_defaults(func=cmd_hubbard)

    p = sub.add_parser("syk", help="complex SYK eigenstate spectrum")
    p.add_argument("--modes", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--state", default="ground")
    p.add_argument("--out-spectrum")
    p.add_argument("--out-state")
    p.set_defaults(func=cmd_syk)

    p = sub.add_parser("haar", help="Monte-Carlo Haar averages against the closed form")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_haar)

    p = sub.add_parser("bell", help="spectrum of a wedge product of Bell-like states")
    p.add_argument("--copies", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("fit", help="fit ansatz parameters to a state")
    p.add_argument("state")
    p.add_argument("--G", help="reference modes, e.g. '1,2,3' (default: lowest n)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out-params")
    p.add_argument("--min-fidelity", type=float, help="exit 5 if the round trip falls below this")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("build", help="build the ansatz state from parameters")
    p.add_argument("params")
    p.add_argument("--out-state")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--compare", help="state file to report fidelity against")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("ci-state", help="random (optionally rotated) truncated-CI state")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", type=int, required=True, help="max |S ^ S0|")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rotate", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ci_state)

    p = sub.add_parser("verify", help="randomized invariant or odd/even suites")
    p.add_argument("--suite", choices=["invariants", "oddeven"], default="invariants")
    p.add_argument("--l", type=int, default=8)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def _thread_limit(n):
    if n is None:
        env = os.environ.get("TWISTLAB_THREADS")
        try:
            n = int(env) if env else None
        except ValueError:
            raise InvalidInputError(f"TWISTLAB_THREADS must be an integer, got {env!r}") from None
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except NormalizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NORM
    except (InvalidInputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (InvariantFailure, ConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
