"""Command-line front end.

Subcommands ``verify``, ``state``, ``qfunc``, ``squeeze`` and ``phase``.
Angles are radians everywhere.  JSON output carries ``schema_version`` 1
and prints floats with 17 significant digits, so identical inputs give
byte-identical files.  Exit codes: 0 success, 1 check failure or numerical
error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .basis_states import (
    glauber_amplitudes,
    half_integer,
    phase_randomized_density,
    pmu_labels,
    pmu_state_m1,
    pmu_state_m2,
    thermal_density_m1,
)
from .config import DEFAULT, Tolerances
from .errors import (
    LabelInvalid,
    ParamInvalid,
    PathInvalid,
    PolarqoError,
    SpecError,
)
from .fock import FockBasis, QuantumState, build_basis, commutator, identity_op
from .gcs import (
    GcsSpec,
    build_gcs,
    build_gcs_series,
    d_coefficients,
    identity_resolution_check,
    overlap_closed_form,
    su2_displacement,
    x_biphoton_expansion_check,
)
from .geomphase import geometric_phase_closed, geometric_phase_numeric, parse_loop
from .polarization import PolarizationOps, variance_profile
from .quasiprob import q_complete, q_reduced
from .squeezing import squeeze_report

SCHEMA_VERSION = 1

_USAGE_ERRORS = (SpecError, LabelInvalid, ParamInvalid, PathInvalid)


class UsageError(Exception):
    """Bad command-line configuration (exit code 2)."""


# ------------------------------------------------------------------ output


def _fmt(obj, indent=0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _fmt([obj.real, obj.imag], indent)
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_fmt(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_fmt(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + _fmt(v, indent + 1) for v in seq) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _fmt(obj) + "\n"


def _emit(payload: dict, out: str | None):
    text = dumps({"schema_version": SCHEMA_VERSION, **payload})
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------ configuration


@dataclass(frozen=True)
class RunConfig:
    m: int | None
    n_max: int
    tol_tail: float
    seed: int
    out: str | None
    grid: tuple

    def validate(self) -> "RunConfig":
        if self.m is not None and self.m < 1:
            raise UsageError("m must be ≥ 1")
        if self.n_max < 0:
            raise UsageError("nmax must be ≥ 0")
        if not self.tol_tail > 0:
            raise UsageError("tol-tail must be > 0")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise UsageError("grid must have at least one node per axis")
        return self

    @property
    def tol(self) -> Tolerances:
        return DEFAULT.with_(tail=self.tol_tail)


def _grid(text: str) -> tuple:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError("grid must look like THxPH, e.g. 64x128")
    return int(m.group(1)), int(m.group(2))


def _config(args) -> RunConfig:
    return RunConfig(args.m, args.nmax, args.tol_tail, args.seed, args.out, args.grid).validate()


# ---------------------------------------------------------- spec parsing

_FAMILY_ALIASES = {
    "semi": "semi_coherent",
    "maxc": "max_classical",
    "max": "max_classical",
    "fock": "fock_rotated",
    "x": "x_biphoton",
    "y": "y_biphoton",
    "glauber_rot": "glauber_rotated",
    "circular": "glauber_circular",
    "constrained": "glauber_phase_constrained",
}
_KEY_ALIASES = {"μ": "mu", "θ": "theta", "φ": "phi", "λ": "t", "lambda": "t",
                "ζ": "zeta", "κ": "kappa", "γ": "gamma", "α": "alpha",
                "α+": "alpha_plus", "α-": "alpha_minus"}
_LIST_KEYS = {"alpha_plus", "alpha_minus", "alpha", "occupations"}
_STATE_KINDS = {"thermal", "phase_randomized", "vacuum", "pmu"}


def _scalar(text: str):
    text = text.strip()
    try:
        if "j" in text:
            return complex(text.replace(" ", ""))
        if "/" in text:
            return Fraction(text)
        val = float(text)
        return int(val) if re.fullmatch(r"[+-]?\d+", text) else val
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"cannot parse value {text!r}") from exc


def parse_inline(text: str) -> tuple:
    """``name(key=value, ...)`` into ``(name, dict)``.

    Lists use ``|`` as separator, e.g. ``glauber(alpha_plus=1|0, alpha_minus=0|1)``.
    """
    m = re.fullmatch(r"\s*([A-Za-z_]\w*)\s*\((.*)\)\s*", text, flags=re.S)
    if not m:
        raise SpecError(f"spec: cannot parse inline spec {text!r}")
    name, body = m.group(1), m.group(2).strip()
    params = {}
    if body:
        for part in body.split(","):
            key, eq, val = part.partition("=")
            if not eq:
                raise SpecError(f"spec: expected key=value, got {part.strip()!r}")
            key = _KEY_ALIASES.get(key.strip(), key.strip())
            if key in _LIST_KEYS:
                params[key] = [_scalar(v) for v in val.split("|")]
            elif key == "mode_angles":
                pairs = [v.split(":") for v in val.split("|")]
                params[key] = [(float(a), float(b)) for a, b in pairs]
            else:
                params[key] = _scalar(val)
    return name, params


def load_spec(text: str) -> GcsSpec:
    """GcsSpec from a JSON file, a JSON string or an inline descriptor."""
    path = Path(text)
    if path.suffix == ".json" or (path.exists() and path.is_file()):
        try:
            return GcsSpec.from_json(path.read_text())
        except OSError as exc:
            raise SpecError(f"spec: cannot read {text!r}") from exc
    if text.lstrip().startswith("{"):
        return GcsSpec.from_json(text)
    name, params = parse_inline(text)
    fam = _FAMILY_ALIASES.get(name, name)
    return GcsSpec.from_dict({"family": fam, **params})


def _spec_modes(spec: GcsSpec) -> int | None:
    return spec._modes()


def load_state(text: str, cfg: RunConfig) -> tuple:
    """State from an artifact file, a state descriptor or a GcsSpec.

    Returns ``(state, description dict)``.
    """
    path = Path(text)
    if path.suffix == ".json" and path.is_file():
        data = json.loads(path.read_text())
        if "amplitudes" in data:
            return read_state_artifact(data), {"artifact": str(path)}
    name = None
    if "(" in text:
        name, params = parse_inline(text)
    if name in _STATE_KINDS:
        m = cfg.m or 1
        basis = build_basis(m, cfg.n_max, cfg.tol)
        if name == "thermal":
            if "beta" not in params:
                raise SpecError("beta: required for thermal")
            return thermal_density_m1(float(params["beta"]), basis, cfg.tol), {"thermal": params}
        if name == "phase_randomized":
            return phase_randomized_density(complex(params.get("alpha", 1.0)), basis, cfg.tol), {
                "phase_randomized": params}
        if name == "vacuum":
            return QuantumState.fock(basis, [0] * basis.n_slots), {"vacuum": {}}
        p, mu = params.get("p"), params.get("mu")
        if m == 1:
            return pmu_state_m1(p, mu, basis), {"pmu": params}
        return pmu_state_m2(p, mu, int(params.get("n", 2 * half_integer(p))),
                            params.get("t", p), basis), {"pmu": params}
    spec = load_spec(text)
    m = cfg.m or _spec_modes(spec) or 1
    basis = build_basis(m, cfg.n_max, cfg.tol)
    return build_gcs(spec, basis, tol=cfg.tol), {"spec": spec.to_dict()}


def state_artifact(state: QuantumState, extra: dict) -> dict:
    b = state.basis
    return {
        "basis": {
            "m": b.m,
            "n_max": b.n_max,
            "dim": b.dim,
            "ordering": "total photon number ascending, then occupations descending",
            "slots": "(n+(1), n-(1), ..., n+(m), n-(m))",
            "occupations": [list(map(int, s)) for s in b.states],
        },
        "amplitudes": [[float(z.real), float(z.imag)] for z in state.vector],
        "leak": float(state.leak),
        **extra,
    }


def read_state_artifact(data: dict) -> QuantumState:
    """Inverse of :func:`state_artifact`."""
    try:
        b = data["basis"]
        basis = build_basis(int(b["m"]), int(b["n_max"]))
        amps = np.array([complex(re_, im) for re_, im in data["amplitudes"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"state artifact: malformed ({exc})") from exc
    occ = [tuple(o) for o in b.get("occupations", [])]
    if occ and occ != list(basis.states):
        raise SpecError("state artifact: basis ordering differs from this version")
    return QuantumState.pure(basis, amps, normalize=True, leak=float(data.get("leak", 0.0)))


# ------------------------------------------------------------------ verify


def _check(name: str, residual: float, threshold: float) -> dict:
    residual = float(residual)
    return {"name": name, "residual": residual, "threshold": threshold,
            "passed": bool(np.isfinite(residual) and residual <= threshold)}


def _max(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def run_verify(cfg: RunConfig) -> list:
    """Invariant suites for the configured basis."""
    m = cfg.m or 1
    basis = build_basis(m, cfg.n_max, cfg.tol)
    ops = PolarizationOps(basis)
    rng = np.random.default_rng(cfg.seed)
    checks = []
    P0, P1, P2 = (ops.P0.matrix, ops.P1.matrix, ops.P2.matrix)
    comm = lambda a, b: a @ b - b @ a  # noqa: E731
    checks.append(_check("commutator [P1,P2] = -i P0", _max(comm(P1, P2) + 1j * P0), 1e-12))
    checks.append(_check("commutator [P2,P0] = -i P1", _max(comm(P2, P0) + 1j * P1), 1e-12))
    checks.append(_check("commutator [P0,P1] = -i P2", _max(comm(P0, P1) + 1j * P2), 1e-12))
    Pp, Pm = ops.Pplus.matrix, ops.Pminus.matrix
    checks.append(_check("P+ P- = P1^2 + P2^2 + P0", _max(Pp @ Pm - (P1 @ P1 + P2 @ P2 + P0)), 1e-11))
    N, C = ops.N.matrix, ops.casimir.matrix
    checks.append(_check("casimir commutes with N and P_a",
                         max(_max(comm(C, X)) for X in (N, P0, P1, P2)), 1e-11))

    # eigenstructure and orthonormality of the labelled eigenstates
    if m <= 2:
        eig = gram = 0.0
        for n in range(basis.n_max + 1):
            vecs = []
            for p, mu, t in pmu_labels(m, n):
                v = (pmu_state_m1(p, mu, basis) if m == 1
                     else pmu_state_m2(p, mu, n, t, basis)).data
                pf, muf = float(p), float(mu)
                eig = max(eig, _max(C @ v - pf * (pf + 1) * v), _max(P0 @ v - muf * v),
                          _max(N @ v - n * v))
                vecs.append(v)
            V = np.array(vecs)
            if len(V):
                gram = max(gram, _max(V.conj() @ V.T - np.eye(len(V))))
        checks.append(_check("labelled eigenstates are eigenvectors", eig, 1e-12))
        checks.append(_check("labelled eigenstates are orthonormal", gram, 1e-12))

    # displacement: unitarity, conjugation of a+^dag, closed-form coefficients
    th, ph = float(rng.uniform(0, np.pi)), float(rng.uniform(0, 2 * np.pi))
    D = su2_displacement(th, ph, ops).matrix
    checks.append(_check("displacement is unitary", _max(D.conj().T @ D - np.eye(basis.dim)), 1e-10))
    if m == 1:
        err = 0.0
        for n in range(basis.n_max + 1):
            p = Fraction(n, 2)
            for k in range(n + 1):
                mu = p - k
                col = D @ pmu_state_m1(p, mu, basis).data
                for k2 in range(n + 1):
                    mp = p - k2
                    ref = np.vdot(pmu_state_m1(p, mp, basis).data, col)
                    err = max(err, abs(ref - d_coefficients(p, mp, mu, th, ph)))
        checks.append(_check("D-coefficients match the displacement", err, 1e-10))

    # overlaps of semi-coherent states
    if m <= 2 and basis.n_max >= 1:
        p = Fraction(min(basis.n_max, 3), 2)
        err = 0.0
        for _ in range(6):
            mus = rng.choice([p - k for k in range(int(2 * p) + 1)], 2)
            a = GcsSpec("semi_coherent", theta=rng.uniform(0, np.pi), phi=rng.uniform(0, 2 * np.pi),
                        p=p, mu=mus[0])
            b = GcsSpec("semi_coherent", theta=rng.uniform(0, np.pi), phi=rng.uniform(0, 2 * np.pi),
                        p=p, mu=mus[1])
            brute = np.vdot(build_gcs(a, basis).data, build_gcs(b, basis).data)
            err = max(err, abs(brute - overlap_closed_form(a, b)))
        checks.append(_check("semi-coherent overlap closed form", err, 1e-10))
        spec = GcsSpec("semi_coherent", theta=th, phi=ph, p=p, mu=p - 1 if p >= 1 else p)
        dev = 1 - build_gcs(spec, basis).fidelity(build_gcs_series(spec, basis))
        checks.append(_check("semi-coherent series vs exponential", abs(dev), 1e-9))

    # resolution of the identity
    if m <= 2:
        worst = 0.0
        for n in range(1, min(basis.n_max, 4) + 1):
            worst = max(worst, identity_resolution_check(Fraction(n, 2), n, basis, ops))
        checks.append(_check("coherent-state resolution of the identity", worst, 1e-10))

    if m == 2:
        zeta, kappa = 0.05, 0.1
        checks.append(_check("X-biphoton series vs exponential",
                             x_biphoton_expansion_check(0, zeta, kappa, basis, th, ph, tol=cfg.tol), 1e-8))

    # Glauber flatness and uncertainty relations on random states
    amps = rng.normal(size=(2, m)) * 0.3 + 1j * rng.normal(size=(2, m)) * 0.3
    vec, leak = glauber_amplitudes(basis, amps[0], amps[1])
    if leak < 1e-12:
        st = QuantumState.pure(basis, vec, normalize=True)
        prof = variance_profile(st, ops)
        checks.append(_check("Glauber variances equal <N>/4",
                             max(abs(s - prof.n_mean / 4) for s in prof.sigma), 1e-9))
    worst = 0.0
    for _ in range(5):
        v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        st = QuantumState.pure(basis, v, normalize=True)
        rep = squeeze_report(st, ops, classify=False)
        worst = max(worst, max(t.rhs - t.lhs for t in rep.triples))
    checks.append(_check("uncertainty relations hold on random states", max(worst, 0.0), 1e-10))

    # geometric phase of a spin-1/2 reference on the equator
    if basis.n_max >= 1:
        spec = GcsSpec("semi_coherent", p=Fraction(1, 2), mu=Fraction(1, 2), n=1,
                       t=Fraction(1, 2) if m == 2 else None)
        loop = parse_loop(f"circle:theta={np.pi / 2!r}")
        res = geometric_phase_numeric(spec, loop, basis, tol=cfg.tol)
        checks.append(_check("geometric phase on the equator equals -pi",
                             abs(res.gamma_total + np.pi), 1e-6))
    return checks


# ---------------------------------------------------------------- commands


def cmd_verify(args) -> int:
    cfg = _config(args)
    checks = run_verify(cfg)
    ok = all(c["passed"] for c in checks)
    _emit({"command": "verify", "m": cfg.m or 1, "n_max": cfg.n_max, "seed": cfg.seed,
           "passed": ok, "checks": checks}, cfg.out)
    return 0 if ok else 1


def cmd_state(args) -> int:
    cfg = _config(args)
    if not args.spec:
        raise UsageError("state needs --spec")
    spec = load_spec(args.spec)
    m = cfg.m or _spec_modes(spec) or 1
    basis = build_basis(m, cfg.n_max, cfg.tol)
    st = build_gcs(spec, basis, tol=cfg.tol)
    _emit({"command": "state", **state_artifact(st, {"spec": spec.to_dict()})}, cfg.out)
    return 0


def cmd_qfunc(args) -> int:
    cfg = _config(args)
    if not args.state:
        raise UsageError("qfunc needs --state")
    rho, desc = load_state(args.state, cfg)
    n_theta, n_phi = cfg.grid
    if args.p is not None:
        grid = q_reduced(rho, half_integer(args.p, "p"), n_theta, n_phi, tol=cfg.tol)
    elif args.spec:
        grid = q_complete(rho, load_spec(args.spec), n_theta, n_phi, cfg.tol)
    else:
        raise UsageError("qfunc needs --p (reduced) or --spec (complete reference)")
    grid.meta.update({"state": desc})
    out = cfg.out or "qfunc.csv"
    grid.write_csv(out)
    _emit({"command": "qfunc", "csv": out, "p": None if grid.p is None else str(grid.p),
           "min": float(grid.values.min()), "max": float(grid.values.max()),
           "integral": grid.integral()}, None)
    return 0


def cmd_squeeze(args) -> int:
    cfg = _config(args)
    if not args.state:
        raise UsageError("squeeze needs --state")
    rho, desc = load_state(args.state, cfg)
    rep = squeeze_report(rho, PolarizationOps(rho.basis), cfg.tol)
    _emit({"command": "squeeze", "state": desc, "report": rep.to_dict()}, cfg.out)
    return 0


def cmd_phase(args) -> int:
    cfg = _config(args)
    if not args.spec or not args.loop:
        raise UsageError("phase needs --spec and --loop")
    spec = load_spec(args.spec)
    loop = parse_loop(args.loop)
    m = cfg.m or _spec_modes(spec) or 1
    basis = build_basis(m, cfg.n_max, cfg.tol)
    res = geometric_phase_numeric(spec, loop, basis, tol=cfg.tol, strict=False)
    payload = {"command": "phase", "loop": loop.label, "spec": spec.to_dict(), **res.to_dict()}
    try:
        payload["gamma_closed"] = geometric_phase_closed(spec, loop)
    except PolarqoError:
        payload["gamma_closed"] = None
    _emit(payload, cfg.out)
    return 0 if res.converged else 1


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarqo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polarqo {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=None, help="spatial modes (default: from spec, else 1)")
    common.add_argument("--nmax", type=int, default=8, help="photon-number cutoff")
    common.add_argument("--tol-tail", type=float, default=DEFAULT.tail, help="truncation tail tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--grid", type=_grid, default=(64, 128), help="Q grid as THxPH")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--spec", default=None, help="GcsSpec: JSON file, JSON text or inline")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run invariant suites").set_defaults(func=cmd_verify)
    sub.add_parser("state", parents=[common], help="build a coherent state").set_defaults(func=cmd_state)
    q = sub.add_parser("qfunc", parents=[common], help="Q-function grid")
    q.add_argument("--state", default=None, help="state artifact, descriptor or spec")
    q.add_argument("--p", default=None, help="sector for the reduced Q-function")
    q.set_defaults(func=cmd_qfunc)
    s = sub.add_parser("squeeze", parents=[common], help="squeezing report")
    s.add_argument("--state", default=None, help="state artifact, descriptor or spec")
    s.set_defaults(func=cmd_squeeze)
    ph = sub.add_parser("phase", parents=[common], help="geometric phase around a loop")
    ph.add_argument("--loop", default=None, help="circle:theta=<v>, lune:phi1=<a>,phi2=<b> or CSV")
    ph.set_defaults(func=cmd_phase)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"polarqo: error: {exc}", file=sys.stderr)
        return 2
    except _USAGE_ERRORS as exc:
        print(f"polarqo: error: {exc}", file=sys.stderr)
        return 2
    except PolarqoError as exc:
        print(f"polarqo: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
