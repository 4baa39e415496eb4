"""Batch command-line interface.

Each subcommand reads one JSON run configuration, writes CSV and JSON
results into the output directory and exits with

* 0 on success,
* 2 on a configuration error,
* 3 on a solver error (degenerate gap, non-convergence, ...),
* 4 when an internal consistency check fails.

Every output directory also receives ``config.json`` (the fully
resolved configuration), ``version.json`` and ``manifest.json`` (file
names, sizes and SHA-256 digests).  Floats are written as their shortest
round-trip decimal, so a rerun with the same configuration and seed
reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import ast
import copy
import hashlib
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import io as kio
from .complex_ext import (
    ComplexPotential,
    complex_density,
    complex_ground,
    complex_invert,
    complex_quotient_norm,
    eigenvalue_property_residual,
    holomorphy_check,
)
from .density import pair_density
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateGroundStateError,
    IllConditionedError,
    KSDFTError,
    NonConvergenceError,
    SelectionAmbiguityError,
    SolverError,
)
from .functionals import (
    ac_sweep,
    exchange_energy,
    exchange_potential,
    gl2_energy,
    hartree,
    hartree_potential,
    levy_lieb,
)
from .grid import Grid, PotentialField, quotient_norm
from .inversion import forward, invert_density, lipschitz_probe
from .manybody import InteractionSpec, assemble_hamiltonian
from .response import assemble_lro

logger = logging.getLogger("ksdft1d")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CONSISTENCY = 0, 2, 3, 4

_FIELD = {
    "oneOf": [
        {"type": "number"},
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "expr": {"type": "string"},
                "values": {"type": "array", "items": {"type": "number"}},
                "file": {"type": "string"},
                "atoms": {
                    "type": "array",
                    "items": {"type": "array", "prefixItems": [{"type": "integer"}, {"type": "number"}], "minItems": 2, "maxItems": 2},
                },
            },
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 8},
        "N": {"type": "integer", "minimum": 1},
        "interaction": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["soft_coulomb", "yukawa", "contact", "none"]},
                "strength": {"type": "number"},
                "softening": {"type": "number", "exclusiveMinimum": 0},
                "screening": {"type": "number", "minimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "lam": {"type": "number"},
        "lam_imag": {"type": "number"},
        "lam_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "potential": _FIELD,
        "potential_imag": _FIELD,
        "density": {
            "type": "object",
            "properties": {"file": {"type": "string"}, "from_potential": _FIELD, "lam": {"type": "number"}},
            "additionalProperties": False,
        },
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "pair_density": {"type": "boolean"},
        "response": {"type": "boolean"},
        "n_states": {"type": "integer", "minimum": 2},
        "ensemble_size": {"type": "integer", "minimum": 1},
        "amplitudes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "eps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "direction": _FIELD,
        "direction_imag": _FIELD,
        "dlam": {"type": "number"},
        "scheme": {"enum": ["forward", "central"]},
        "roundtrip": {"type": "boolean"},
        "check_fd": {"type": "boolean"},
    },
    "required": ["n", "N"],
    "additionalProperties": False,
}

DEFAULTS = {
    "interaction": {"kind": "none"},
    "lam": 0.0,
    "tol": 1e-9,
    "seed": 0,
}

_EXPR_NAMES = {
    "x": None,
    "pi": np.pi,
    "e": np.e,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "where": np.where,
    "minimum": np.minimum,
    "maximum": np.maximum,
}
_EXPR_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Compare,
    ast.operator,
    ast.unaryop,
    ast.cmpop,
)


def evaluate_expression(expr: str, x: np.ndarray) -> np.ndarray:
    """Evaluate an arithmetic expression in ``x`` with a fixed set of numpy functions."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ConfigurationError(f"expression {expr!r}: {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in _EXPR_NAMES:
            raise ConfigurationError(f"expression {expr!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not isinstance(node.func, ast.Name):
            raise ConfigurationError(f"expression {expr!r}: only plain function calls allowed")
    names = dict(_EXPR_NAMES, x=x)
    out = eval(compile(tree, "<expr>", "eval"), {"__builtins__": {}}, names)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


class Run:
    """Resolved configuration plus output bookkeeping for one command."""

    def __init__(self, command: str, config: dict, out: Path, base_dir: Path):
        self.command = command
        self.config = config
        self.out = out
        self.base_dir = base_dir
        self.files: list[str] = []
        self.grid = Grid(config["n"])
        self.N = config["N"]
        self.w = _interaction(config["interaction"])
        self.tol = float(config["tol"])
        self.seed = int(config["seed"])

    # fields ------------------------------------------------------------
    def _path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.base_dir / p

    def field(self, spec, key: str) -> PotentialField:
        grid = self.grid
        if isinstance(spec, (int, float)):
            return PotentialField(np.full(grid.n, float(spec)))
        if isinstance(spec, str):
            spec = {"expr": spec}
        atoms = tuple((int(i), float(a)) for i, a in spec.get("atoms", []))
        given = [k for k in ("expr", "values", "file") if k in spec]
        if len(given) > 1:
            raise ConfigurationError(f"{key}: give only one of expr, values, file")
        if "expr" in spec:
            smooth = evaluate_expression(spec["expr"], grid.nodes)
        elif "values" in spec:
            smooth = np.asarray(spec["values"], dtype=float)
        elif "file" in spec:
            path = self._path(spec["file"])
            if not path.exists():
                raise ConfigurationError(f"{key}: file {spec['file']} not found")
            if path.suffix == ".json":
                v = kio.load_potential(path)
                smooth, atoms = v.smooth, v.atoms + atoms
            else:
                _, smooth = kio.read_field_csv(path)
        else:
            smooth = np.zeros(grid.n)
        if smooth.shape != (grid.n,):
            raise ConfigurationError(f"{key}: expected {grid.n} samples, got {smooth.size}")
        return PotentialField(smooth, atoms)

    def potential(self) -> PotentialField:
        if "potential" not in self.config:
            raise ConfigurationError(f"{self.command} needs a 'potential' entry")
        return self.field(self.config["potential"], "potential")

    def density(self) -> tuple[np.ndarray, PotentialField | None]:
        """Target density and, when generated from a potential, that potential."""
        spec = self.config.get("density")
        if spec is None:
            raise ConfigurationError(f"{self.command} needs a 'density' entry")
        if "file" in spec:
            path = self._path(spec["file"])
            if not path.exists():
                raise ConfigurationError(f"density file {spec['file']} not found")
            _, rho = kio.read_field_csv(path)
            if rho.size != self.grid.n:
                raise ConfigurationError(f"density file has {rho.size} samples, grid has {self.grid.n}")
            return rho, None
        if "from_potential" in spec:
            v = self.field(spec["from_potential"], "density.from_potential")
            lam = float(spec.get("lam", self.config["lam"]))
            _, rho = forward(assemble_hamiltonian(self.grid, self.N, v, self.w, lam))
            return rho, v
        raise ConfigurationError("density needs 'file' or 'from_potential'")

    # outputs -----------------------------------------------------------
    def _record(self, name):
        if name not in self.files:
            self.files.append(name)
        return self.out / name

    def csv_field(self, name, values):
        kio.write_field_csv(self._record(name), self.grid, values)

    def csv_rows(self, name, header, rows):
        kio.write_rows_csv(self._record(name), header, rows)

    def json(self, name, obj):
        kio.write_json(self._record(name), obj)

    def binary(self, name, writer, *args):
        writer(self._record(name), *args)

    def stamp(self) -> dict:
        return {"command": self.command, "seed": self.seed, "tol": self.tol}

    def finish(self, status: str = "ok"):
        kio.write_json(self.out / "config.json", {"command": self.command, **self.config})
        kio.write_json(
            self.out / "version.json",
            {"package": "ksdft1d", "version": __version__, "numpy": np.__version__, "status": status},
        )
        entries = []
        for name in sorted(set(self.files) | {"config.json", "version.json"}):
            data = (self.out / name).read_bytes()
            entries.append({"file": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
        kio.write_json(self.out / "manifest.json", {"files": entries})


def _interaction(spec: dict) -> InteractionSpec:
    kind = spec["kind"]
    if kind == "none":
        return InteractionSpec.none()
    if kind == "soft_coulomb":
        return InteractionSpec.soft_coulomb(spec.get("strength", 1.0), spec.get("softening", 0.1))
    if kind == "yukawa":
        return InteractionSpec.yukawa(spec.get("strength", 1.0), spec.get("screening", 1.0))
    return InteractionSpec.contact(spec.get("strength", 1.0))


def resolve_config(raw: dict, args) -> dict:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {path}: {exc.message}") from exc
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg["tol"] = args.tol
    w = cfg["interaction"]
    if w["kind"] == "soft_coulomb":
        w.setdefault("strength", 1.0)
        w.setdefault("softening", 0.1)
    elif w["kind"] == "yukawa":
        w.setdefault("strength", 1.0)
        w.setdefault("screening", 1.0)
    elif w["kind"] == "contact":
        w.setdefault("strength", 1.0)
    return cfg


# commands ---------------------------------------------------------------


def cmd_forward(run: Run) -> dict:
    cfg = run.config
    v = run.potential()
    H = assemble_hamiltonian(run.grid, run.N, v, run.w, cfg["lam"])
    sol, rho = forward(H)
    run.csv_field("density.csv", rho)
    summary = {**run.stamp(), **sol.to_summary()}
    run.json("spectral.json", summary)
    run.binary("state.bin", kio.save_state, run.grid.n, run.N, sol.psi0)
    if cfg.get("pair_density") and run.N >= 2:
        kio.write_pair_csv(run._record("pair_density.csv"), run.grid, pair_density(sol.basis, sol.psi0))
    if cfg.get("response"):
        R = assemble_lro(sol)
        run.binary("response.bin", kio.save_matrix, R.M)
        run.json("response.json", {**run.stamp(), **R.report()})
    return summary


def cmd_invert(run: Run) -> dict:
    cfg = run.config
    rho, v_true = run.density()
    v0 = run.field(cfg["potential"], "potential") if "potential" in cfg else None
    res = invert_density(run.grid, run.N, rho, run.w, cfg["lam"], v0=v0, tol=run.tol)
    run.csv_field("potential.csv", res.v.load())
    run.binary("potential.json", kio.save_potential, res.v)
    run.csv_rows("residual_history.csv", ["iteration", "residual"], enumerate(res.residual_history))
    out = {**run.stamp(), **res.to_dict()}
    if v_true is not None:
        out["quotient_error"] = quotient_norm(res.v - v_true, run.grid)
    run.json("inversion.json", out)
    return out


def cmd_functionals(run: Run) -> dict:
    cfg = run.config
    rho, _ = run.density()
    lam = cfg["lam"]
    ks = levy_lieb(run.grid, rho, run.w, 0.0, tol=min(run.tol, 1e-10))
    out = {**run.stamp(), "lam": lam, "T_KS": ks.F}
    if run.w.kind != "none":
        E_H = hartree(run.grid, rho, run.w)
        E_x = exchange_energy(run.grid, rho, run.w, check=cfg.get("check_fd", True), ks=ks)
        vx = exchange_potential(run.grid, rho, run.w, ks=ks)
        out.update(E_H=E_H, E_x=E_x)
        run.csv_field("exchange_potential.csv", vx.smooth)
        run.csv_field("hartree_potential.csv", hartree_potential(run.grid, rho, run.w).smooth)
        if lam != 0.0:
            ll = levy_lieb(run.grid, rho, run.w, lam, v0=ks.v, tol=min(run.tol, 1e-10))
            E_xc = (ll.F - ks.F) / lam - E_H
            out.update(F_LL=ll.F, E_xc=E_xc, E_c=E_xc - E_x)
            run.csv_field("potential.csv", ll.v.smooth)
    run.csv_field("ks_potential.csv", ks.v.smooth)
    run.json("functionals.json", out)
    return out


def cmd_ac(run: Run) -> dict:
    cfg = run.config
    if "lam_grid" not in cfg:
        raise ConfigurationError("ac needs 'lam_grid'")
    rho, _ = run.density()
    sweep = ac_sweep(run.grid, rho, run.w, cfg["lam_grid"], tol=min(run.tol, 1e-10))
    run.csv_rows("ac.csv", ["lam", "F_LL", "E_xc", "E_H", "gap"], sweep.rows())
    out = {**run.stamp(), **sweep.diagnostics()}
    run.json("ac_diagnostics.json", out)
    return out


def cmd_gl2(run: Run) -> dict:
    cfg = run.config
    rho, _ = run.density()
    res = gl2_energy(run.grid, rho, run.w, n_states=cfg.get("n_states"), tol=min(run.tol, 1e-10))
    run.csv_rows("gl2_terms.csv", ["j", "term", "partial_sum"], zip(range(1, res.terms.size + 1), res.terms, res.partial_sums))
    out = {**run.stamp(), **res.to_dict()}
    run.json("gl2.json", out)
    return out


def cmd_lipschitz(run: Run) -> dict:
    cfg = run.config
    rho, _ = run.density()
    rep = lipschitz_probe(
        run.grid,
        run.N,
        rho,
        run.w,
        cfg["lam"],
        ensemble_size=cfg.get("ensemble_size", 20),
        amplitudes=cfg.get("amplitudes", [1e-2, 3e-3, 1e-3]),
        seed=run.seed,
        tol=min(run.tol, 1e-10),
    )
    rows = [(a, s, r) for a in rep.amplitudes for s, r in enumerate(rep.ratios[a])]
    run.csv_rows("lipschitz_ratios.csv", ["amplitude", "sample", "ratio"], rows)
    out = {**run.stamp(), **rep.to_dict()}
    run.json("lipschitz.json", out)
    return out


def cmd_complex(run: Run) -> dict:
    cfg = run.config
    grid = run.grid
    v_re = run.potential()
    v_im = run.field(cfg["potential_imag"], "potential_imag") if "potential_imag" in cfg else None
    v = ComplexPotential.from_parts(v_re, v_im)
    lam = complex(cfg["lam"], cfg.get("lam_imag", 0.0))
    sol = complex_ground(grid, run.N, v, run.w, lam)
    rho = complex_density(sol)
    P = sol.projector()
    kio.write_complex_csv(run._record("complex_density.csv"), grid, rho)
    prop = eigenvalue_property_residual(sol)
    out = {
        **run.stamp(),
        "E": sol.E,
        "F": sol.F(),
        "real_gap": sol.realgap,
        "density_mass": complex(grid.h * rho.sum()),
        "idempotency": float(np.max(np.abs(P @ P - P))),
        "trace": complex(np.trace(P)),
        "eigenvalue_residual": {"bilinear": prop["bilinear"], "sesquilinear": prop["sesquilinear"]},
    }
    d_re = run.field(cfg["direction"], "direction") if "direction" in cfg else PotentialField.zeros(grid)
    d_im = run.field(cfg["direction_imag"], "direction_imag") if "direction_imag" in cfg else None
    direction = ComplexPotential.from_parts(d_re, d_im)
    dlam = float(cfg.get("dlam", 0.0))
    if np.any(direction.smooth) or direction.atoms or dlam:
        eps = cfg.get("eps", [1e-3, 5e-4, 2.5e-4])
        out["holomorphy"] = {
            q: holomorphy_check(
                grid, run.N, v, run.w, lam, direction, dlam, eps, quantity=q, scheme=cfg.get("scheme", "forward")
            ).to_dict()
            for q in ("density", "F", "conj_density")
        }
    if cfg.get("roundtrip", False):
        inv = complex_invert(grid, run.N, rho, run.w, lam, tol=min(run.tol, 1e-10))
        out["roundtrip"] = {
            "iterations": inv.iterations,
            "residual": inv.residual,
            "quotient_error": complex_quotient_norm(inv.v - v, grid),
        }
        kio.write_complex_csv(run._record("recovered_potential.csv"), grid, inv.v.smooth)
    run.json("complex.json", out)
    return out


COMMANDS = {
    "forward": cmd_forward,
    "invert": cmd_invert,
    "functionals": cmd_functionals,
    "ac": cmd_ac,
    "gl2": cmd_gl2,
    "lipschitz": cmd_lipschitz,
    "complex": cmd_complex,
}


def _reason(exc: BaseException) -> str:
    if isinstance(exc, DegenerateGroundStateError):
        return "degenerate"
    if isinstance(exc, NonConvergenceError):
        return "nonconvergence"
    if isinstance(exc, IllConditionedError):
        return "ill-conditioned"
    if isinstance(exc, SelectionAmbiguityError):
        return "selection-ambiguous"
    if isinstance(exc, ConsistencyError):
        return "consistency"
    if isinstance(exc, ConfigurationError):
        return "configuration"
    return "solver"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, ConsistencyError):
        return EXIT_CONSISTENCY
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    return EXIT_CONSISTENCY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksdft1d", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--tol", type=float, default=None, help="override the configured tolerance")
    common.add_argument("--threads", type=int, default=None, help="limit BLAS/LAPACK threads")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__.replace("cmd_", "") + " pipeline")
    return parser


def _execute(args) -> int:
    out: Path = args.out
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigurationError("--seed must be non-negative")
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError("--threads must be positive")
        if not args.config.exists():
            raise ConfigurationError(f"config file {args.config} not found")
        raw = kio.read_json(args.config)
        cfg = resolve_config(raw, args)
        run = Run(args.command, cfg, out, args.config.resolve().parent)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](run)
        run.finish()
        return EXIT_OK
    except (KSDFTError, np.linalg.LinAlgError) as exc:
        if isinstance(exc, np.linalg.LinAlgError):
            exc = SolverError(str(exc))
        code = exit_code_for(exc)
        doc = {
            "error": type(exc).__name__,
            "reason": _reason(exc),
            "message": str(exc),
            "exit_code": code,
            "command": args.command,
        }
        try:
            kio.write_json(out / "error.json", doc)
        except OSError:
            pass
        print(json.dumps(doc, sort_keys=True), file=sys.stderr)
        return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.threads is not None and args.threads >= 1:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads):
            return _execute(args)
    return _execute(args)


if __name__ == "__main__":
    sys.exit(main())
