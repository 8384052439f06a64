"""Experiment configuration (strict TOML schema) and the runners that turn a
config into CSV/JSON artifacts.

All randomness flows from the single config seed; artifact bytes are a pure
function of the config, so repeated runs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import __version__
from .errors import ConfigError
from .gauge import Gauge, GaugeKind, gauge_from_range
from .mollifier import MollifierSpec, build_mollifier, delta_at, heaviside_at
from .dynamics import (
    SystemName,
    SystemSpec,
    Trajectory,
    integrate,
    pu_analytic,
)
from .optctrl import ControlProblem, hamiltonian_du, solve_wps
from .rk import integrate_adaptive

EXPERIMENTS = ("embed_profiles", "pendulum", "damped", "pu",
               "variational_checks", "optctrl_lqr", "ring_suite")

# key -> (type, required). Nested dicts describe TOML tables.
_SCHEMA = {
    "experiment": (str, True),
    "seed": (int, False),
    "output_dir": (str, False),
    "system": (str, False),
    "t_span": (list, False),
    "tol": (float, False),
    "eps_index": (int, False),
    "gauge": {
        "kind": (str, False),
        "eps_min": (float, False),
        "eps_max": (float, False),
        "points": (int, False),
    },
    "mollifier": {
        "moment_order": (int, False),
        "scale_exponent": (float, False),
    },
    "params": None,   # free-form numeric table, validated by SystemSpec
    "ic": None,       # q0..q3
    "control": {
        "nodes": (int, False),
        "step": (float, False),
        "grad_tol": (float, False),
        "max_iter": (int, False),
    },
}

_DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "tol": 1e-10,
    "eps_index": -1,
    "gauge": {"kind": "power", "eps_min": 2.0 ** -15, "eps_max": 2.0 ** -4,
              "points": 12},
    "mollifier": {"moment_order": 4, "scale_exponent": 0.5},
    "control": {"nodes": 2001, "step": 0.5, "grad_tol": 1e-8, "max_iter": 200},
}


def _key_line(text: str, key: str) -> str:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(key):
            return f"line {i}"
    return "unknown line"


def _check_keys(data: dict, schema: dict, text: str, prefix: str = ""):
    for key, val in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"unknown config key '{path}' ({_key_line(text, key)})")
        rule = schema[key]
        if rule is None:
            if not isinstance(val, dict):
                raise ConfigError(f"'{path}' must be a table "
                                  f"({_key_line(text, key)})")
            continue
        if isinstance(rule, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"'{path}' must be a table "
                                  f"({_key_line(text, key)})")
            _check_keys(val, rule, text, prefix=path + ".")
            continue
        typ, _required = rule
        if typ is float and isinstance(val, int):
            continue
        if not isinstance(val, typ):
            raise ConfigError(
                f"'{path}' must be {typ.__name__}, got {type(val).__name__} "
                f"({_key_line(text, key)})")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    text: str

    @property
    def experiment(self) -> str:
        return self.raw["experiment"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def output_dir(self) -> str:
        return self.raw["output_dir"]

    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def gauge(self) -> Gauge:
        g = self.raw["gauge"]
        if g["points"] < 2:
            raise ConfigError(
                f"gauge.points must be >= 2 "
                f"({_key_line(self.text, 'points')})")
        try:
            kind = GaugeKind(g["kind"])
        except ValueError:
            raise ConfigError(f"gauge.kind must be one of "
                              f"{[k.value for k in GaugeKind]}") from None
        return gauge_from_range(g["eps_max"], g["eps_min"], g["points"], kind)

    def mollifier(self) -> MollifierSpec:
        m = self.raw["mollifier"]
        try:
            return build_mollifier(m["moment_order"],
                                   scale_exponent=m["scale_exponent"])
        except Exception as exc:
            raise ConfigError(f"mollifier section invalid: {exc}") from exc

    def system(self) -> SystemSpec:
        name = self.raw.get("system")
        if name is None:
            raise ConfigError("dynamics experiments need a 'system' key")
        try:
            sysname = SystemName(name)
        except ValueError:
            raise ConfigError(f"unknown system '{name}'") from None
        params = {k: float(v) for k, v in self.raw.get("params", {}).items()}
        mol = self.mollifier()
        gauge = self.gauge()
        try:
            return SystemSpec(sysname, params, mol, gauge)
        except Exception as exc:
            raise ConfigError(f"params section invalid: {exc}") from exc

    def ic(self, order: int) -> tuple:
        ic = self.raw.get("ic", {})
        keys = [f"q{i}" for i in range(order)]
        missing = [k for k in keys if k not in ic]
        if missing:
            raise ConfigError(f"ic section missing {missing}")
        return tuple(float(ic[k]) for k in keys)

    def t_span(self) -> tuple[float, float]:
        ts = self.raw.get("t_span")
        if (not isinstance(ts, list) or len(ts) != 2
                or not all(isinstance(x, (int, float)) for x in ts)
                or not ts[1] > ts[0]):
            raise ConfigError("t_span must be an increasing [t1, t2] pair")
        return float(ts[0]), float(ts[1])

    def eps_at(self, gauge: Gauge) -> float:
        idx = self.raw["eps_index"]
        try:
            return gauge.eps_grid[idx]
        except IndexError:
            raise ConfigError(f"eps_index {idx} out of range for "
                              f"{len(gauge)}-point gauge") from None


def _merge_defaults(data: dict) -> dict:
    out = dict(data)
    for key, val in _DEFAULTS.items():
        if isinstance(val, dict):
            merged = dict(val)
            merged.update(out.get(key, {}))
            out[key] = merged
        else:
            out.setdefault(key, val)
    return out


def load_config(path_or_text, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a TOML experiment config.

    overrides maps dotted keys (output_dir, seed, gauge.points) to values
    from the command line.
    """
    if isinstance(path_or_text, (str, Path)) and "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text()
    else:
        text = str(path_or_text)
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _check_keys(data, _SCHEMA, text)
    data = _merge_defaults(data)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        parts = key.split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    if data.get("experiment") not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got "
            f"{data.get('experiment')!r} ({_key_line(text, 'experiment')})")
    return ExperimentConfig(raw=data, text=text)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _write_manifest(out: Path, cfg: ExperimentConfig, files: list[str]) -> None:
    checksums = {}
    for name in sorted(files):
        checksums[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
    manifest = {
        "experiment": cfg.experiment,
        "config_sha256": cfg.sha256(),
        "library_version": __version__,
        "files": checksums,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", newline="\n")


def _trajectory_rows(traj: Trajectory, with_energy: bool):
    order = traj.spec.order
    for i, t in enumerate(traj.times):
        row = [t, traj.eps, *traj.states[i][:order], traj.rhs_values[i]]
        if with_energy:
            row.append(traj.monitors["energy"][i])
        else:
            row.append("")
        yield row


def run_embed_profiles(cfg: ExperimentConfig, out: Path) -> list[str]:
    gauge = cfg.gauge()
    mol = cfg.mollifier()
    delta_rows, heavi_rows = [], []
    for eps in gauge.eps_grid:
        b = mol.b(gauge, eps)
        xs = np.linspace(-1.5 / b, 1.5 / b, 501)
        for x in xs:
            delta_rows.append((float(x), eps, delta_at(mol, gauge, eps, float(x))))
            heavi_rows.append((float(x), eps, heaviside_at(mol, gauge, eps, float(x))))
    write_csv(out / "delta.csv", "x,eps,value", delta_rows)
    write_csv(out / "heaviside.csv", "x,eps,value", heavi_rows)
    return ["delta.csv", "heaviside.csv"]


def run_dynamics(cfg: ExperimentConfig, out: Path) -> list[str]:
    spec = cfg.system()
    gauge = spec.gauge
    eps = cfg.eps_at(gauge)
    ic = cfg.ic(spec.order)
    t_span = cfg.t_span()
    tol = cfg.raw["tol"]
    traj = integrate(spec, eps, ic, t_span, tol=tol)
    files = []
    if spec.name is SystemName.PAIS_UHLENBECK:
        header = "t,eps,q0,q1,q2,q3,rhs,energy"
    else:
        header = "t,eps,q0,q1,rhs,energy"
    with_energy = spec.name is not SystemName.DAMPED_TWO_MEDIA
    write_csv(out / "trajectory.csv", header, _trajectory_rows(traj, with_energy))
    files.append("trajectory.csv")

    if spec.name is SystemName.DAMPED_TWO_MEDIA:
        # constant-damping reference with beta = beta1 everywhere
        p = spec.params

        def ref_rhs(t, y):
            return np.array([y[1], -2.0 * p["beta1"] * y[1]
                             - p["g"] * math.sin(y[0]) / p["Lambda"]])

        sol = integrate_adaptive(ref_rhs, t_span[0], t_span[1], ic, tol=tol)
        rows = []
        for t in traj.times:
            y = sol(min(t, sol.tf))
            rows.append((float(t), eps, float(y[0]), float(y[1]),
                         float(ref_rhs(t, y)[1]), ""))
        write_csv(out / "reference.csv", "t,eps,q0,q1,rhs,energy", rows)
        files.append("reference.csv")

    if spec.name is SystemName.PAIS_UHLENBECK:
        rows = [(float(t), eps, float(e))
                for t, e in zip(traj.times, traj.monitors["energy"])]
        write_csv(out / "energy.csv", "t,eps,energy", rows)
        files.append("energy.csv")
        p = spec.params
        b = spec.b(eps)
        pre = pu_analytic(p["w1hat"], p["w2hat"], ic, t0=t_span[0])
        t_side2 = p["ts"] + 4.0 / b
        post_state = traj.state(t_side2)
        post = pu_analytic(p["w1"], p["w2"], post_state, t0=t_side2)
        fit = {
            "pre_switch": {"w1": pre.w1, "w2": pre.w2, "A1": pre.A1,
                           "phi1": pre.phi1, "A2": pre.A2, "phi2": pre.phi2},
            "post_switch": {"w1": post.w1, "w2": post.w2, "A1": post.A1,
                            "phi1": post.phi1, "A2": post.A2, "phi2": post.phi2},
        }
        (out / "analytic_fit.json").write_text(
            json.dumps(fit, indent=2, sort_keys=True) + "\n", newline="\n")
        files.append("analytic_fit.json")
    return files


def run_variational_checks(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .acceptance import lagrangian_for, sample_times_away_from_layers
    from .variational import Symmetry, dbr_residual, el_residual, noether_constant

    spec = cfg.system()
    eps = cfg.eps_at(spec.gauge)
    ic = cfg.ic(spec.order)
    t_span = cfg.t_span()
    traj = integrate(spec, eps, ic, t_span, tol=cfg.raw["tol"])
    lag = lagrangian_for(spec, eps)
    ts = sample_times_away_from_layers(traj, n=60)
    rows = []
    sym = Symmetry.time_translation()
    for t in ts:
        rows.append((float(t), eps,
                     el_residual(lag, traj, eps, t),
                     dbr_residual(lag, traj, eps, t),
                     noether_constant(lag, traj, sym, eps, t)))
    write_csv(out / "residuals.csv", "t,eps,el_residual,dbr_residual,noether_C",
              rows)
    return ["residuals.csv"]


def lqr_problem() -> ControlProblem:
    """Scalar benchmark: cost (q^2+u^2)/2, dynamics q' = u, q(0) = 1 on [0,1];
    the stationary control is sinh(t-1)/cosh(1)."""
    return ControlProblem(
        L=lambda t, q, u: 0.5 * (q * q + u * u),
        dL_dq=lambda t, q, u: q,
        dL_du=lambda t, q, u: u,
        phi=lambda t, q, u: u,
        dphi_dq=lambda t, q, u: 0.0,
        dphi_du=lambda t, q, u: 1.0,
        q1=1.0, t_span=(0.0, 1.0))


def run_optctrl_lqr(cfg: ExperimentConfig, out: Path) -> list[str]:
    c = cfg.raw["control"]
    P = lqr_problem()
    sweep = solve_wps(P, step=c["step"], max_iter=c["max_iter"],
                      grad_tol=c["grad_tol"], nodes=c["nodes"])
    rows = []
    for i, t in enumerate(sweep.u.ts):
        q = float(sweep.q(t)[0])
        p = float(sweep.p_values[i])
        u = float(sweep.u.values[i])
        rows.append((float(t), q, p, u, hamiltonian_du(P, t, q, u, p)))
    write_csv(out / "sweep.csv", "t,q,p,u,dHdu", rows)
    summary = {"iterations": sweep.iterations, "grad_norm": sweep.grad_norm,
               "cost": sweep.cost}
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", newline="\n")
    return ["sweep.csv", "summary.json"]


def run_ring_suite(cfg: ExperimentConfig, out: Path) -> list[str]:
    from .gauge import GenNumber, classify, is_far_from, is_strictly_positive

    gauge = cfg.gauge()
    rng = np.random.default_rng(cfg.seed)
    fams = {
        "rho": lambda e: e,
        "rho_squared": lambda e: e * e,
        "rho_cubed": lambda e: e ** 3,
        "inverse_rho": lambda e: 1.0 / e,
        "constant_plus_rho": lambda e: 3.0 + e,
        "oscillating_infinite": lambda e: math.sin(1.0 / e) / e,
        "log_scale": lambda e: -1.0 / math.log(e),
    }
    rows = []
    for name, fn in sorted(fams.items()):
        x = GenNumber.from_function(gauge, fn)
        c = classify(x)
        pos, wit = is_strictly_positive(x.abs())
        far = is_far_from(x, GenNumber.constant(gauge, 0.0))
        rows.append((name, c.tag.value, c.slope, c.confidence,
                     int(pos), -1 if wit is None else wit, int(far)))
    write_csv(out / "classify.csv",
              "name,tag,slope,confidence,strictly_positive,witness,far_from_zero",
              rows)
    # randomized ring-axiom residuals, all exactly zero componentwise
    worst = 0.0
    for _ in range(32):
        a, b, c3 = (GenNumber(rng.uniform(-2, 2, len(gauge)), gauge)
                    for _ in range(3))
        assoc = np.max(np.abs((a.values + b.values) + c3.values
                              - (a.values + (b.values + c3.values))))
        distr = np.max(np.abs(a.values * (b.values + c3.values)
                              - (a.values * b.values + a.values * c3.values)))
        worst = max(worst, float(assoc), float(distr))
    (out / "ring_report.json").write_text(
        json.dumps({"max_axiom_residual": worst, "families": len(fams)},
                   indent=2, sort_keys=True) + "\n", newline="\n")
    return ["classify.csv", "ring_report.json"]


_RUNNERS = {
    "embed_profiles": run_embed_profiles,
    "pendulum": run_dynamics,
    "damped": run_dynamics,
    "pu": run_dynamics,
    "variational_checks": run_variational_checks,
    "optctrl_lqr": run_optctrl_lqr,
    "ring_suite": run_ring_suite,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> Path:
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = _RUNNERS[cfg.experiment](cfg, out)
    _write_manifest(out, cfg, files)
    return out
