"""Batch runner: ``bundlegame <command> [options]``.

Exit codes: 0 when every asserted agreement holds, 2 on a disagreement (or
when the asserted precondition fails), 1 on any error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

from . import __version__
from .bundle import closure_family, dump_bundle
from .fixtures import FIXTURES, get_fixture
from .game import CostFunctional, maximin, theorem1_check
from .pursuit import TargetSet, corollary_checks, is_exact, is_robust, theorem2_check, value_CM
from .relaxed import DYNAMICS, Selection, get_dynamics, load_nu, proposition1_check
from .reports import Stopwatch, output_dir, report_diff, write_report
from .suite import metric_suite

COMMANDS = ("metric-suite", "maximin", "extend", "pursuit", "theorem1", "theorem2", "relaxed", "fixture")
CHECKS = ("maximin", "extend", "pursuit", "theorem1", "theorem2", "corollaries", "proposition1")
COSTS = ("min-gauge", "terminal-gauge", "weighted")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    fixture: str | None = None
    check: str | None = None
    system: str = "linear"
    system_params: dict | None = None
    nu_files: list | None = None
    horizon: int | None = None
    steps_per_unit: int | None = None
    control_steps_per_unit: int = 1
    p_min: float | None = None
    net_eps: float = 1e-3
    cluster_tol: float = 1e-6
    membership_tol: float = 1e-2
    tol: float = 2e-2
    margin: float = 0.0
    eps_list: list | None = None
    horizons: list | None = None
    cost: str = "min-gauge"
    cost_horizon: float = 1.0
    selection: str = "sample"
    sample_count: int = 32
    seed: int | None = None
    trials: int = 200
    out: str | None = None
    dump: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.command == "fixture":
            if self.fixture is None or self.check is None:
                raise ConfigError("the fixture command needs a fixture name and a check")
            if self.check not in CHECKS:
                raise ConfigError(f"unknown check {self.check!r}; choose from {', '.join(CHECKS)}")
        if self.fixture is not None and self.fixture not in FIXTURES:
            raise ConfigError(f"unknown fixture {self.fixture!r}; choose from {', '.join(sorted(FIXTURES))}")
        if self.system not in DYNAMICS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {', '.join(sorted(DYNAMICS))}")
        for name in ("net_eps", "cluster_tol", "membership_tol", "tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.margin < 0:
            raise ConfigError("margin must be nonnegative")
        if self.eps_list is not None and (not self.eps_list or min(self.eps_list) <= 0):
            raise ConfigError("eps_list must hold positive values")
        if self.horizons is not None:
            if not self.horizons or any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
                raise ConfigError("horizons must be strictly ascending")
            if self.horizons[0] < 1:
                raise ConfigError("horizons must be positive")
        if self.cost not in COSTS:
            raise ConfigError(f"unknown cost {self.cost!r}; choose from {', '.join(COSTS)}")
        if self.selection not in ("all", "sample", "auto"):
            raise ConfigError(f"unknown selection {self.selection!r}")
        if self.uses_sampling and self.seed is None:
            raise ConfigError("a seed is required when a sampling strategy is used")

    @property
    def resolved_check(self) -> str:
        return self.check if self.command == "fixture" else self.command

    @property
    def uses_sampling(self) -> bool:
        if self.command == "metric-suite":
            return True
        relaxed = self.command == "relaxed" or self.fixture == "bilinear_system"
        return relaxed and self.selection != "all"


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def load_config(path) -> dict:
    """Read a YAML mapping; errors name the file, line and column."""
    text = Path(path).read_text()
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: {where}: {exc.problem}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: line 1: expected a mapping of settings")
    for key_node, _ in node.value:
        key = key_node.value.replace("-", "_")
        if key not in _FIELDS:
            mark = key_node.start_mark
            raise ConfigError(f"{path}: line {mark.line + 1}, column {mark.column + 1}: unknown key {key_node.value!r}")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list:
    out = []
    for part in text.replace(",", " ").split():
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bundlegame", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file mirroring the experiment settings")
    common.add_argument("--horizon", type=int)
    common.add_argument("--steps-per-unit", type=int)
    common.add_argument("--net-eps", type=float)
    common.add_argument("--cluster-tol", type=float)
    common.add_argument("--membership-tol", type=float)
    common.add_argument("--tol", type=float, help="agreement tolerance for theorem1")
    common.add_argument("--margin", type=float)
    common.add_argument("--eps-list", type=_floats, help="e.g. '0.2,0.1,0.05'")
    common.add_argument("--horizons", type=_ints, help="e.g. '1..8' or '1,2,4'")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="report directory (overrides the environment and config)")
    common.add_argument("--dump", action="store_true", default=None, help="also write trajectory CSVs")
    common.add_argument("--cost", choices=COSTS)
    common.add_argument("--cost-horizon", type=float)
    common.add_argument("--selection", choices=("all", "sample", "auto"))
    common.add_argument("--sample-count", type=int)
    common.add_argument("--p-min", type=float)

    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "fixture":
            p.add_argument("fixture", choices=sorted(FIXTURES))
            p.add_argument("check", choices=CHECKS)
        elif name == "relaxed":
            p.add_argument("--system", choices=sorted(DYNAMICS))
            p.add_argument("--nu", dest="nu_files", action="append", help="nu file (repeatable)")
            p.add_argument("--control-steps-per-unit", type=int)
        elif name == "metric-suite":
            p.add_argument("--trials", type=int)
        else:
            p.add_argument("--fixture", choices=sorted(FIXTURES))

    d = sub.add_parser("diff", help="compare two reports")
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--tol", type=float, default=0.0)
    return parser


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    settings = load_config(args.config) if args.config else {}
    settings["command"] = args.command
    for key, value in vars(args).items():
        if key in _FIELDS and value is not None and key not in ("command", "out"):
            settings[key] = value
    try:
        config = ExperimentConfig(**settings)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    config.validate()
    return config


# --------------------------------------------------------------------------
# pipelines


def _fixture(config: ExperimentConfig, default: str = "example2"):
    name = config.fixture or default
    kwargs = {}
    if config.horizon is not None:
        kwargs["horizon"] = config.horizon
    if config.steps_per_unit is not None:
        kwargs["steps_per_unit"] = config.steps_per_unit
    if name == "example2" and config.p_min is not None:
        kwargs["p_min"] = config.p_min
    if name == "bilinear_system":
        kwargs["strategy"] = _selection(config)
        kwargs["control_steps_per_unit"] = config.control_steps_per_unit
    return get_fixture(name, **kwargs)


def _selection(config: ExperimentConfig) -> Selection:
    return Selection(config.selection, config.sample_count, config.seed or 0)


def _cost(config: ExperimentConfig) -> CostFunctional:
    if config.cost == "min-gauge":
        return CostFunctional.min_gauge(horizon=config.cost_horizon, cap=1.0)
    if config.cost == "terminal-gauge":
        return CostFunctional.terminal_gauge(time=config.cost_horizon)
    return CostFunctional.weighted(horizon=int(config.cost_horizon))


def _grid_args(fx, config):
    eps_list = tuple(config.eps_list) if config.eps_list else fx.eps_list
    horizons = tuple(config.horizons) if config.horizons else fx.horizons
    return eps_list, horizons


def _cert(c) -> dict:
    return {"holds": c.holds, "witness": c.witness, "horizon": c.horizon,
            "bundle_label": c.detail.get("bundle_label")}


def run_metric_suite(config):
    res = metric_suite(config.trials, config.seed, config.horizon or 4, config.steps_per_unit or 32)
    return res.to_dict(), res.passed, {}


def run_maximin(config):
    fx = _fixture(config)
    family = fx.family
    sampled = family.sample(config.net_eps)
    value = maximin(sampled, _cost(config))
    return {"fixture": fx.name, "cost": _cost(config).name, "net_eps": config.net_eps,
            **value.to_dict()}, True, {"witness": sampled[value.bundle_index]}


def run_extend(config):
    fx = _fixture(config)
    report = closure_family(fx.family, config.net_eps, config.cluster_tol)
    dumps = {f"appended_{i}": b for i, b in enumerate(report.appended)}
    return {"fixture": fx.name, **report.to_dict()}, True, dumps


def run_pursuit(config):
    fx = _fixture(config)
    eps_list, horizons = _grid_args(fx, config)
    sampled = closure_family(fx.family, config.net_eps, config.cluster_tol).sampled
    cm = value_CM(sampled, fx.target, horizons)
    exact = is_exact(fx.extras.get("exact_probe", sampled), fx.target, horizons, config.margin)
    robust = is_robust(sampled, fx.target, eps_list, horizons)
    passed = (exact.holds == fx.expected["exact_original"]
              and robust.holds == fx.expected["robust_original"])
    result = {
        "fixture": fx.name,
        "values": {str(n): v for n, v in cm.values.items()},
        "classification": "infinite-up-to-horizon" if cm.infinite else "finite",
        "exact": _cert(exact),
        "robust": {**_cert(robust), "sweep": {repr(e): {str(n): v for n, v in vals.items()}
                                              for e, vals in robust.detail["sweep"].items()}},
        "expected": fx.expected,
        "matches_expected": passed,
    }
    return result, passed, {}


def run_theorem1(config):
    fx = _fixture(config)
    report = theorem1_check(fx.family, _cost(config), config.tol, config.net_eps, config.cluster_tol)
    dumps = {"extended_witness": report.closure.family[report.extended.bundle_index]}
    return {"fixture": fx.name, "cost": _cost(config).name, **report.to_dict()}, report.agree, dumps


def run_theorem2(config):
    fx = _fixture(config)
    eps_list, horizons = _grid_args(fx, config)
    report = theorem2_check(fx.family, fx.target, eps_list, horizons, config.net_eps,
                            config.cluster_tol, config.margin, fx.extras.get("exact_probe"))
    result = {"fixture": fx.name, "expected": fx.expected, "eps_list": list(eps_list), **report.to_dict()}
    dumps = {f"appended_{i}": b for i, b in enumerate(report.closure.appended)}
    return result, report.verdict == "AGREE", dumps


def run_corollaries(config):
    fx = _fixture(config)
    eps_list, horizons = _grid_args(fx, config)
    report = corollary_checks(fx.family, fx.target, eps_list, horizons, config.net_eps,
                              config.cluster_tol, config.membership_tol, margin=config.margin)
    passed = "DISAGREE" not in (report.corollary1, report.corollary2)
    return {"fixture": fx.name, **report.to_dict()}, passed, {}


def run_relaxed(config):
    if config.nu_files:
        nus = [load_nu(p) for p in config.nu_files]
        dyn = get_dynamics(config.system, **(config.system_params or {}))
        spu = config.steps_per_unit or 64
        target = TargetSet.point(0.0)
        eps_list = tuple(config.eps_list or (0.5, 0.25, 0.1))
        horizons = tuple(config.horizons or range(1, min(nu.grid.horizon for nu in nus) + 1))
        name = config.system
    else:
        fx = _fixture(config, "bilinear_system")
        if fx.name != "bilinear_system":
            raise ConfigError("the relaxed pipeline needs nu files or the bilinear_system fixture")
        dyn, nus, spu = fx.extras["dynamics"], fx.extras["nu_samples"], fx.extras["steps_per_unit"]
        target = fx.target
        eps_list, horizons = _grid_args(fx, config)
        name = fx.name
    report = proposition1_check(dyn, target, nus, eps_list, horizons, _selection(config), spu,
                                net_eps=config.net_eps, cluster_tol=config.cluster_tol,
                                membership_tol=config.membership_tol)
    result = {"system": name, "dynamics": dyn.name, "nu_samples": [nu.label for nu in nus],
              "selection": asdict(_selection(config)), **report.to_dict()}
    return result, report.verdict == "AGREE", {}


PIPELINES = {
    "metric-suite": run_metric_suite,
    "maximin": run_maximin,
    "extend": run_extend,
    "pursuit": run_pursuit,
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "corollaries": run_corollaries,
    "relaxed": run_relaxed,
    "proposition1": run_relaxed,
}


def run(config: ExperimentConfig, out: str | None = None) -> tuple[int, Path]:
    """Execute the pipeline, write the report, return ``(exit code, report path)``.

    ``out`` (the ``--out`` flag) beats the environment variable, which beats ``config.out``.
    """
    check = config.resolved_check
    if check == "proposition1" and config.fixture != "bilinear_system":
        raise ConfigError("proposition1 runs on the bilinear_system fixture")
    with Stopwatch() as sw:
        result, passed, dumps = PIPELINES[check](config)
    code = 0 if passed else 2
    report = {
        "command": config.command,
        "check": check,
        "version": __version__,
        "config": {k: v for k, v in asdict(config).items() if k not in ("out", "dump")},
        "result": result,
        "passed": passed,
        "exit_code": code,
    }
    directory = output_dir(out, config.out)
    path = write_report(report, directory, check if config.command == "fixture" else config.command,
                        config.seed, sw.elapsed)
    if config.dump:
        for name, bundle in dumps.items():
            dump_bundle(bundle, path.with_name(f"{path.stem}-{name}"))
    return code, path


def _provenance(exc: BaseException) -> str:
    for frame in reversed(traceback.extract_tb(exc.__traceback__)):
        parts = Path(frame.filename).parts
        if "bundlegame" in parts:
            return f"bundlegame.{Path(frame.filename).stem}:{frame.lineno}"
    return "bundlegame"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "diff":
        try:
            diff = report_diff(args.a, args.b, args.tol)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print("same" if diff else "different")
        for line in diff.differences:
            print(f"  {line}")
        return 0 if diff else 2
    try:
        config = make_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        code, path = run(config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error in {_provenance(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{'PASS' if code == 0 else 'FAIL'} {config.resolved_check} -> {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
