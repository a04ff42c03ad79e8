"""Flat key-value run configuration for the command-line entry points.

The format is INI-style with one level of sections and no nesting.  Operator
definitions live in ``[operator:NAME]`` sections (same keys as the zoo file
format); the ``[operators]`` section selects which of them a run uses.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from .verify import DEFAULT_TOLERANCES, STANDARD_IDENTITIES
from .zoo import parse_operator_spec

__all__ = ["ConfigError", "RunConfig", "DEFAULT_CONFIG_TEXT", "load_config"]


class ConfigError(Exception):
    """Unusable run configuration (bad file, unknown keys, bad values)."""


DEFAULT_CONFIG_TEXT = """\
[operators]
use = scalar_unit laplacian8

[operator:scalar_unit]
kind = scalar
value = 1

[operator:laplacian8]
kind = laplacian
dim = 8
mesh_h = 0.5

[grid]
t_min = 1e-4
t_max = 1e3
n_nodes = 2000

[checks]
identities = E2.4 E2.5 E2.6 E2.7 E2.8 E2.9 trace desimon Q_A Q_Astar R3.3plus R3.3minus R3.4 R3.5
n_params = 1 2 3
alphas = 0.5
iterations = 120

[tolerances]
identity = 1e-3
certificate = 1e-6
trace = 1e-3
stability = 0.10
norm_stability = 0.05
quadratic_selfadjoint = 1e-3
desimon_selfadjoint_upper = 1.01

[convergence]
identities = E2.4 E2.5
n_list = 500 1000 2000 4000

[bench]
n_nodes = 4000
dim = 16
repeats = 3

[output]
directory = maxreg-out
"""

_VALID_IDENTITIES = set(STANDARD_IDENTITIES)


@dataclasses.dataclass
class RunConfig:
    operators: dict
    grid_spec: tuple  # (t_min, t_max, n_nodes)
    identities: tuple
    n_params: tuple
    alphas: tuple
    iterations: int
    tolerances: dict
    out_dir: Path
    seed: int
    jobs: int
    conv_identities: tuple
    conv_n_list: tuple
    bench_n: int
    bench_dim: int
    bench_repeats: int


def _tokens(text: str) -> list[str]:
    return text.replace(",", " ").split()


def load_config(
    path=None,
    *,
    out_dir=None,
    seed: int | None = None,
    jobs: int | None = None,
    tolerance: float | None = None,
) -> RunConfig:
    """Parse a run config, or the built-in default when no path is given.

    Keyword overrides mirror the command-line flags: `tolerance` overrides
    the identity-check tolerance, the rest replace the corresponding config
    values wholesale.
    """
    parser = configparser.ConfigParser()
    try:
        if path is None:
            parser.read_string(DEFAULT_CONFIG_TEXT)
        else:
            with open(path) as fh:
                parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc

    try:
        defined = {}
        for section in parser.sections():
            if section.startswith("operator:"):
                name = section.split(":", 1)[1].strip()
                defined[name] = parse_operator_spec(name, dict(parser[section]))
        use_raw = parser.get("operators", "use", fallback=None)
        if use_raw is None:
            operators = defined
        else:
            operators = {}
            for name in _tokens(use_raw):
                if name not in defined:
                    raise ConfigError(f"[operators] use names undefined operator {name!r}")
                operators[name] = defined[name]
        if not operators:
            raise ConfigError("configuration defines no operators")

        grid_spec = (
            parser.getfloat("grid", "t_min", fallback=1e-4),
            parser.getfloat("grid", "t_max", fallback=1e3),
            parser.getint("grid", "n_nodes", fallback=2000),
        )
        if not (0 < grid_spec[0] < grid_spec[1]) or grid_spec[2] < 2:
            raise ConfigError(f"bad grid specification {grid_spec}")

        identities = tuple(_tokens(parser.get("checks", "identities", fallback=" ".join(STANDARD_IDENTITIES))))
        unknown = [i for i in identities if i not in _VALID_IDENTITIES]
        if unknown:
            raise ConfigError(f"unknown identities in config: {unknown}")
        n_params = tuple(int(x) for x in _tokens(parser.get("checks", "n_params", fallback="1 2 3")))
        if any(n < 1 for n in n_params):
            raise ConfigError("n_params must be positive integers")
        alphas = tuple(float(x) for x in _tokens(parser.get("checks", "alphas", fallback="0.5")))
        iterations = parser.getint("checks", "iterations", fallback=120)

        tolerances = dict(DEFAULT_TOLERANCES)
        if parser.has_section("tolerances"):
            for key, val in parser["tolerances"].items():
                if key not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"unknown tolerance key {key!r}")
                tolerances[key] = float(val)
        if tolerance is not None:
            tolerances["identity"] = float(tolerance)

        conv_identities = tuple(_tokens(parser.get("convergence", "identities", fallback="E2.4 E2.5")))
        conv_n_list = tuple(int(x) for x in _tokens(parser.get("convergence", "n_list", fallback="500 1000 2000 4000")))

        cfg = RunConfig(
            operators=operators,
            grid_spec=grid_spec,
            identities=identities,
            n_params=n_params,
            alphas=alphas,
            iterations=iterations,
            tolerances=tolerances,
            out_dir=Path(out_dir if out_dir is not None else parser.get("output", "directory", fallback="maxreg-out")),
            seed=int(seed if seed is not None else parser.getint("output", "seed", fallback=0)),
            jobs=int(jobs if jobs is not None else 1),
            conv_identities=conv_identities,
            conv_n_list=conv_n_list,
            bench_n=parser.getint("bench", "n_nodes", fallback=4000),
            bench_dim=parser.getint("bench", "dim", fallback=16),
            bench_repeats=parser.getint("bench", "repeats", fallback=3),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError, configparser.Error) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    return cfg
