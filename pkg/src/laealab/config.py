"""Experiment configuration: flat-key sectioned text files.

The format is INI-like (section headers, key = value), diffable and free of
schema machinery.  Unknown sections or keys are rejected.  Any key can be
overridden from the environment as LAEALAB_<SECTION>__<KEY> (case
insensitive), e.g. LAEALAB_SOLVER__ALPHA=0.1.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .dynamics import SolverConfig
from .elliptic import BcRegime
from .geometry import DomainSpec, Geometry, build_geometry
from .samples import (eigenfield, make_phi_cosx, make_phi_cosx_siny,
                      make_phi_sinusoidal, phi_flat, random_vector,
                      taylor_green_like)

ENV_PREFIX = "LAEALAB_"

_SCHEMA = {
    "lab": {"suite", "output_dir", "seed", "grid_ladder", "parallel"},
    "domain": {"kind", "lx", "ly", "nx", "ny", "phi", "wall_roles"},
    "solver": {"alpha", "linear_tol", "method"},
    "run": {"dt", "t_end", "integrator", "cfl_factor"},
    "diagnostics": {"every_n_steps"},
    "initial": {"preset"},
    "material": {"interp", "newton_tol"},
    "poisson": {"observables", "flow_check_max_dim"},
}

_DEFAULTS = {
    "lab": {"suite": "identities", "output_dir": "lab_out", "seed": "1234",
            "grid_ladder": "16,32,64", "parallel": "false"},
    "domain": {"kind": "torus", "lx": "1.0", "ly": "1.0", "nx": "32",
               "ny": "32", "phi": "sinusoidal:0.15,1,1", "wall_roles": ""},
    "solver": {"alpha": "0.3", "linear_tol": "1e-12", "method": "direct"},
    "run": {"dt": "0.005", "t_end": "0.1", "integrator": "rk4",
            "cfl_factor": "0.5"},
    "diagnostics": {"every_n_steps": "1"},
    "initial": {"preset": "taylor_green_like"},
    "material": {"interp": "bicubic", "newton_tol": "1e-12"},
    "poisson": {"observables": "linear:101,linear:102,quadratic:smooth",
                "flow_check_max_dim": "600"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_string(fh.read())
        return cls._build(parser)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        return cls._build(parser)

    @classmethod
    def defaults(cls) -> "ExperimentConfig":
        return cls._build(configparser.ConfigParser())

    @classmethod
    def _build(cls, parser) -> "ExperimentConfig":
        sections = {name: dict(values) for name, values in _DEFAULTS.items()}
        for sec in parser.sections():
            key = sec.lower()
            if key not in _SCHEMA:
                raise ConfigError(f"unknown config section [{sec}]")
            for k, v in parser.items(sec):
                if k.lower() not in _SCHEMA[key]:
                    raise ConfigError(f"unknown key {k!r} in section [{sec}]")
                sections[key][k.lower()] = v
        cfg = cls(sections)
        cfg._apply_env()
        cfg.validate()
        return cfg

    def _apply_env(self):
        for name, value in os.environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            if "__" not in rest:
                continue
            sec, key = rest.split("__", 1)
            if sec not in _SCHEMA or key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown env override {name}")
            self.sections[sec][key] = value

    # -- typed access ---------------------------------------------------------

    def get(self, sec: str, key: str) -> str:
        return self.sections[sec][key]

    def getfloat(self, sec: str, key: str) -> float:
        return float(self.get(sec, key))

    def getint(self, sec: str, key: str) -> int:
        return int(self.get(sec, key))

    def validate(self):
        if self.get("domain", "kind") not in ("torus", "channel"):
            raise ConfigError("domain.kind must be torus or channel")
        if self.get("solver", "method") not in ("direct", "iterative"):
            raise ConfigError("solver.method must be direct or iterative")
        if self.get("run", "integrator") not in ("rk4", "midpoint"):
            raise ConfigError("run.integrator must be rk4 or midpoint")
        if self.get("material", "interp") != "bicubic":
            raise ConfigError("material.interp supports only bicubic")
        self.phi_function()   # validates the preset string
        self.grid_ladder()
        if self.getfloat("run", "dt") == 0:
            raise ConfigError("run.dt must be nonzero")

    # -- derived objects ------------------------------------------------------

    @property
    def seed(self) -> int:
        return self.getint("lab", "seed")

    def grid_ladder(self):
        raw = self.get("lab", "grid_ladder")
        try:
            ladder = tuple(int(x) for x in raw.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"bad grid ladder {raw!r}")
        if not ladder:
            raise ConfigError("empty grid ladder")
        return ladder

    def domain_spec(self) -> DomainSpec:
        kind = self.get("domain", "kind")
        roles = None
        if kind == "channel":
            raw = self.get("domain", "wall_roles") or "y0:dirichlet,yL:neumann"
            roles = {}
            for item in raw.split(","):
                w, r = item.split(":")
                roles[w.strip()] = r.strip()
        return DomainSpec(kind, self.getfloat("domain", "lx"),
                          self.getfloat("domain", "ly"), roles)

    def phi_function(self):
        spec = self.get("domain", "phi")
        Lx = self.getfloat("domain", "lx")
        Ly = self.getfloat("domain", "ly")
        if spec == "flat":
            return phi_flat
        if spec.startswith("sinusoidal:"):
            amp, kx, ky = spec.split(":", 1)[1].split(",")
            return make_phi_sinusoidal(float(amp), int(kx), int(ky), Lx, Ly)
        if spec.startswith("cosx:"):
            amp, k = spec.split(":", 1)[1].split(",")
            return make_phi_cosx(float(amp), int(k), Lx)
        if spec.startswith("cosx_siny:"):
            amp, k = spec.split(":", 1)[1].split(",")
            return make_phi_cosx_siny(float(amp), int(k), Lx, Ly)
        raise ConfigError(f"unknown phi preset {spec!r}")

    def build_geometry(self, nx: int | None = None, ny: int | None = None) -> Geometry:
        spec = self.domain_spec()
        nx = nx if nx is not None else self.getint("domain", "nx")
        ny = ny if ny is not None else self.getint("domain", "ny")
        return build_geometry(spec, nx, ny, self.phi_function())

    def bc_regime(self) -> BcRegime:
        return BcRegime.from_domain(self.domain_spec())

    def solver_config(self) -> SolverConfig:
        return SolverConfig(alpha=self.getfloat("solver", "alpha"),
                            dt=self.getfloat("run", "dt"),
                            t_end=self.getfloat("run", "t_end"),
                            integrator=self.get("run", "integrator"),
                            bc=self.bc_regime(),
                            cfl_factor=self.getfloat("run", "cfl_factor"))

    def initial_field(self, geo: Geometry):
        spec = self.get("initial", "preset")
        if spec == "eigenfield":
            return eigenfield(geo.grid, amp=0.8)
        if spec == "taylor_green_like":
            return taylor_green_like(geo.grid, amp=0.5)
        if spec.startswith("random_bandlimited:"):
            seed = int(spec.split(":", 1)[1])
            return random_vector(geo.grid, seed=seed, kmax=2, amp=0.5)
        raise ConfigError(f"unknown initial preset {spec!r}")

    def echo(self) -> dict:
        return {sec: dict(sorted(vals.items()))
                for sec, vals in sorted(self.sections.items())}
