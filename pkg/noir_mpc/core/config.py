"""Configuration management for the NOIR controller."""

import yaml
from pathlib import Path
from typing import Dict, Any, List, Union, Optional, Literal
from dataclasses import dataclass, field, asdict

from ..utils.exceptions import ConfigurationError


@dataclass
class LoggingConfig:
    """Configuration for logging system."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file: Optional[str] = None
    verbose: bool = False  # One coloured console line per closed-loop step


@dataclass
class SolverConfig:
    """Configuration for the quadratic programming solver."""
    method: Literal["active_set", "splitting"] = "active_set"
    primal_tol: float = 1e-7
    stationarity_tol: float = 1e-7
    complementarity_tol: float = 1e-7
    max_iter: int = 5000
    # Operator-splitting fallback
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    splitting_max_iter: int = 20000
    splitting_tol: float = 1e-9
    divergence_threshold: float = 1e12


@dataclass
class ControllerConfig:
    """Configuration for the receding-horizon controller."""
    beta: float = 1.0


@dataclass
class DynamicsConfig:
    """Default outflow probabilities and split validation tolerance."""
    p_on: float = 0.8
    p_off: float = 0.05
    p_outlet: Optional[float] = None  # None means p_on
    split_tol: float = 1e-9


@dataclass
class MonitorConfig:
    """Configuration for the runtime safety and liveness monitor."""
    eps_fraction: float = 0.05  # eps = eps_fraction * u0 when a scenario gives none
    atom_tol: float = 1e-6
    hold_window: Optional[int] = None  # None means one NOIR cycle


@dataclass
class OutputConfig:
    """Configuration for result files."""
    out_dir: str = "output"
    significant_digits: int = 9
    snapshot_steps: List[int] = field(default_factory=lambda: [15, 30, 50])


@dataclass
class NoirConfig:
    """Main configuration class for simulation runs."""
    solver: SolverConfig = field(default_factory=SolverConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    _SECTIONS = {
        "solver": SolverConfig,
        "controller": ControllerConfig,
        "dynamics": DynamicsConfig,
        "monitor": MonitorConfig,
        "output": OutputConfig,
        "logging": LoggingConfig,
    }

    @classmethod
    def from_source(cls, source: Union[Dict[str, Any], str, Path, None]) -> 'NoirConfig':
        """Create a config object from dictionary, yaml file path, or YAML string."""
        if source is None:
            return cls()

        if isinstance(source, dict):
            config_dict = {}
            for name, value in source.items():
                section = cls._SECTIONS.get(name)
                if section is None:
                    raise ConfigurationError(f"Unknown configuration section: {name}")
                if value is None:
                    continue
                if not isinstance(value, dict):
                    raise ConfigurationError(f"Section '{name}' must be a mapping")
                try:
                    config_dict[name] = section(**value)
                except TypeError as e:
                    raise ConfigurationError(f"Invalid option in section '{name}': {e}")
            config = cls(**config_dict)
            config.validate()
            return config

        if isinstance(source, (str, Path)):
            path = Path(source)
            if path.exists() and path.is_file():
                with open(path, 'r', encoding='utf-8') as f:
                    config_dict = yaml.safe_load(f) or {}
                return cls.from_source(config_dict)

            # Assume it's a YAML string
            try:
                config_dict = yaml.safe_load(str(source))
            except yaml.YAMLError:
                raise ConfigurationError(f"Invalid YAML source: {source}")
            if not isinstance(config_dict, dict):
                raise ConfigurationError(f"Configuration not found or not a mapping: {source}")
            return cls.from_source(config_dict)

        raise ConfigurationError(f"Unsupported config source type: {type(source)}")

    def validate(self) -> None:
        """Check value ranges that the dataclasses cannot express."""
        if self.solver.method not in ("active_set", "splitting"):
            raise ConfigurationError(f"Unknown solver method: {self.solver.method}")
        probabilities = [self.dynamics.p_on, self.dynamics.p_off]
        if self.dynamics.p_outlet is not None:
            probabilities.append(self.dynamics.p_outlet)
        if not all(0.0 < p <= 1.0 for p in probabilities):
            raise ConfigurationError("p_on, p_off and p_outlet must lie in (0, 1]")
        if self.controller.beta < 0:
            raise ConfigurationError("beta must be non-negative")
        if self.monitor.eps_fraction <= 0:
            raise ConfigurationError("eps_fraction must be positive")
        if self.monitor.hold_window is not None and self.monitor.hold_window < 1:
            raise ConfigurationError("hold_window must be at least 1")
        if self.output.significant_digits < 1:
            raise ConfigurationError("significant_digits must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        """Convert the config to a dictionary."""
        return {name: asdict(getattr(self, name)) for name in self._SECTIONS}
