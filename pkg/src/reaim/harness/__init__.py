from .config import ConfigError, ScenarioConfig, load_config
from .experiment import RunResult, aggregate, run_replication, run_scenario, sweep
from .output import emit

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "RunResult", "aggregate",
           "run_replication", "run_scenario", "sweep", "emit"]
