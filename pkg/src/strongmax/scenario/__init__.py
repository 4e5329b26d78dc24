from .config import CheckersSection, EventsSection, OutputSection, ScenarioConfig, SimulationSection
from .builtins import BuiltinScenario, get_builtin, list_builtins
from .runner import SCHEMA_VERSION, Report, SimulationSummary, run_scenario, scenario_fingerprint
