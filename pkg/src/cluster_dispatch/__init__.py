"""Coordinated battery and EV charging control for building clusters.

The cluster is planned as one representative building (summed demand,
generation and storage), its battery and EV rates are searched with a
genetic algorithm, and the representative battery rate is split over the
member batteries hour by hour. Settlement matches surpluses and deficits
inside the cluster before anything reaches the grid.
"""
from importlib import resources

from .aggregate import BuildingModel, RepresentativeBuilding, aggregate
from .allocation import AllocationInfeasible, HourAllocationProblem, allocate_day, allocate_hour
from .config import ClusterConfig, ConfigError, load_config
from .ga import GAParams
from .optimizer import HorizonPlan, OptimizationError, daily_cost, optimize_batteries, optimize_horizon
from .oracle import OracleInstance, brute_force_optimal
from .profiles import PricingScheme, ProfileError, TimeSeries, load_profile, synthetic_week
from .pv import PVSpec, pv_power
from .scenarios import ScenarioConfig, run_day_ahead, run_scenario, solve_instance
from .settlement import compare_scenarios, self_consumption, settle_hour
from .storage import BatterySpec, BatteryViolation, EVSession, InfeasibleSession, apply_battery_schedule, check_ev_schedule, immediate_charge_schedule

__version__ = "0.1.0"


def bundled_config_path() -> str:
    """Path of the bundled three-building synthetic week."""
    return str(resources.files(__package__).joinpath("data", "cluster.json"))
