"""End-to-end scenarios: traveling ramp, porous medium and McKean-Vlasov."""

from .mckean_vlasov import KineticReport, KineticState, mckean_vlasov_scenario, velocity_heat_control
from .porous_medium import BarenblattParams, PorousMediumReport, porous_medium_scenario
from .traveling_wave import TravelingWaveReport, traveling_wave_scenario

__all__ = ["BarenblattParams", "KineticReport", "KineticState", "PorousMediumReport",
           "TravelingWaveReport", "mckean_vlasov_scenario", "porous_medium_scenario",
           "traveling_wave_scenario", "velocity_heat_control"]
