from .loop_service import loop_service
from .design_service import design_service
from .attack_service import attack_service
from .simulation_service import simulation_service
from .report_service import report_service

__all__ = ["loop_service", "design_service", "attack_service", "simulation_service", "report_service"]
