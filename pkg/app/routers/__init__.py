from .analysis import router as analysis_router
from .design import router as design_router
from .attacks import router as attacks_router
from .simulation import router as simulation_router

__all__ = ["analysis_router", "design_router", "attacks_router", "simulation_router"]
