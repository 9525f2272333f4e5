from __future__ import annotations

import math
from dataclasses import dataclass

from ..core import InvalidArgument


@dataclass(frozen=True)
class DetectionParams:
    density_max: float = 4.0          # persons / m^2, naive capacity
    min_neighbors: int = 6            # trapped: strictly more than this many ...
    trapped_radius: float = 1.0       # ... within this radius
    r_connect: float = 2.0
    theta_dir: float = math.radians(30.0)
    eps_speed: float = 0.2
    convergence_radius: float = 2.0
    convergence_horizon: float | None = None  # None: twice the grid diagonal
    flow_window: float = 1.0
    vacancy_density: float = 0.5
    tol_speed: float = 0.3
    tol_angle: float = math.radians(45.0)
    follow_radius: float = 2.0

    def __post_init__(self) -> None:
        if self.min_neighbors < 1:
            raise InvalidArgument("min_neighbors must be >= 1")
        for name in ("density_max", "trapped_radius", "r_connect", "theta_dir", "eps_speed",
                     "convergence_radius", "flow_window", "vacancy_density",
                     "tol_speed", "tol_angle", "follow_radius"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.convergence_horizon is not None and not self.convergence_horizon > 0:
            raise InvalidArgument("convergence_horizon must be positive")

    def horizon(self, cell_size: float) -> float:
        if self.convergence_horizon is not None:
            return self.convergence_horizon
        return 2.0 * math.sqrt(2.0) * cell_size
