"""snakeforge: design checks and an operational simulator for a screw-propelled
amphibious snake robot (hydrostatics, pneumatics, gaits, vertical dynamics,
bus latency, and a live teleoperation service)."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    BladderSpec,
    ManifestError,
    RobotAssembly,
    SegmentSpec,
    ShellSpec,
    default_assembly,
    load_assembly,
    load_assembly_file,
    power_budget_check,
)
