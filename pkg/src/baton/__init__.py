"""Device-free Wi-Fi tracking from duty-cycled links.

Missing PLCR features are reconstructed row by row while the person's trace
is estimated from the partially completed matrix.
"""
__version__ = "0.1.0"

from baton.errors import BatonError  # noqa: E402
from baton.geometry import KinematicState, LinkGeometry  # noqa: E402
from baton.matrices import FeatureMatrix  # noqa: E402
from baton.stap import StapConfig, stap_run  # noqa: E402
from baton.track import TrackerConfig  # noqa: E402
from baton.trajectory import Trajectory  # noqa: E402

__all__ = ["BatonError", "FeatureMatrix", "KinematicState", "LinkGeometry", "StapConfig", "TrackerConfig",
           "Trajectory", "stap_run", "__version__"]
