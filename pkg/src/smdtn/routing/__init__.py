from .core import AdmitResult, AlertMessage, Buffer, OversizeError, Router, admit, deliver_check, sweep_expired
from .epidemic import EpidemicRouter
from .maxprop import MaxPropRouter

ROUTERS = {"epidemic": EpidemicRouter, "maxprop": MaxPropRouter}

__all__ = [
    "AdmitResult",
    "AlertMessage",
    "Buffer",
    "EpidemicRouter",
    "MaxPropRouter",
    "OversizeError",
    "ROUTERS",
    "Router",
    "admit",
    "deliver_check",
    "sweep_expired",
]
