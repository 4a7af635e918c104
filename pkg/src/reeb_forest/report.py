"""Approximation report shared by the graph and metric-space pipelines."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

SIG_DIGITS = 12


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


def jsonable(obj: Any) -> Any:
    """Recursively round floats to 12 significant digits and turn tuples into lists."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return jsonable(obj.item())
    try:
        return round_sig(float(obj))
    except (TypeError, ValueError):
        return str(obj)


@dataclass
class ApproximationReport:
    """Everything measured and bounded for one tree approximation run.

    ``distortion`` is taken over the original points only; ``distortion_full``
    over every vertex of the regularized graph. ``hyp`` is evaluated on the
    regularized vertex set, a finite stand-in for the hyperbolicity of the
    whole metric graph (``hyp_is_proxy``).
    """

    base: str
    n_points: int
    n_vertices: int
    distortion: float
    distortion_full: float
    worst_pair: tuple[str, str] | None
    hyp: float
    hyp_p: float
    betti: int
    MF: int
    MF_mode: str
    mf_cap: int
    bound_main: float
    bound_graph: float
    bound_graph_p: float
    phi_of_G: float
    upsilon: float
    collapsed_pairs: int
    ok_main: bool
    ok_graph: bool
    ok_chain: bool
    ok: bool
    hyp_is_proxy: bool = True
    phi_upper: float | None = None
    mf_fallback: bool = False
    trace: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["log_base"] = 2
        return jsonable(out)
