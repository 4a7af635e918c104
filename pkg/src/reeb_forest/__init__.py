"""Tree approximations of filtered posets, metric graphs and finite metric spaces
via Reeb quotients, with hyperbolicity-based distortion bounds."""

from .graph import *  # noqa: F401,F403
from .graph import __all__ as _graph_all
from .metric import *  # noqa: F401,F403
from .metric import __all__ as _metric_all
from .poset import *  # noqa: F401,F403
from .poset import __all__ as _poset_all
from .reeb import *  # noqa: F401,F403
from .reeb import __all__ as _reeb_all
from .report import ApproximationReport

__version__ = "0.1.0"
__all__ = [*_poset_all, *_reeb_all, *_graph_all, *_metric_all, "ApproximationReport"]
