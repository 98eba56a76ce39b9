"""Mixed local/nonlocal Schrödinger-Maxwell solver on a periodic grid."""

from .energy import *  # noqa: F401,F403
from .io import FieldFormatError, read_field, write_field  # noqa: F401
from .mpa import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .poisson import *  # noqa: F401,F403
from .potential import *  # noqa: F401,F403
from .scaling import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403

__version__ = "0.1.0"
