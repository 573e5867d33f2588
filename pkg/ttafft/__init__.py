"""Top-level package for ttafft."""

__version__ = "0.1.0"

from .types import *  # noqa
from .qformat import *  # noqa
from .addrgen import *  # noqa
from .twiddle import *  # noqa
from .golden import *  # noqa
from .program import *  # noqa
from .machine import *  # noqa
from .energy import *  # noqa
