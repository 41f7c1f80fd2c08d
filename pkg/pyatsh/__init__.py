__version__ = "0.1.0"
__version_vector__ = (0, 1, 0)

from . import config

logger = config.get_logger(__name__)

# Flatten namespace by importing contents of all modules of pyatsh
from .phi import *
from .methods import *
from .order_conditions import *
from .integrator import *
from .stability import *
from .problems import *
from .bench import *
from .utils import *
