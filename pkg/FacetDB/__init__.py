__version__ = "1.0.0"

from . import core,evaluator,policy,form,oracle,cli
