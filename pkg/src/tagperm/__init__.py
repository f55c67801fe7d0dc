"""Fine-grained access control for RFID tags.

Tags hold objects whose methods are guarded by permission tokens; readers
authenticate with symmetric keys diversified from a per-domain master key
and refresh the tag's ElGamal-encrypted identifier on every session.
"""

from .backoffice import BackOffice, SimClock
from .methods import OMEGA, Method
from .reader import AuthenticationFailed, CallFailed, ProtocolFailure, Reader
from .tag import Tag, manufacture_tag
from .world import World

__version__ = "0.1.0"

__all__ = [
    "OMEGA",
    "AuthenticationFailed",
    "BackOffice",
    "CallFailed",
    "Method",
    "ProtocolFailure",
    "Reader",
    "SimClock",
    "Tag",
    "World",
    "manufacture_tag",
]
