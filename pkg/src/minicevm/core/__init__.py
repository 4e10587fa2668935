from .values import *  # noqa: F401,F403
from .types import *  # noqa: F401,F403
from .machine import MachineEnv  # noqa: F401
from .memory import (Memory, StorageLayout, eid_to_hashkey, lvalue_hashkey,  # noqa: F401
                     mem_read, mem_write, path_type)
