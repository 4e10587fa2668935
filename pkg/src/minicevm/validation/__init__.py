"""Translation validation: state relations, lockstep checking, differential runs and fuzzing."""
from .differential import (DEFAULT_SENDERS, Divergence, OutOfGasCheck, Session, TxSpec,
                           ValidationReport, differential_run, load_script, out_of_gas_run)
from .lockstep import LockstepReport, lockstep
from .relations import (concrete, entries_to_w256, gas_invariant, rel_code, rel_events, rel_mem,
                        rel_stk, rel_store, storage_to_words, store_mismatch)

__all__ = ["DEFAULT_SENDERS", "Divergence", "OutOfGasCheck", "Session", "TxSpec",
           "ValidationReport", "differential_run", "load_script", "out_of_gas_run",
           "LockstepReport", "lockstep", "concrete", "entries_to_w256", "gas_invariant",
           "rel_code", "rel_events", "rel_mem", "rel_stk", "rel_store", "storage_to_words",
           "store_mismatch"]
