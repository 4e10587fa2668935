"""Frozen fee schedule, read once from the bundled JSON table."""
import json
from importlib import resources

FEES = json.loads(resources.files("minicevm.data").joinpath("fees_byzantium.json").read_text())

G_BASE = FEES["Gbase"]
G_VERYLOW = FEES["Gverylow"]
G_LOW = FEES["Glow"]
G_MID = FEES["Gmid"]
G_HIGH = FEES["Ghigh"]
G_JUMPDEST = FEES["Gjumpdest"]
G_SLOAD = FEES["Gsload"]
G_SSET = FEES["Gsset"]
G_SRESET = FEES["Gsreset"]
G_BALANCE = FEES["Gbalance"]
G_SHA3 = FEES["Gsha3"]
G_SHA3WORD = FEES["Gsha3word"]
G_COPY = FEES["Gcopy"]
G_MEMORY = FEES["Gmemory"]
G_QUADDIV = FEES["Gquaddivisor"]
G_LOG = FEES["Glog"]
G_LOGTOPIC = FEES["Glogtopic"]
G_LOGDATA = FEES["Glogdata"]
G_CALL = FEES["Gcall"]
G_CALLVALUE = FEES["Gcallvalue"]
G_CALLSTIPEND = FEES["Gcallstipend"]
G_TX = FEES["Gtransaction"]
G_TXCREATE = FEES["Gtxcreate"]
G_TXDATAZERO = FEES["Gtxdatazero"]
G_TXDATANONZERO = FEES["Gtxdatanonzero"]
G_CODEDEPOSIT = FEES["Gcodedeposit"]


def mem_cost(words: int) -> int:
    return G_MEMORY * words + words * words // G_QUADDIV


def words_for(nbytes: int) -> int:
    return (nbytes + 31) // 32


def expansion(cur_words: int, offset: int, size: int) -> tuple:
    """(extra gas, new word count) for touching memory [offset, offset+size)."""
    if size == 0:
        return 0, cur_words
    new = words_for(offset + size)
    if new <= cur_words:
        return 0, cur_words
    return mem_cost(new) - mem_cost(cur_words), new


def sstore_cost(current: int, new: int) -> int:
    return G_SSET if (current == 0 and new != 0) else G_SRESET


def intrinsic_gas(data: bytes, create: bool = False) -> int:
    zeros = data.count(0)
    g = G_TX + G_TXDATAZERO * zeros + G_TXDATANONZERO * (len(data) - zeros)
    if create:
        g += G_TXCREATE
    return g
