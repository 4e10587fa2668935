"""Blockchain context visible to a running contract."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .values import ADDRESS_MASK, MASK


@dataclass
class MachineEnv:
    self_address: int
    caller: int
    callvalue: int = 0
    block_number: int = 0
    balances: dict = field(default_factory=dict)
    transfer_hook: Optional[Callable[[int, int], bool]] = None

    def copy(self) -> "MachineEnv":
        return MachineEnv(self.self_address, self.caller, self.callvalue,
                          self.block_number, dict(self.balances), self.transfer_hook)

    def balance_of(self, addr: int) -> int:
        return self.balances.get(addr & ADDRESS_MASK, 0)

    def transfer(self, to: int, amount: int) -> bool:
        """Move ``amount`` wei from this contract to ``to``; all or nothing."""
        if self.transfer_hook is not None:
            return self.transfer_hook(to, amount)
        me = self.self_address & ADDRESS_MASK
        to &= ADDRESS_MASK
        have = self.balances.get(me, 0)
        if amount > have:
            return False
        if amount and to != me:
            self.balances[me] = have - amount
            self.balances[to] = (self.balances.get(to, 0) + amount) & MASK
        return True
