"""Control-flow graphs, liveness, and stack-slot allocation.

``build_cfg`` works backwards from the end of the body, so later statements
get smaller node ids, and the else branch of a conditional is built before
the then branch. Linearization visits successors in ascending id order,
which therefore places the else branch directly after its condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .. import gastable as G
from ..core import ast as A
from ..core.types import TINT
from ..core.values import VUNIT, as_word
from ..errors import InternalError, StackTooDeep
from .clike import done_cost, initial_gas
from .runtime import (Callstate, Finalstate, Genv, Initialstate, Returnstate, eval_clike,
                      sstore, store_cost_args)

MAX_SLOTS = 15


# --------------------------------------------------------------------- nodes

@dataclass(frozen=True)
class Nskip:
    succ: int


@dataclass(frozen=True)
class Nassign:
    addr: object
    rhs: object
    succ: int


@dataclass(frozen=True)
class Nset:
    temp: int
    e: object
    succ: int


@dataclass(frozen=True)
class Ncall:
    ret: object
    fn: str
    args: tuple
    succ: int


@dataclass(frozen=True)
class Ncond:
    cond: object
    ifso: int
    ifnot: int


@dataclass(frozen=True)
class Nreturn:
    e: object


@dataclass(frozen=True)
class Ntransfer:
    to: object
    amount: object
    succ: int


@dataclass(frozen=True)
class Nlog:
    topics: tuple
    data: tuple
    succ: int


@dataclass(frozen=True)
class Nrevert:
    pass


def successors(n) -> tuple:
    t = type(n)
    if t is Ncond:
        return (n.ifso, n.ifnot)
    if t in (Nreturn, Nrevert):
        return ()
    return (n.succ,)


@dataclass
class CgFunction:
    name: str
    kind: A.FunctionKind
    params: list
    temps: dict
    nodes: dict                   # id -> node
    entry: int
    ret_type: object = None
    abi_signature: str = ""
    selector: object = None

    def returns_value(self):
        return A.Function.returns_value(self)


@dataclass
class CgProgram:
    name: str
    functions: dict
    nmethods: int
    events: dict = field(default_factory=dict)

    def methods(self):
        return [f for f in self.functions.values() if f.kind == A.FunctionKind.METHOD]


# ------------------------------------------------------------------ building

class _Builder:
    def __init__(self):
        self.nodes = {}

    def add(self, n) -> int:
        i = len(self.nodes)
        self.nodes[i] = n
        return i

    def build(self, s, succ, brk):
        """Entry node id of ``s`` when control continues at ``succ``."""
        t = type(s)
        if t is A.Sskip:
            return succ
        if t is A.Ssequence:
            return self.build(s.s1, self.build(s.s2, succ, brk), brk)
        if t is A.Sset:
            return self.add(Nset(s.temp, s.e, succ))
        if t is A.Sassign:
            return self.add(Nassign(s.lhs.e, s.rhs, succ))
        if t is A.Scall:
            return self.add(Ncall(s.ret, s.fn, tuple(s.args), succ))
        if t is A.Sifthenelse:
            ifnot = self.build(s.s2, succ, brk)
            ifso = self.build(s.s1, succ, brk)
            return self.add(Ncond(s.cond, ifso, ifnot))
        if t is A.Sloop:
            head = self.add(None)
            body = self.build(s.body, head, succ)
            self.nodes[head] = Nskip(body)
            return head
        if t is A.Sbreak:
            if brk is None:
                raise InternalError("break outside a loop")
            return brk
        if t is A.Sreturn:
            return self.add(Nreturn(s.e))
        if t is A.Srevert:
            return self.add(Nrevert())
        if t is A.Stransfer:
            return self.add(Ntransfer(s.to, s.amount, succ))
        if t is A.Slog:
            return self.add(Nlog(tuple(s.topics), tuple(s.data), succ))
        raise InternalError(f"cannot build a node for {s!r}")


def reachable(nodes: dict, entry: int) -> list:
    seen, todo = set(), [entry]
    while todo:
        n = todo.pop()
        if n in seen:
            continue
        seen.add(n)
        todo.extend(successors(nodes[n]))
    return sorted(seen)


def build_cfg(f: A.Function) -> CgFunction:
    b = _Builder()
    # Falling off the end only happens for a body without a final return;
    # the typechecker always adds one, so this node is normally pruned.
    end = b.add(Nreturn(None))
    entry = b.build(f.body, end, None)
    keep = reachable(b.nodes, entry)
    nodes = {i: b.nodes[i] for i in keep}
    return CgFunction(f.name, f.kind, list(f.params), dict(f.temps), nodes, entry, f.ret_type,
                      f.abi_signature, f.selector)


def cgraph_program(clike: A.Program) -> CgProgram:
    fns = {n: build_cfg(f) for n, f in clike.functions.items()}
    return CgProgram(clike.name, fns, len(clike.methods()), dict(clike.events))


# ------------------------------------------------------------------ liveness

def expr_temps(e, out: set):
    t = type(e)
    if t is A.Etemp:
        out.add(e.id)
    elif t is A.Ebinop:
        expr_temps(e.e1, out)
        expr_temps(e.e2, out)
    elif t in (A.Eunop, A.Ederef, A.Ecall1, A.Eaddr):
        expr_temps(e.e, out)
    return out


def uses(n) -> set:
    t = type(n)
    out = set()
    if t is Nassign:
        expr_temps(n.addr, out)
        expr_temps(n.rhs, out)
    elif t is Nset:
        expr_temps(n.e, out)
    elif t is Ncall:
        for a in n.args:
            expr_temps(a, out)
    elif t is Ncond:
        expr_temps(n.cond, out)
    elif t is Nreturn and n.e is not None:
        expr_temps(n.e, out)
    elif t is Ntransfer:
        expr_temps(n.to, out)
        expr_temps(n.amount, out)
    elif t is Nlog:
        for e in n.topics + n.data:
            expr_temps(e, out)
    return out


def defs(n) -> set:
    t = type(n)
    if t is Nset:
        return {n.temp}
    if t is Ncall and n.ret is not None:
        return {n.ret}
    return set()


def liveness(g: CgFunction) -> dict:
    """Live-in sets per node, by backward iteration to the least fixpoint."""
    live_in = {i: set() for i in g.nodes}
    use = {i: uses(n) for i, n in g.nodes.items()}
    dfn = {i: defs(n) for i, n in g.nodes.items()}
    order = sorted(g.nodes)
    changed = True
    while changed:
        changed = False
        for i in order:
            out = set()
            for s in successors(g.nodes[i]):
                out |= live_in[s]
            new = use[i] | (out - dfn[i])
            if new != live_in[i]:
                live_in[i] = new
                changed = True
    return live_in


def live_out(g: CgFunction, live_in: dict) -> dict:
    out = {}
    for i, n in g.nodes.items():
        s = set()
        for j in successors(n):
            s |= live_in[j]
        out[i] = s
    return out


def interference(g: CgFunction, live_in: dict) -> dict:
    """Undirected interference graph over all temps of ``g``."""
    adj = {t: set() for t in g.temps}
    for p in g.params:
        adj.setdefault(p, set())

    def edge(a, b):
        if a != b:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)

    lout = live_out(g, live_in)
    for i, n in g.nodes.items():
        move_src = n.e.id if type(n) is Nset and type(n.e) is A.Etemp else None
        for d in defs(n):
            for t in lout[i]:
                if t != move_src:
                    edge(d, t)
    # Function entry defines every slot at once: parameters arrive on the
    # stack, the remaining temps are introduced as zeros.
    entry_live = live_in[g.entry]
    for d in adj:
        for t in entry_live:
            edge(d, t)
    ps = list(g.params)
    for a in ps:
        for b in ps:
            edge(a, b)
    return adj


def mcs_order(adj: dict, seed: list) -> list:
    """Maximum cardinality search; on chordal graphs this is a reverse
    perfect elimination order, which makes greedy coloring optimal."""
    weight = {v: 0 for v in adj}
    order, done = [], set()
    for v in seed:
        order.append(v)
        done.add(v)
        for u in adj[v]:
            weight[u] += 1
    rest = sorted(v for v in adj if v not in done)
    while len(order) < len(adj):
        v = max((u for u in rest if u not in done), key=lambda u: (weight[u], -u))
        order.append(v)
        done.add(v)
        for u in adj[v]:
            if u not in done:
                weight[u] += 1
    return order


def color(adj: dict, params: list, limit: int = MAX_SLOTS) -> dict:
    colors = {p: i for i, p in enumerate(params)}
    for v in mcs_order(adj, list(params)):
        if v in colors:
            continue
        taken = {colors[u] for u in adj[v] if u in colors}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    k = max(colors.values(), default=-1) + 1
    if k > limit:
        raise StackTooDeep(f"needs {k} stack slots, only {limit} are addressable")
    return colors


def _rename_expr(e, m):
    t = type(e)
    if t is A.Etemp:
        return A.Etemp(m[e.id], e.ty)
    if t is A.Ebinop:
        return A.Ebinop(e.op, _rename_expr(e.e1, m), _rename_expr(e.e2, m), e.ty)
    if t is A.Eunop:
        return A.Eunop(e.op, _rename_expr(e.e, m), e.ty)
    if t is A.Ederef:
        return A.Ederef(_rename_expr(e.e, m), e.ty)
    if t is A.Ecall1:
        return A.Ecall1(e.builtin, _rename_expr(e.e, m), e.ty)
    return e


def _rename_node(n, m):
    t = type(n)
    r = lambda e: _rename_expr(e, m)
    if t is Nassign:
        return Nassign(r(n.addr), r(n.rhs), n.succ)
    if t is Nset:
        return Nset(m[n.temp], r(n.e), n.succ)
    if t is Ncall:
        return Ncall(None if n.ret is None else m[n.ret], n.fn, tuple(map(r, n.args)), n.succ)
    if t is Ncond:
        return Ncond(r(n.cond), n.ifso, n.ifnot)
    if t is Nreturn:
        return Nreturn(None if n.e is None else r(n.e))
    if t is Ntransfer:
        return Ntransfer(r(n.to), r(n.amount), n.succ)
    if t is Nlog:
        return Nlog(tuple(map(r, n.topics)), tuple(map(r, n.data)), n.succ)
    return n


def allocate_temps(g: CgFunction, live_in: dict | None = None) -> CgFunction:
    """Rename temps to stack slots 0..k-1; parameters keep slots 0..n-1."""
    live_in = liveness(g) if live_in is None else live_in
    colors = color(interference(g, live_in), g.params)
    names = {}
    for t, c in sorted(colors.items()):
        names.setdefault(c, []).append(g.temps[t][0] if t in g.temps else f"t{t}")
    temps = {c: ("/".join(ns), TINT) for c, ns in sorted(names.items())}
    nodes = {i: _rename_node(n, colors) for i, n in g.nodes.items()}
    return replace(g, params=[colors[p] for p in g.params], temps=temps, nodes=nodes)


def allocate_program(p: CgProgram) -> CgProgram:
    return CgProgram(p.name, {n: allocate_temps(f) for n, f in p.functions.items()},
                     p.nmethods, dict(p.events))


# --------------------------------------------------------------- interpreter

@dataclass
class CgState:
    fn: CgFunction
    node: int
    temps: dict
    stack: list


def node_cost(genv: Genv, fn: CgFunction, n, temps) -> int:
    """Gas charged for executing node ``n`` (callee bodies excluded)."""
    t = type(n)
    ce = G.clike_expr
    if t is Nskip:
        return G.NODE + G.EDGE
    if t is Nset:
        return G.NODE + G.EDGE + ce(n.e) + G.SET
    if t is Ncond:
        return G.NODE + G.COND + ce(n.cond)
    if t is Nrevert:
        return G.NODE + G.REVERT
    if t is Nreturn:
        has_value = n.e is not None
        return G.NODE + (ce(n.e) if has_value else 0) + done_cost(genv, fn, len(fn.temps), has_value)
    if t is Nlog:
        return (G.NODE + G.EDGE + sum(ce(e) for e in n.topics + n.data)
                + G.log(len(n.topics), len(n.data)))
    raise InternalError(f"no static cost for {n!r}")


def step(genv: Genv, st):
    p = genv.program
    if type(st) is Initialstate:
        fn = p.functions[st.fn]
        genv.gas += initial_gas(p, fn, len(genv.args), len(fn.temps))
        return Callstate(st.fn, list(genv.args), [])
    if type(st) is Callstate:
        fn = p.functions[st.fn]
        return CgState(fn, fn.entry, dict(zip(fn.params, st.args)), st.stack)
    if type(st) is Returnstate:
        if not st.stack:
            return Finalstate(True, st.value)
        fn, succ, temps, ret = st.stack[-1]
        if ret is not None:
            temps[ret] = st.value
        return CgState(fn, succ, temps, st.stack[:-1])
    fn, temps = st.fn, st.temps
    n = fn.nodes[st.node]
    t = type(n)
    if t is Nskip:
        genv.gas += node_cost(genv, fn, n, temps)
        st.node = n.succ
        return st
    if t is Nset:
        genv.gas += node_cost(genv, fn, n, temps)
        temps[n.temp] = eval_clike(n.e, temps, genv)
        st.node = n.succ
        return st
    if t is Nassign:
        addr = eval_clike(n.addr, temps, genv)
        v = eval_clike(n.rhs, temps, genv)
        old, new = store_cost_args(genv.storage, addr, v)
        genv.gas += (G.NODE + G.EDGE + G.clike_expr(n.addr) + G.clike_expr(n.rhs)
                     + G.sstore(old, new))
        sstore(genv.storage, addr, v)
        st.node = n.succ
        return st
    if t is Ncond:
        genv.gas += node_cost(genv, fn, n, temps)
        st.node = n.ifso if as_word(eval_clike(n.cond, temps, genv)) else n.ifnot
        return st
    if t is Ncall:
        callee = p.functions[n.fn]
        args = [eval_clike(a, temps, genv) for a in n.args]
        genv.gas += (G.NODE + G.EDGE + sum(G.clike_expr(a) for a in n.args)
                     + G.call_entry(len(callee.temps), len(args)) + G.call_return(n.ret is not None))
        return Callstate(n.fn, args, st.stack + [(fn, n.succ, temps, n.ret)])
    if t is Nreturn:
        genv.gas += node_cost(genv, fn, n, temps)
        v = eval_clike(n.e, temps, genv) if n.e is not None else VUNIT
        return Returnstate(v, st.stack)
    if t is Nrevert:
        genv.gas += node_cost(genv, fn, n, temps)
        return Finalstate(False, reason="revert")
    if t is Ntransfer:
        to = as_word(eval_clike(n.to, temps, genv))
        amount = as_word(eval_clike(n.amount, temps, genv))
        ok = genv.env.transfer(to, amount)
        genv.gas += G.NODE + G.clike_expr(n.to) + G.clike_expr(n.amount) + G.transfer(amount, ok)
        if not ok:
            return Finalstate(False, reason="transfer failed")
        genv.gas += G.EDGE
        st.node = n.succ
        return st
    if t is Nlog:
        genv.gas += node_cost(genv, fn, n, temps)
        topics = tuple(as_word(eval_clike(e, temps, genv)) for e in n.topics)
        data = tuple(as_word(eval_clike(e, temps, genv)) for e in n.data)
        genv.events.append((topics, data))
        st.node = n.succ
        return st
    raise InternalError(f"Cgraph cannot step {n!r}")
