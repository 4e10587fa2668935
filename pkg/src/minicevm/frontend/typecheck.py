"""Typechecker and lowering from the surface tree to typed MiniC.

Surface commands are expression-oriented (a method returns the value of its
last command). Lowering threads a destination temp through each command so
the value lands where the enclosing ``let`` or the method return expects it.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..core import ast as M
from ..core.types import TINT, TVOID, Tarray, Thashmap, Tint, Tstruct, Tcomp_ptr
from ..errors import CallInConstructor, SourceTypeError, UnsupportedFeature
from ..evm.keccak import keccak256, selector
from . import syntax as S

WORD_NAMES = {"int": "int", "uint": "int", "uint256": "int", "address": "address",
              "bool": "bool", "unit": "unit"}

BUILTIN_VARS = {
    "msg_sender": ("caller", "address"),
    "msg_value": ("callvalue", "int"),
    "this_address": ("address", "address"),
    "block_number": ("number", "int"),
}

ARITH = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod"}
BITWISE = {"&": "and", "|": "or", "^": "xor"}
ORDER = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge"}
EQUALITY = {"=": "eq", "<>": "ne"}
LOGIC = {"/\\": "and", "\\/": "or"}

ABI_NAMES = {"int": "uint256", "address": "address", "bool": "bool"}
MAX_WORD = (1 << 256) - 1


# Source-level types used during checking: the strings "int", "address",
# "bool", "unit", BOTTOM for commands that never complete, or the surface
# aggregate type objects for storage paths.
BOTTOM = "bottom"


def _is_word(t) -> bool:
    return t in ("int", "address")


def _compatible(a, b) -> bool:
    if a == BOTTOM or b == BOTTOM:
        return True
    if _is_word(a) and _is_word(b):
        return True
    return a == b


def _join(a, b):
    return b if a == BOTTOM else a


@dataclass
class FnSig:
    name: str
    kind: M.FunctionKind
    params: list         # [(name, srctype)]
    ret: object          # srctype or None while unknown
    decl: S.Method


class Checker:
    def __init__(self, unit: S.SourceUnit):
        self.unit = unit
        self.structs = {}      # name -> S.TypeDecl
        self.composites = {}   # name -> Tstruct
        self.events = {}       # name -> S.EventDecl
        self.globals = {}      # name -> srctype
        self.global_order = []
        self.sigs = {}         # name -> FnSig
        self.done = {}         # name -> M.Function
        self.in_progress = []

    # ----------------------------------------------------------------- types
    def srctype(self, t):
        """Normalize a surface type: word names become strings."""
        if isinstance(t, S.TyName):
            if t.name in WORD_NAMES:
                return WORD_NAMES[t.name]
            if t.name in self.structs:
                return t
            raise SourceTypeError(f"unknown type {t.name}")
        if isinstance(t, S.TyMapping):
            k = self.srctype(t.key)
            if not (_is_word(k) or k == "bool"):
                raise SourceTypeError("mapping keys must be words")
            return S.TyMapping(k, self.srctype(t.val))
        if isinstance(t, S.TyArray):
            return S.TyArray(t.length, self.srctype(t.elem))
        raise SourceTypeError(f"bad type {t!r}")

    def tp(self, t):
        """Surface type to MiniC type."""
        if t in ("int", "address", "bool"):
            return TINT
        if t == "unit" or t == BOTTOM:
            return TVOID
        if isinstance(t, S.TyName):
            return Tcomp_ptr(t.name)
        if isinstance(t, S.TyMapping):
            return Thashmap(self.tp(t.key), self.tp(t.val))
        if isinstance(t, S.TyArray):
            return Tarray(self.tp(t.elem), t.length)
        raise SourceTypeError(f"bad type {t!r}")

    def struct_fields(self, t):
        decl = self.structs[t.name]
        return {n: self.srctype(ft) for n, ft in decl.fields}

    # --------------------------------------------------------------- program
    def check(self) -> M.Program:
        u = self.unit
        objs = u.objects
        if len(objs) != 1:
            raise UnsupportedFeature(f"expected exactly one object, found {len(objs)}")
        obj = objs[0]
        sigs = {s.name: s for s in u.of_kind(S.Signature)}
        for layer in u.of_kind(S.LayerDecl):
            if layer.underlay:
                raise UnsupportedFeature(f"layer {layer.name} has an underlay; only kernel-mode layers are supported")
            for fname, oname in layer.bindings:
                if oname != obj.name:
                    raise SourceTypeError(f"layer {layer.name} binds unknown object {oname}")
        for td in u.of_kind(S.TypeDecl):
            if td.name in self.structs or td.name in WORD_NAMES:
                raise SourceTypeError(f"duplicate type {td.name}")
            self.structs[td.name] = td
        for td in self.structs.values():
            self.composites[td.name] = Tstruct(
                td.name, tuple((n, self.tp(self.srctype(ft))) for n, ft in td.fields))
        for ev in u.of_kind(S.EventDecl):
            if ev.name in self.events:
                raise SourceTypeError(f"duplicate event {ev.name}")
            for t, _ in ev.params:
                if not (_is_word(self.srctype(t)) or self.srctype(t) == "bool"):
                    raise SourceTypeError(f"event {ev.name} parameters must be words")
            self.events[ev.name] = ev

        sig = None
        if obj.signature is not None:
            if obj.signature not in sigs:
                raise SourceTypeError(f"unknown signature {obj.signature}")
            sig = sigs[obj.signature]

        ctor_inits = []
        for sv in obj.state_vars:
            if sv.name in self.globals or sv.name in BUILTIN_VARS:
                raise SourceTypeError(f"duplicate state variable {sv.name}")
            t = self.srctype(sv.ty)
            self.globals[sv.name] = t
            self.global_order.append(sv.name)
            ctor_inits.extend(self.initializer(sv, t))

        sig_entries = {e.name: e for e in sig.entries} if sig else {}
        names = set()
        for m in obj.methods:
            if m.name in names:
                raise SourceTypeError(f"duplicate method {m.name}")
            names.add(m.name)
            if m.name in self.globals:
                raise SourceTypeError(f"method {m.name} clashes with a state variable")
            self.sigs[m.name] = self.fn_sig(m, sig_entries.get(m.name), sig is not None)
        for name in sig_entries:
            if name not in names:
                raise SourceTypeError(f"signature entry {name} has no implementation")

        if "constructor" not in self.sigs:
            empty = S.Method("constructor", (), None, S.ExprCmd(S.UnitLit()))
            self.sigs["constructor"] = FnSig("constructor", M.FunctionKind.CONSTRUCTOR, [], "unit", empty)

        for name in list(self.sigs):
            self.function(name)
        ctor = self.done["constructor"]
        if ctor_inits:
            ctor.body = M.seq(*ctor_inits, ctor.body)

        funcs = {"constructor": self.done["constructor"]}
        for m in obj.methods:
            if m.name != "constructor":
                funcs[m.name] = self.done[m.name]
        events = {}
        for ev in self.events.values():
            events[ev.name] = (self.event_abi(ev), tuple(ix for _, ix in ev.params))
        return M.Program(obj.name, [(g, self.tp(self.globals[g])) for g in self.global_order],
                         dict(self.composites), funcs, "constructor", events)

    def initializer(self, sv, t):
        init = sv.init
        if isinstance(init, str):
            want = {"mapping_init": S.TyMapping, "array_init": S.TyArray, "struct_init": S.TyName}[init]
            if not isinstance(t, want):
                raise SourceTypeError(f"{init} does not fit the type of {sv.name}")
            return []
        if not (_is_word(t) or t == "bool"):
            raise SourceTypeError(f"state variable {sv.name} needs an aggregate initializer")
        if isinstance(init, S.Num):
            if t == "bool":
                raise SourceTypeError(f"integer initializer for bool {sv.name}")
            v = init.value
        elif isinstance(init, S.BoolLit):
            if t != "bool":
                raise SourceTypeError(f"bool initializer for {t} {sv.name}")
            v = int(init.value)
        else:
            raise SourceTypeError(f"initializer of {sv.name} must be a literal")
        if v > MAX_WORD:
            raise SourceTypeError(f"initializer of {sv.name} does not fit in a word")
        if v == 0:
            return []
        return [M.Sassign(M.Eglob(sv.name, TINT), M.Eint256(v))]

    def fn_sig(self, m: S.Method, entry, has_sig: bool) -> FnSig:
        if m.name == "constructor":
            kind = M.FunctionKind.CONSTRUCTOR
        elif m.private or (has_sig and entry is None):
            kind = M.FunctionKind.PRIVATE
        else:
            kind = M.FunctionKind.METHOD
        if m.private and entry is not None:
            raise SourceTypeError(f"private function {m.name} is listed in the signature")
        if entry is not None and len(entry.args) != len(m.params):
            raise SourceTypeError(f"{m.name}: signature has {len(entry.args)} arguments, definition has {len(m.params)}")
        params = []
        seen = set()
        for i, (pname, pty) in enumerate(m.params):
            if pname in seen:
                raise SourceTypeError(f"{m.name}: duplicate parameter {pname}")
            seen.add(pname)
            t = self.srctype(pty) if pty is not None else None
            if entry is not None:
                st = self.srctype(entry.args[i])
                if t is not None and not _compatible(t, st):
                    raise SourceTypeError(f"{m.name}: parameter {pname} annotated {t}, signature says {st}")
                t = t or st
            t = t or "int"
            if not (_is_word(t) or t == "bool"):
                raise SourceTypeError(f"{m.name}: parameter {pname} must be a word")
            params.append((pname, t))
        ret = self.srctype(m.ret) if m.ret is not None else None
        if entry is not None:
            st = self.srctype(entry.ret)
            if ret is not None and not _compatible(ret, st):
                raise SourceTypeError(f"{m.name}: return annotated {ret}, signature says {st}")
            ret = ret or st
        if kind == M.FunctionKind.CONSTRUCTOR:
            if ret not in (None, "unit"):
                raise SourceTypeError("constructor must return unit")
            ret = "unit"
        if ret is not None and not (_is_word(ret) or ret in ("bool", "unit")):
            raise SourceTypeError(f"{m.name}: return type must be a word or unit")
        return FnSig(m.name, kind, params, ret, m)

    def event_abi(self, ev) -> str:
        return f"{ev.name}({','.join(ABI_NAMES[self.srctype(t)] for t, _ in ev.params)})"

    # -------------------------------------------------------------- functions
    def function(self, name) -> M.Function:
        if name in self.done:
            return self.done[name]
        if name in self.in_progress:
            cycle = " -> ".join(self.in_progress[self.in_progress.index(name):] + [name])
            raise SourceTypeError(f"recursive calls are not supported: {cycle}")
        self.in_progress.append(name)
        sig = self.sigs[name]
        fl = FnLowering(self, sig)
        fn = fl.lower()
        self.in_progress.pop()
        self.done[name] = fn
        return fn


class FnLowering:
    def __init__(self, checker: Checker, sig: FnSig):
        self.c = checker
        self.sig = sig
        self.temps = {}
        self.scope = {}

    def new_temp(self, name, ty=TINT) -> int:
        t = len(self.temps)
        self.temps[t] = (name, ty)
        return t

    def lower(self) -> M.Function:
        sig = self.sig
        params = []
        for pname, pty in sig.params:
            t = self.new_temp(pname)
            self.scope[pname] = (t, pty)
            params.append(t)
        wants_value = sig.ret not in ("unit", None)
        ret_t = None
        if wants_value or sig.ret is None:
            ret_t = self.new_temp("_ret")
        body, ty = self.cmd(sig.decl.body, ret_t)
        if sig.ret is None:
            sig.ret = "unit" if ty == BOTTOM else ty
            if not (_is_word(sig.ret) or sig.ret in ("bool", "unit")):
                raise SourceTypeError(f"{sig.name}: cannot return a value of type {sig.ret}")
        elif not _compatible(ty, sig.ret) and not (sig.ret == "unit" and sig.kind == M.FunctionKind.CONSTRUCTOR):
            raise SourceTypeError(f"{sig.name}: body has type {ty}, expected {sig.ret}")
        if sig.ret == "unit":
            if ret_t is not None:
                del self.temps[ret_t]
            body = M.seq(body, M.Sreturn(None))
            ret_type = TVOID
        else:
            body = M.seq(body, M.Sreturn(M.Etemp(ret_t)))
            ret_type = TINT
        abi = ""
        sel = None
        if sig.kind == M.FunctionKind.METHOD:
            abi = f"{sig.name}({','.join(ABI_NAMES[t] for _, t in sig.params)})"
            sel = selector(abi)
        elif sig.kind == M.FunctionKind.CONSTRUCTOR:
            abi = f"constructor({','.join(ABI_NAMES[t] for _, t in sig.params)})"
        return M.Function(sig.name, sig.kind, params, dict(self.temps), body, ret_type, abi, sel)

    # --------------------------------------------------------------- commands
    def cmd(self, c, dest):
        """Lower ``c`` so its value (if any) is stored in temp ``dest``."""
        if isinstance(c, S.Let):
            t = self.new_temp(c.name)
            s1, ty = self.cmd(c.value, t)
            if not (_is_word(ty) or ty in ("bool", "unit", BOTTOM)):
                raise SourceTypeError(f"cannot bind {c.name} to an aggregate value")
            saved = self.scope.get(c.name)
            self.scope[c.name] = (t, ty)
            s2, ty2 = self.cmd(c.body, dest)
            if saved is None:
                del self.scope[c.name]
            else:
                self.scope[c.name] = saved
            return M.seq(s1, s2), ty2
        if isinstance(c, S.Seq):
            s1, t1 = self.cmd(c.first, None)
            s2, t2 = self.cmd(c.second, dest)
            return M.seq(s1, s2), (BOTTOM if t1 == BOTTOM else t2)
        if isinstance(c, S.If):
            cond = self.cond(c.cond)
            s1, t1 = self.cmd(c.then, dest)
            if c.orelse is None:
                if not _compatible(t1, "unit"):
                    raise SourceTypeError("if without else must have unit type")
                return M.Sifthenelse(cond, s1, M.SKIP), "unit"
            s2, t2 = self.cmd(c.orelse, dest)
            if not _compatible(t1, t2):
                raise SourceTypeError(f"if branches have types {t1} and {t2}")
            return M.Sifthenelse(cond, s1, s2), _join(t1, t2)
        if isinstance(c, S.For):
            lo, tlo = self.expr(c.lo)
            hi, thi = self.expr(c.hi)
            if not (_is_word(tlo) and _is_word(thi)):
                raise SourceTypeError("for-loop bounds must be integers")
            i = self.new_temp(c.var)
            h = self.new_temp(f"_{c.var}_hi")
            saved = self.scope.get(c.var)
            self.scope[c.var] = (i, "int")
            body, _ = self.cmd(c.body, None)
            if saved is None:
                del self.scope[c.var]
            else:
                self.scope[c.var] = saved
            head = M.Sifthenelse(M.Ebinop("lt", M.Etemp(i), M.Etemp(h)), M.SKIP, M.Sbreak())
            step = M.Sset(i, M.Ebinop("add", M.Etemp(i), M.Eint256(1)))
            loop = M.Sloop(M.seq(head, body, step))
            return M.seq(M.Sset(i, lo), M.Sset(h, hi), loop), "unit"
        if isinstance(c, S.Assert):
            return M.Sifthenelse(self.cond(c.cond), M.SKIP, M.Srevert()), "unit"
        if isinstance(c, S.Revert):
            return M.Srevert(), BOTTOM
        if isinstance(c, S.Assign):
            lhs, tl = self.lvalue(c.target)
            rhs, tr = self.expr(c.value)
            if not _compatible(tl, tr):
                raise SourceTypeError(f"cannot assign {tr} to {tl}")
            return M.Sassign(lhs, rhs), "unit"
        if isinstance(c, S.Emit):
            ev = self.c.events.get(c.event)
            if ev is None:
                raise SourceTypeError(f"unknown event {c.event}")
            if len(ev.params) != len(c.args):
                raise SourceTypeError(f"event {c.event} takes {len(ev.params)} arguments")
            topics = [M.Eint256(keccak256(self.c.event_abi(ev).encode()))]
            data = []
            for (pty, indexed), a in zip(ev.params, c.args):
                e, ta = self.expr(a)
                if not _compatible(ta, self.c.srctype(pty)):
                    raise SourceTypeError(f"event {c.event}: argument of type {ta}")
                (topics if indexed else data).append(e)
            if len(topics) > 4:
                raise SourceTypeError(f"event {c.event} has more than three indexed parameters")
            return M.Slog(tuple(topics), tuple(data)), "unit"
        if isinstance(c, S.TransferEth):
            to, tt = self.expr(c.to)
            amt, ta = self.expr(c.amount)
            if not (_is_word(tt) and _is_word(ta)):
                raise SourceTypeError("transferEth takes an address and an amount")
            return M.Stransfer(to, amt), "unit"
        if isinstance(c, S.ExprCmd):
            e = c.e
            if isinstance(e, S.CallE) and e.fn != "balance":
                return self.call(e, dest)
            if isinstance(e, S.UnitLit):
                return M.SKIP, "unit"
            me, ty = self.expr(e)
            if dest is None:
                return M.SKIP, ty
            return M.Sset(dest, me), ty
        raise SourceTypeError(f"unknown command {c!r}")

    def call(self, e: S.CallE, dest):
        sigs = self.c.sigs
        if e.fn not in sigs:
            raise SourceTypeError(f"unknown function {e.fn}")
        callee = sigs[e.fn]
        if self.sig.kind == M.FunctionKind.CONSTRUCTOR:
            raise CallInConstructor(f"constructor calls {e.fn}; calls from the constructor are prohibited")
        if callee.kind != M.FunctionKind.PRIVATE:
            raise SourceTypeError(f"{e.fn} is a public method and cannot be called internally")
        self.c.function(e.fn)
        if len(e.args) != len(callee.params):
            raise SourceTypeError(f"{e.fn} expects {len(callee.params)} arguments")
        args = []
        for a, (_, pt) in zip(e.args, callee.params):
            me, ta = self.expr(a)
            if not _compatible(ta, pt):
                raise SourceTypeError(f"{e.fn}: argument of type {ta}, expected {pt}")
            args.append(me)
        ret = callee.ret
        return M.Scall(dest if ret != "unit" else None, e.fn, tuple(args)), ret

    # ------------------------------------------------------------ expressions
    def cond(self, e):
        me, t = self.expr(e)
        if t != "bool":
            raise SourceTypeError(f"condition has type {t}, expected bool")
        return me

    def lvalue(self, e):
        me, t = self.expr(e, allow_aggregate=True)
        if not isinstance(me, (M.Eglob, M.Eindex, M.Efield)):
            raise SourceTypeError("only state variables can be assigned")
        if not (_is_word(t) or t == "bool"):
            raise SourceTypeError("cannot assign to an aggregate")
        return me, t

    def expr(self, e, allow_aggregate=False):
        me, t = self._expr(e)
        if not allow_aggregate and not (_is_word(t) or t in ("bool", "unit")):
            raise SourceTypeError(f"aggregate value used as a word: {e!r}")
        if t == "unit" and not allow_aggregate:
            raise SourceTypeError("unit value used where a word is expected")
        return me, t

    def _expr(self, e):
        if isinstance(e, S.Num):
            if e.value > MAX_WORD:
                raise SourceTypeError(f"literal {e.value} does not fit in a word")
            return M.Eint256(e.value), "int"
        if isinstance(e, S.BoolLit):
            return M.Eint256(int(e.value)), "bool"
        if isinstance(e, S.UnitLit):
            return None, "unit"
        if isinstance(e, S.Var):
            if e.name in self.scope:
                t, ty = self.scope[e.name]
                if ty == "unit":
                    return None, "unit"
                return M.Etemp(t), ty
            if e.name in self.c.globals:
                ty = self.c.globals[e.name]
                return M.Eglob(e.name, self.c.tp(ty)), ty
            if e.name in BUILTIN_VARS:
                b, ty = BUILTIN_VARS[e.name]
                return M.Ecall0(b), ty
            raise SourceTypeError(f"unknown identifier {e.name}")
        if isinstance(e, S.CallE):
            if e.fn == "balance":
                if len(e.args) != 1:
                    raise SourceTypeError("balance takes one argument")
                a, ta = self.expr(e.args[0])
                if not _is_word(ta):
                    raise SourceTypeError("balance expects an address")
                return M.Ecall1("balance", a), "int"
            raise SourceTypeError(f"call to {e.fn} must be bound with let or used as a command")
        if isinstance(e, S.UnOp):
            a, t = self.expr(e.e)
            if e.op == "!":
                if t != "bool":
                    raise SourceTypeError("! expects a bool")
                return M.Eunop("not", a), "bool"
            if not _is_word(t):
                raise SourceTypeError("~ expects an integer")
            return M.Eunop("bitnot", a), "int"
        if isinstance(e, S.BinOp):
            a, ta = self.expr(e.left)
            b, tb = self.expr(e.right)
            op = e.op
            if op in ARITH or op in BITWISE:
                if not (_is_word(ta) and _is_word(tb)):
                    raise SourceTypeError(f"operator {op} expects integers, got {ta} and {tb}")
                return M.Ebinop(ARITH.get(op) or BITWISE[op], a, b), "int"
            if op in ORDER:
                if not (_is_word(ta) and _is_word(tb)):
                    raise SourceTypeError(f"operator {op} expects integers, got {ta} and {tb}")
                return M.Ebinop(ORDER[op], a, b), "bool"
            if op in EQUALITY:
                if not _compatible(ta, tb):
                    raise SourceTypeError(f"cannot compare {ta} with {tb}")
                return M.Ebinop(EQUALITY[op], a, b), "bool"
            if op in LOGIC:
                if ta != "bool" or tb != "bool":
                    raise SourceTypeError(f"operator {op} expects bools, got {ta} and {tb}")
                return M.Ebinop(LOGIC[op], a, b), "bool"
            raise SourceTypeError(f"unknown operator {op}")
        if isinstance(e, S.IndexE):
            base, tb = self._expr(e.e)
            if not isinstance(base, (M.Eglob, M.Eindex, M.Efield)):
                raise SourceTypeError("only storage mappings and arrays can be indexed")
            idx, ti = self.expr(e.idx)
            if isinstance(tb, S.TyMapping):
                if not _compatible(ti, tb.key):
                    raise SourceTypeError(f"mapping key has type {tb.key}, index has type {ti}")
                elem = tb.val
            elif isinstance(tb, S.TyArray):
                if not _is_word(ti):
                    raise SourceTypeError("array index must be an integer")
                if isinstance(idx, M.Eint256) and idx.value >= tb.length:
                    raise SourceTypeError(f"index {idx.value} out of bounds for array of length {tb.length}")
                elem = tb.elem
            else:
                raise SourceTypeError(f"cannot index a value of type {tb}")
            return M.Eindex(base, idx, self.c.tp(elem)), elem
        if isinstance(e, S.FieldE):
            base, tb = self._expr(e.e)
            if not isinstance(tb, S.TyName) or tb.name not in self.c.structs:
                raise SourceTypeError(f"field access on non-struct value of type {tb}")
            if not isinstance(base, (M.Eglob, M.Eindex, M.Efield)):
                raise SourceTypeError("only storage structs have fields")
            fields = self.c.struct_fields(tb)
            if e.name not in fields:
                raise SourceTypeError(f"struct {tb.name} has no field {e.name}")
            ft = fields[e.name]
            return M.Efield(base, e.name, self.c.tp(ft)), ft
        raise SourceTypeError(f"unknown expression {e!r}")


def typecheck(unit: S.SourceUnit) -> M.Program:
    return Checker(unit).check()
