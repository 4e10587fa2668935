"""Exception hierarchy shared by every stage of the compiler."""


class CompileError(Exception):
    """Base for errors a user can cause with a bad program or flag."""


class SourceSyntaxError(CompileError):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


class SourceTypeError(CompileError):
    pass


class UnsupportedFeature(CompileError):
    pass


class UnknownIdent(CompileError):
    pass


class UnknownGlobal(UnknownIdent):
    pass


class LocalRoot(CompileError):
    pass


class TypeMismatch(CompileError):
    pass


class StackTooDeep(CompileError):
    pass


class CallInConstructor(CompileError):
    pass


class DuplicateLabel(CompileError):
    pass


class DuplicateSelector(CompileError):
    pass


class UnresolvedLabel(CompileError):
    pass


class ImmediateTooWide(CompileError):
    pass


class ArityMismatch(CompileError):
    pass


class RuleParseError(CompileError):
    pass


class RuleUnsound(CompileError):
    def __init__(self, rule, counterexample):
        super().__init__(f"rule {rule} is unsound: {counterexample}")
        self.rule = rule
        self.counterexample = counterexample


class UnknownAccount(CompileError):
    pass


class InternalError(Exception):
    """An invariant the compiler itself should maintain was broken."""


class StuckState(InternalError):
    pass


class UnboundVariable(InternalError):
    pass
