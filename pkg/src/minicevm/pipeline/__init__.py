"""Backend phases: Clike, Cgraph, Cbasic, Clinear, Stacked, Expressionless, Methodical.

Phase glossary relative to the usual presentation of this backend:
Clocal/Cintptr effects (local introduction, explicit dereference) happen in
``clike``; labeled entry points are produced by ``clinear``.
"""
