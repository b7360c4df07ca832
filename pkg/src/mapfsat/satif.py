"""Incremental SAT backend: solver contract plus a built-in CDCL implementation.

Variables are dense positive integers starting at 1 and literals follow the
DIMACS convention (negative int = negated variable). A solver instance is
incremental: clauses may be added between solve() calls, new variables may be
allocated at any time, and learned clauses survive across calls. Instances
are single-owner; distinct instances may run concurrently.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable, Optional


class SatBackendError(RuntimeError):
    """Internal backend failure; distinct from an UNSAT answer."""


class SatSolver:
    """Contract every backend must satisfy (see module docstring)."""

    def new_var(self) -> int:
        raise NotImplementedError

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, lits: Iterable[int]) -> None:
        raise NotImplementedError

    def solve(self) -> bool:
        raise NotImplementedError

    def model(self) -> list[bool]:
        """Truth values indexed by variable (index 0 unused); valid after SAT."""
        raise NotImplementedError

    @property
    def num_vars(self) -> int:
        raise NotImplementedError

    @property
    def num_clauses(self) -> int:
        raise NotImplementedError

    def to_dimacs(self) -> str:
        raise NotImplementedError


def _luby(x: int) -> int:
    # Luby restart sequence (0-indexed): 1 1 2 1 1 2 4 ...
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) // 2
        seq -= 1
        x %= size
    return 1 << seq


class CdclSolver(SatSolver):
    """Conflict-driven clause learning with two watched literals.

    Decision order is activity-based with deterministic tie-breaking, phases
    are saved across backtracks, restarts follow the Luby sequence. Duplicate
    literals are dropped on add; tautological clauses are skipped entirely
    (they constrain nothing) and do not count towards `num_clauses`.

    `interrupt` is polled every `interrupt_interval` conflicts; it may raise
    to abort a long-running solve, leaving the instance reusable.
    """

    _RESTART_BASE = 64
    _ACT_DECAY = 1.0 / 0.95
    _ACT_LIMIT = 1e100

    def __init__(self, interrupt: Optional[Callable[[], None]] = None,
                 interrupt_interval: int = 2048):
        self._nvars = 0
        self._added: list[tuple[int, ...]] = []  # normalized clauses as added
        self._watches: list[list[list[int]]] = [[], []]  # per encoded literal
        self._assign = [0]      # per var: 0 unassigned / 1 true / -1 false
        self._level = [0]
        self._reason: list[Optional[list[int]]] = [None]
        self._phase = [False]
        self._activity = [0.0]
        self._order: list[tuple[float, int]] = []
        self._trail: list[int] = []
        self._lim: list[int] = []
        self._qhead = 0
        self._var_inc = 1.0
        self._unsat = False
        self._model: Optional[list[bool]] = None
        self._conflict_count = 0
        self._interrupt = interrupt
        self._interrupt_interval = max(1, interrupt_interval)

    # ----- variables and clauses -------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self._nvars

    @property
    def num_clauses(self) -> int:
        return len(self._added)

    def new_var(self) -> int:
        self._nvars += 1
        self._assign.append(0)
        self._level.append(0)
        self._reason.append(None)
        self._phase.append(False)
        self._activity.append(0.0)
        self._watches.append([])
        self._watches.append([])
        heapq.heappush(self._order, (0.0, self._nvars))
        return self._nvars

    @staticmethod
    def _enc(lit: int) -> int:
        return (lit << 1) if lit > 0 else ((-lit) << 1) | 1

    @staticmethod
    def _dec(q: int) -> int:
        return (q >> 1) if (q & 1) == 0 else -(q >> 1)

    def _val(self, q: int) -> int:
        a = self._assign[q >> 1]
        if a == 0:
            return 0
        return a if (q & 1) == 0 else -a

    def add_clause(self, lits: Iterable[int]) -> None:
        lits = list(lits)
        if not lits:
            raise ValueError("empty clause")
        seen: set[int] = set()
        clause: list[int] = []
        for lit in lits:
            if not isinstance(lit, int) or lit == 0:
                raise ValueError(f"invalid literal {lit!r}")
            if abs(lit) > self._nvars:
                raise ValueError(f"unallocated variable {abs(lit)}")
            if -lit in seen:
                return  # tautology, constrains nothing
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
        self._added.append(tuple(clause))
        if self._unsat:
            return
        self._cancel_until(0)
        # drop literals already false at level 0, stop early on a true one
        enc = []
        for lit in clause:
            q = self._enc(lit)
            v = self._val(q)
            if v == 1:
                return  # permanently satisfied
            if v == 0:
                enc.append(q)
        if not enc:
            self._unsat = True
            return
        if len(enc) == 1:
            self._enqueue(enc[0], None)
            if self._propagate() is not None:
                self._unsat = True
            return
        self._attach(enc)

    def _attach(self, clause: list[int]) -> None:
        self._watches[clause[0]].append(clause)
        self._watches[clause[1]].append(clause)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self._nvars} {len(self._added)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self._added]
        return "\n".join(lines) + "\n"

    # ----- search ----------------------------------------------------------------

    def _enqueue(self, q: int, reason: Optional[list[int]]) -> None:
        var = q >> 1
        self._assign[var] = 1 if (q & 1) == 0 else -1
        self._level[var] = len(self._lim)
        self._reason[var] = reason
        self._trail.append(q)

    def _propagate(self) -> Optional[list[int]]:
        while self._qhead < len(self._trail):
            p = self._trail[self._qhead]
            self._qhead += 1
            fl = p ^ 1  # literal that just became false
            ws = self._watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0], c[1] = c[1], c[0]
                # invariant: c[1] == fl
                first = c[0]
                if self._val(first) == 1:
                    ws[j] = c
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    if self._val(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self._watches[c[1]].append(c)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = c
                j += 1
                if self._val(first) == -1:
                    while i < n:  # conflict: keep the remaining watchers
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self._qhead = len(self._trail)
                    return c
                self._enqueue(first, c)
            del ws[j:]
        return None

    def _bump(self, var: int) -> None:
        act = self._activity[var] + self._var_inc
        self._activity[var] = act
        if act > self._ACT_LIMIT:
            scale = 1.0 / self._ACT_LIMIT
            for v in range(1, self._nvars + 1):
                self._activity[v] *= scale
            self._var_inc *= scale
        heapq.heappush(self._order, (-self._activity[var], var))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        learnt: list[int] = [0]
        seen = bytearray(self._nvars + 1)
        counter = 0
        p: Optional[int] = None
        bt = 0
        index = len(self._trail) - 1
        cur_level = len(self._lim)
        c = confl
        while True:
            for q in (c if p is None else c[1:]):
                var = q >> 1
                if not seen[var] and self._level[var] > 0:
                    seen[var] = 1
                    self._bump(var)
                    if self._level[var] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
                        if self._level[var] > bt:
                            bt = self._level[var]
            while not seen[self._trail[index] >> 1]:
                index -= 1
            p = self._trail[index]
            index -= 1
            counter -= 1
            seen[p >> 1] = 0
            if counter == 0:
                break
            c = self._reason[p >> 1]
            if c is None:
                raise SatBackendError("missing reason during conflict analysis")
        learnt[0] = p ^ 1
        return learnt, bt

    def _cancel_until(self, level: int) -> None:
        while len(self._lim) > level:
            mark = self._lim.pop()
            for q in self._trail[mark:]:
                var = q >> 1
                self._phase[var] = self._assign[var] == 1
                self._assign[var] = 0
                self._reason[var] = None
                heapq.heappush(self._order, (-self._activity[var], var))
            del self._trail[mark:]
        self._qhead = len(self._trail)

    def _decide(self) -> int:
        while self._order:
            _, var = heapq.heappop(self._order)
            if self._assign[var] == 0:
                return var
        return 0

    def solve(self) -> bool:
        self._model = None
        if self._unsat:
            return False
        self._cancel_until(0)
        if self._propagate() is not None:
            self._unsat = True
            return False
        restart_idx = 0
        budget = _luby(restart_idx) * self._RESTART_BASE
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self._conflict_count += 1
                since_restart += 1
                if self._interrupt is not None and (
                    self._conflict_count % self._interrupt_interval == 0
                ):
                    self._interrupt()
                if not self._lim:
                    self._unsat = True
                    return False
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    # watch the asserting literal and one literal from the
                    # backjump level so the watches stay sound
                    best = max(range(1, len(learnt)), key=lambda k: self._level[learnt[k] >> 1])
                    learnt[1], learnt[best] = learnt[best], learnt[1]
                    self._attach(learnt)
                    self._enqueue(learnt[0], learnt)
                self._var_inc *= self._ACT_DECAY
            else:
                if since_restart >= budget:
                    restart_idx += 1
                    budget = _luby(restart_idx) * self._RESTART_BASE
                    since_restart = 0
                    self._cancel_until(0)
                    continue
                var = self._decide()
                if var == 0:
                    self._model = [False] + [self._assign[v] == 1 for v in range(1, self._nvars + 1)]
                    return True
                self._lim.append(len(self._trail))
                q = (var << 1) if self._phase[var] else (var << 1) | 1
                self._enqueue(q, None)

    def model(self) -> list[bool]:
        if self._model is None:
            raise ValueError("no model available; last solve was not SAT")
        return list(self._model)


def check_model(clauses: Iterable[Iterable[int]], model: list[bool]) -> bool:
    """Independent check that a truth assignment satisfies every clause."""
    for clause in clauses:
        if not any(
            (model[lit] if lit > 0 else not model[-lit]) for lit in clause
        ):
            return False
    return True
