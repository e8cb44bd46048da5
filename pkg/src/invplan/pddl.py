"""STRIPS-subset planning language: parsing, grounding, and transition semantics.

The surface syntax is s-expression based (comment character ``;``) and follows
the conventional planning-domain file layout, so published domain files in the
supported subset port directly.  Supported requirements: ``:strips``,
``:typing``, ``:equality``, ``:negative-preconditions``, and integer-valued
fluents (``:fluents``) with assign/increase/decrease effects and
``= < <= > >=`` comparisons.

Two small extensions beyond the classic subset:

* predicate parameters may be declared with the builtin numeric type
  ``integer`` (alias ``number``); such arguments are integer literals in
  ground facts and arbitrary integer expressions in conditions/effects,
  e.g. ``(wall (+ (xpos) 1) (ypos))``,
* a problem may declare several candidate goals via
  ``(:goals (<label> <formula>) ...)`` in addition to the single-goal
  ``(:goal <formula>)`` form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

NUMERIC_TYPES = ("integer", "number")
ROOT_TYPE = "object"

KNOWN_REQUIREMENTS = {
    ":strips", ":typing", ":equality", ":negative-preconditions", ":fluents",
}


class PddlError(Exception):
    """Base class for parse and validation errors."""


class PddlSyntaxError(PddlError):
    def __init__(self, msg, line, col):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class PddlSemanticError(PddlError):
    def __init__(self, msg, symbol=None):
        super().__init__(msg if symbol is None else f"{msg}: {symbol}")
        self.symbol = symbol


class PreconditionError(PddlError):
    """Raised by :func:`apply` when the action's precondition fails."""

    def __init__(self, action, failing):
        super().__init__(f"precondition of {action} violated at {failing}")
        self.action = action
        self.failing = failing


# ---------------------------------------------------------------------------
# Tokenizer / reader
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text):
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(_Tok(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            c0 = col
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            toks.append(_Tok(text[start:i], line, c0))
    return toks


def _read(toks, pos):
    """Read one s-expression starting at toks[pos]; returns (node, next_pos).

    Nodes are either _Tok leaves or lists whose first element position is
    remembered via the opening paren token (stored at index 0 of a wrapper).
    """
    if pos >= len(toks):
        raise PddlSyntaxError("unexpected end of input", -1, -1)
    t = toks[pos]
    if t.text == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(toks):
                raise PddlSyntaxError("unbalanced parenthesis", t.line, t.col)
            if toks[pos].text == ")":
                return _List(t, items), pos + 1
            node, pos = _read(toks, pos)
            items.append(node)
    if t.text == ")":
        raise PddlSyntaxError("unexpected ')'", t.line, t.col)
    return t, pos + 1


class _List(list):
    """A parsed list that remembers the position of its opening paren."""

    def __init__(self, open_tok, items):
        super().__init__(items)
        self.line = open_tok.line
        self.col = open_tok.col


def _read_all(text):
    toks = _tokenize(text)
    exprs = []
    pos = 0
    while pos < len(toks):
        node, pos = _read(toks, pos)
        exprs.append(node)
    return exprs


def _sym(node, what="symbol"):
    if not isinstance(node, _Tok):
        raise PddlSyntaxError(f"expected {what}", node.line, node.col)
    return node.text.lower()


def _err(node, msg):
    line = getattr(node, "line", -1)
    col = getattr(node, "col", -1)
    raise PddlSyntaxError(msg, line, col)


def _is_int(s):
    try:
        int(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# AST: terms, expressions, conditions, effects
# ---------------------------------------------------------------------------
#
# Terms in atom argument positions are strings (objects or ?variables),
# ints, or numeric expressions.  Expressions are ints, FluentRef, or BinOp.

@dataclass(frozen=True)
class FluentRef:
    name: str
    args: tuple


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Lit:
    pred: str
    args: tuple
    positive: bool = True


@dataclass(frozen=True)
class Cmp:
    op: str  # one of = < <= > >=
    lhs: object
    rhs: object


@dataclass(frozen=True)
class ObjEq:
    a: object
    b: object
    positive: bool = True


@dataclass(frozen=True)
class FluentOp:
    op: str  # assign | increase | decrease
    ref: FluentRef
    expr: object


@dataclass(frozen=True)
class Effects:
    adds: tuple = ()
    dels: tuple = ()
    fluent_ops: tuple = ()


EMPTY_EFFECTS = Effects()


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    params: tuple  # of (var, type)
    precond: tuple  # of Lit | Cmp | ObjEq
    effects: Effects


@dataclass(eq=True)
class DomainDef:
    name: str
    types: dict  # type -> parent
    predicates: dict  # name -> tuple of param types
    functions: dict  # name -> tuple of param types
    operators: tuple  # of OperatorSchema, sorted by name
    _tuple_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _ga_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def operator(self, name):
        for op in self.operators:
            if op.name == name:
                return op
        raise PddlSemanticError("unknown operator", name)


@dataclass(frozen=True)
class GoalSpec:
    literals: tuple  # ground Lit | Cmp
    label: str

    def __str__(self):
        return self.label


class State:
    """Immutable set of ground boolean facts plus integer fluent valuation."""

    __slots__ = ("facts", "fluents", "_key", "_hash")

    def __init__(self, facts, fluents):
        self.facts = frozenset(facts)
        self.fluents = dict(fluents)
        self._key = None
        self._hash = None

    def key(self):
        """Canonical identity: fact set plus sorted fluent pairs."""
        if self._key is None:
            self._key = (self.facts, tuple(sorted(self.fluents.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, State) and self.key() == other.key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        facts = " ".join(sorted(atom_to_str(a) for a in self.facts))
        flts = " ".join(
            f"{fluent_to_str(k)}={v}" for k, v in sorted(self.fluents.items())
        )
        return f"State({facts} | {flts})"


@dataclass(eq=True)
class ProblemDef:
    name: str
    domain: DomainDef
    objects: dict  # name -> type
    init: State
    goals: tuple  # of GoalSpec

    @property
    def domain_name(self):
        return self.domain.name


class GroundAction:
    """An operator instantiated with constant arguments.

    Numeric subexpressions inside the precondition/effects may still refer to
    fluents; they are evaluated against the state where the action is checked
    or applied.
    """

    __slots__ = ("schema", "args", "precond", "effects")

    def __init__(self, schema, args, precond, effects):
        self.schema = schema
        self.args = tuple(args)
        self.precond = precond
        self.effects = effects

    def __eq__(self, other):
        return (
            isinstance(other, GroundAction)
            and self.schema == other.schema
            and self.args == other.args
        )

    def __hash__(self):
        return hash((self.schema, self.args))

    def __lt__(self, other):
        return (self.schema, self.args) < (other.schema, other.args)

    def __str__(self):
        if not self.args:
            return f"({self.schema})"
        return f"({self.schema} {' '.join(self.args)})"

    __repr__ = __str__


NOOP = GroundAction("noop", (), (), EMPTY_EFFECTS)


# ---------------------------------------------------------------------------
# Domain parsing
# ---------------------------------------------------------------------------

def parse_domain(text: str) -> DomainDef:
    """Parse a domain description, validating declarations and references."""
    exprs = _read_all(text)
    if len(exprs) != 1 or not isinstance(exprs[0], _List):
        raise PddlSyntaxError("expected a single (define ...) form", 1, 1)
    top = exprs[0]
    if len(top) < 2 or _sym(top[0]) != "define":
        _err(top, "expected (define (domain ...) ...)")
    head = top[1]
    if not isinstance(head, _List) or len(head) != 2 or _sym(head[0]) != "domain":
        _err(head, "expected (domain <name>)")
    name = _sym(head[1], "domain name")

    types = {ROOT_TYPE: None}
    predicates = {}
    functions = {}
    operators = []

    for section in top[2:]:
        if not isinstance(section, _List) or not section:
            _err(section, "expected a (:section ...) form")
        kind = _sym(section[0])
        if kind == ":requirements":
            for req in section[1:]:
                r = _sym(req)
                if r not in KNOWN_REQUIREMENTS:
                    raise PddlSemanticError("unsupported requirement", r)
        elif kind == ":types":
            for tname, parent in _parse_typed_names(section[1:]):
                parent = parent or ROOT_TYPE
                types[tname] = parent
                types.setdefault(parent, ROOT_TYPE)  # parents declare implicitly
        elif kind == ":predicates":
            for decl in section[1:]:
                pname, ptypes = _parse_pred_decl(decl)
                if pname in predicates:
                    raise PddlSemanticError("duplicate predicate", pname)
                predicates[pname] = ptypes
        elif kind == ":functions":
            for decl in section[1:]:
                fname, ftypes = _parse_pred_decl(decl)
                if fname in functions:
                    raise PddlSemanticError("duplicate function", fname)
                functions[fname] = ftypes
        elif kind == ":action":
            operators.append(_parse_action(section))
        else:
            _err(section, f"unsupported section {kind}")

    # resolve and validate
    for tname, parent in types.items():
        if parent is not None and parent not in types:
            raise PddlSemanticError("undeclared parent type", parent)
    dom = DomainDef(
        name=name,
        types=types,
        predicates=predicates,
        functions=functions,
        operators=tuple(sorted(operators, key=lambda o: o.name)),
    )
    names = [op.name for op in dom.operators]
    if len(set(names)) != len(names):
        raise PddlSemanticError("duplicate operator name")
    for op in dom.operators:
        _validate_schema(dom, op)
    return dom


def _parse_typed_names(nodes):
    """Parse ``a b - t c d`` lists into (name, type-or-None) pairs."""
    out = []
    pending = []
    i = 0
    while i < len(nodes):
        s = _sym(nodes[i])
        if s == "-":
            if i + 1 >= len(nodes):
                _err(nodes[i], "dangling '-' in typed list")
            t = _sym(nodes[i + 1])
            out.extend((p, t) for p in pending)
            pending = []
            i += 2
        else:
            pending.append(s)
            i += 1
    out.extend((p, None) for p in pending)
    return out


def _parse_pred_decl(decl):
    if not isinstance(decl, _List) or not decl:
        _err(decl, "expected (name ?params...)")
    pname = _sym(decl[0])
    ptypes = []
    for var, t in _parse_typed_names(decl[1:]):
        if not var.startswith("?"):
            _err(decl, f"parameter {var} must start with '?'")
        ptypes.append(t or ROOT_TYPE)
    return pname, tuple(ptypes)


def _parse_action(section):
    name = _sym(section[1], "action name")
    params = ()
    precond = ()
    effects = EMPTY_EFFECTS
    i = 2
    while i < len(section):
        key = _sym(section[i])
        if i + 1 >= len(section):
            _err(section, f"missing value after {key}")
        val = section[i + 1]
        if key == ":parameters":
            if not isinstance(val, _List):
                _err(val, "expected parameter list")
            params = tuple(
                (v, t or ROOT_TYPE) for v, t in _parse_typed_names(list(val))
            )
        elif key == ":precondition":
            precond = _parse_condition(val)
        elif key == ":effect":
            effects = _parse_effects(val)
        else:
            _err(section, f"unsupported action field {key}")
        i += 2
    return OperatorSchema(name=name, params=params, precond=precond, effects=effects)


_CMP_OPS = {"<", "<=", ">", ">=", "="}


def _parse_term(node):
    """A term in an atom argument position: object, variable, int, or expr."""
    if isinstance(node, _Tok):
        s = node.text.lower()
        if _is_int(s):
            return int(s)
        return s
    return _parse_expr(node)


def _parse_expr(node):
    if isinstance(node, _Tok):
        s = node.text.lower()
        if _is_int(s):
            return int(s)
        _err(node, f"expected numeric expression, got bare symbol '{s}'"
                   " (fluent references must be parenthesized)")
    if not node:
        _err(node, "empty expression")
    head = _sym(node[0])
    if head in ("+", "-", "*"):
        if len(node) != 3:
            _err(node, f"'{head}' takes two arguments")
        return BinOp(head, _parse_expr(node[1]), _parse_expr(node[2]))
    args = tuple(_parse_term(a) for a in node[1:])
    return FluentRef(head, args)


def _looks_numeric(node):
    if isinstance(node, _Tok):
        return _is_int(node.text)
    return True  # any list in a comparison argument is a numeric expression


def _parse_condition(node):
    """Parse a goal-description formula into a flat conjunction tuple."""
    if not isinstance(node, _List):
        _err(node, "expected a condition")
    if not node:
        return ()  # the empty conjunction ()
    head = _sym(node[0])
    if head == "and":
        out = []
        for sub in node[1:]:
            out.extend(_parse_condition(sub))
        return tuple(out)
    if head == "not":
        if len(node) != 2 or not isinstance(node[1], _List) or not node[1]:
            _err(node, "'not' takes a single atom or equality")
        inner = node[1]
        ih = _sym(inner[0])
        if ih == "=":
            if _looks_numeric(inner[1]) or _looks_numeric(inner[2]):
                _err(node, "negated numeric comparison is not supported")
            return (ObjEq(_parse_term(inner[1]), _parse_term(inner[2]), False),)
        if ih in _CMP_OPS or ih in ("and", "not"):
            _err(node, "'not' may only wrap an atom or object equality")
        return (Lit(ih, tuple(_parse_term(a) for a in inner[1:]), False),)
    if head in _CMP_OPS:
        if len(node) != 3:
            _err(node, f"'{head}' takes two arguments")
        if head == "=" and not (_looks_numeric(node[1]) or _looks_numeric(node[2])):
            return (ObjEq(_parse_term(node[1]), _parse_term(node[2]), True),)
        return (Cmp(head, _parse_expr(node[1]), _parse_expr(node[2])),)
    return (Lit(head, tuple(_parse_term(a) for a in node[1:]), True),)


def _parse_effects(node):
    if not isinstance(node, _List):
        _err(node, "expected an effect")
    adds, dels, fops = [], [], []

    def walk(n):
        if not n:
            return  # (and) or ()
        head = _sym(n[0])
        if head == "and":
            for sub in n[1:]:
                walk(sub)
        elif head == "not":
            if len(n) != 2 or not isinstance(n[1], _List):
                _err(n, "'not' effect takes a single atom")
            inner = n[1]
            dels.append(Lit(_sym(inner[0]), tuple(_parse_term(a) for a in inner[1:])))
        elif head in ("assign", "increase", "decrease"):
            if len(n) != 3:
                _err(n, f"'{head}' takes a fluent and an expression")
            ref = _parse_expr(n[1])
            if not isinstance(ref, FluentRef):
                _err(n, f"'{head}' target must be a fluent")
            fops.append(FluentOp(head, ref, _parse_expr(n[2])))
        else:
            adds.append(Lit(head, tuple(_parse_term(a) for a in n[1:])))

    walk(node)
    return Effects(adds=tuple(adds), dels=tuple(dels), fluent_ops=tuple(fops))


# ---------------------------------------------------------------------------
# Schema validation
# ---------------------------------------------------------------------------

def _is_numeric_type(t):
    return t in NUMERIC_TYPES


def _walk_terms(cond_or_eff):
    """Yield every term/expression appearing in a condition tuple or Effects."""
    def from_expr(e):
        if isinstance(e, BinOp):
            yield from from_expr(e.lhs)
            yield from from_expr(e.rhs)
        else:
            yield e

    if isinstance(cond_or_eff, Effects):
        items = list(cond_or_eff.adds) + list(cond_or_eff.dels)
        for fo in cond_or_eff.fluent_ops:
            yield fo.ref
            yield from from_expr(fo.expr)
            for a in fo.ref.args:
                yield a
        for lit in items:
            yield lit
            for a in lit.args:
                yield a
    else:
        for c in cond_or_eff:
            yield c
            if isinstance(c, Lit):
                for a in c.args:
                    yield a
            elif isinstance(c, Cmp):
                yield from from_expr(c.lhs)
                yield from from_expr(c.rhs)
            elif isinstance(c, ObjEq):
                yield c.a
                yield c.b


def _validate_schema(dom, op):
    declared = dict(op.params)
    for var, t in op.params:
        if t not in dom.types and not _is_numeric_type(t):
            raise PddlSemanticError("undeclared type", t)

    def check_fluent_ref(ref):
        if ref.name not in dom.functions:
            raise PddlSemanticError("undeclared fluent", ref.name)
        if len(ref.args) != len(dom.functions[ref.name]):
            raise PddlSemanticError("fluent arity mismatch", ref.name)

    for part in (op.precond, op.effects):
        for item in _walk_terms(part):
            if isinstance(item, Lit):
                if item.pred not in dom.predicates:
                    raise PddlSemanticError("undeclared predicate", item.pred)
                if len(item.args) != len(dom.predicates[item.pred]):
                    raise PddlSemanticError("predicate arity mismatch", item.pred)
            elif isinstance(item, FluentRef):
                check_fluent_ref(item)
            elif isinstance(item, str) and item.startswith("?"):
                if item not in declared:
                    raise PddlSemanticError("free variable not in parameters", item)


# ---------------------------------------------------------------------------
# Problem parsing
# ---------------------------------------------------------------------------

def parse_problem(text: str, dom: DomainDef) -> ProblemDef:
    """Parse a problem against ``dom``; checks vocabulary, typing, and goals."""
    exprs = _read_all(text)
    if len(exprs) != 1 or not isinstance(exprs[0], _List):
        raise PddlSyntaxError("expected a single (define ...) form", 1, 1)
    top = exprs[0]
    if len(top) < 2 or _sym(top[0]) != "define":
        _err(top, "expected (define (problem ...) ...)")
    head = top[1]
    if not isinstance(head, _List) or len(head) != 2 or _sym(head[0]) != "problem":
        _err(head, "expected (problem <name>)")
    name = _sym(head[1], "problem name")

    domain_name = None
    objects = {}
    init_atoms = []
    init_fluents = {}
    goals = []

    for section in top[2:]:
        if not isinstance(section, _List) or not section:
            _err(section, "expected a (:section ...) form")
        kind = _sym(section[0])
        if kind == ":domain":
            domain_name = _sym(section[1])
        elif kind == ":objects":
            for oname, t in _parse_typed_names(section[1:]):
                t = t or ROOT_TYPE
                if t not in dom.types:
                    raise PddlSemanticError("undeclared object type", t)
                if oname in objects:
                    raise PddlSemanticError("duplicate object", oname)
                objects[oname] = t
        elif kind == ":init":
            for item in section[1:]:
                if not isinstance(item, _List) or not item:
                    _err(item, "expected init atom or fluent assignment")
                h = _sym(item[0])
                if h == "=":
                    ref = _parse_expr(item[1])
                    if not isinstance(ref, FluentRef):
                        _err(item, "left side of init '=' must be a fluent")
                    val = _parse_expr(item[2])
                    if not isinstance(val, int):
                        _err(item, "init fluent value must be an integer")
                    init_fluents[(ref.name,) + tuple(ref.args)] = val
                else:
                    init_atoms.append(
                        (h,) + tuple(_parse_term(a) for a in item[1:])
                    )
        elif kind == ":goal":
            goals.append(GoalSpec(_parse_condition(section[1]),
                                  label=f"goal{len(goals)}" if goals else "goal"))
        elif kind == ":goals":
            for entry in section[1:]:
                if not isinstance(entry, _List) or len(entry) != 2:
                    _err(entry, "expected (label <formula>) in :goals")
                goals.append(GoalSpec(_parse_condition(entry[1]), _sym(entry[0])))
        else:
            _err(section, f"unsupported section {kind}")

    if domain_name != dom.name:
        raise PddlSemanticError(
            f"problem references domain '{domain_name}', expected", dom.name)
    if not goals:
        raise PddlSemanticError("problem declares no goals")

    prob = ProblemDef(
        name=name,
        domain=dom,
        objects=objects,
        init=State(init_atoms, init_fluents),
        goals=tuple(goals),
    )
    _validate_problem(dom, prob)
    return prob


def _check_ground_args(dom, pred, args, objects):
    ptypes = dom.predicates[pred]
    if len(args) != len(ptypes):
        raise PddlSemanticError("predicate arity mismatch", pred)
    for a, t in zip(args, ptypes):
        if _is_numeric_type(t):
            if not isinstance(a, int):
                raise PddlSemanticError(
                    f"argument of ({pred} ...) must be an integer", str(a))
        else:
            if not isinstance(a, str) or a not in objects:
                raise PddlSemanticError("unknown object", str(a))
            if not is_subtype(dom, objects[a], t):
                raise PddlSemanticError(
                    f"object '{a}' has type '{objects[a]}', expected", t)


def _validate_problem(dom, prob):
    for atom in prob.init.facts:
        pred = atom[0]
        if pred not in dom.predicates:
            raise PddlSemanticError("undeclared predicate in init", pred)
        _check_ground_args(dom, pred, atom[1:], prob.objects)
    declared = set(ground_fluents(dom, prob.objects))
    got = set(prob.init.fluents)
    missing = declared - got
    extra = got - declared
    if missing:
        raise PddlSemanticError(
            "init leaves fluents unset", fluent_to_str(sorted(missing)[0]))
    if extra:
        raise PddlSemanticError(
            "init sets undeclared fluent", fluent_to_str(sorted(extra)[0]))
    for g in prob.goals:
        for item in _walk_terms(g.literals):
            if isinstance(item, str) and item.startswith("?"):
                raise PddlSemanticError("goal must be ground, found variable", item)
            if isinstance(item, Lit):
                if item.pred not in dom.predicates:
                    raise PddlSemanticError("undeclared predicate in goal", item.pred)
            if isinstance(item, FluentRef):
                if item.name not in dom.functions:
                    raise PddlSemanticError("undeclared fluent in goal", item.name)
            if isinstance(item, str) and not item.startswith("?"):
                if item not in prob.objects:
                    raise PddlSemanticError("unknown object in goal", item)
        pos = {(l.pred, l.args) for l in g.literals
               if isinstance(l, Lit) and l.positive}
        neg = {(l.pred, l.args) for l in g.literals
               if isinstance(l, Lit) and not l.positive}
        if pos & neg:
            raise PddlSemanticError("goal contains a literal and its negation",
                                    g.label)


# ---------------------------------------------------------------------------
# Typing helpers and grounding
# ---------------------------------------------------------------------------

def is_subtype(dom, t, ancestor):
    while t is not None:
        if t == ancestor:
            return True
        t = dom.types.get(t)
    return False


def objects_of_type(dom, objects, t):
    """Objects whose declared type is ``t`` or a descendant, sorted."""
    return sorted(o for o, ot in objects.items() if is_subtype(dom, ot, t))


def ground_fluents(dom, objects):
    """All ground fluent keys for the declared functions over ``objects``."""
    out = []
    for fname, ptypes in sorted(dom.functions.items()):
        pools = [objects_of_type(dom, objects, t) for t in ptypes]
        for combo in itertools.product(*pools):
            out.append((fname,) + combo)
    return out


def _typed_tuples(dom, schema, objects):
    """Memoized candidate argument tuples for a schema, lexicographic order."""
    key = (schema.name, tuple(sorted(objects.items())))
    cached = dom._tuple_cache.get(key)
    if cached is None:
        pools = [objects_of_type(dom, objects, t) for _, t in schema.params]
        cached = sorted(itertools.product(*pools))
        dom._tuple_cache[key] = cached
    return cached


def _subst_term(term, binding):
    if isinstance(term, str) and term.startswith("?"):
        return binding[term]
    if isinstance(term, FluentRef):
        return FluentRef(term.name, tuple(_subst_term(a, binding) for a in term.args))
    if isinstance(term, BinOp):
        return BinOp(term.op, _subst_term(term.lhs, binding),
                     _subst_term(term.rhs, binding))
    return term


def _subst_cond(cond, binding):
    out = []
    for c in cond:
        if isinstance(c, Lit):
            out.append(Lit(c.pred, tuple(_subst_term(a, binding) for a in c.args),
                           c.positive))
        elif isinstance(c, Cmp):
            out.append(Cmp(c.op, _subst_term(c.lhs, binding),
                           _subst_term(c.rhs, binding)))
        else:
            out.append(ObjEq(_subst_term(c.a, binding),
                             _subst_term(c.b, binding), c.positive))
    return tuple(out)


def ground_action(dom, schema, args) -> GroundAction:
    """Instantiate ``schema`` with ``args``; cached per domain."""
    key = (schema.name, tuple(args))
    ga = dom._ga_cache.get(key)
    if ga is None:
        binding = {v: a for (v, _), a in zip(schema.params, args)}
        eff = schema.effects
        ga = GroundAction(
            schema.name,
            args,
            _subst_cond(schema.precond, binding),
            Effects(
                adds=tuple(Lit(l.pred, tuple(_subst_term(a, binding) for a in l.args))
                           for l in eff.adds),
                dels=tuple(Lit(l.pred, tuple(_subst_term(a, binding) for a in l.args))
                           for l in eff.dels),
                fluent_ops=tuple(
                    FluentOp(fo.op, _subst_term(fo.ref, binding),
                             _subst_term(fo.expr, binding))
                    for fo in eff.fluent_ops),
            ),
        )
        dom._ga_cache[key] = ga
    return ga


# ---------------------------------------------------------------------------
# Evaluation and transition semantics
# ---------------------------------------------------------------------------

def eval_expr(expr, state):
    if isinstance(expr, int):
        return expr
    if isinstance(expr, FluentRef):
        key = (expr.name,) + tuple(
            eval_expr(a, state) if isinstance(a, (FluentRef, BinOp)) else a
            for a in expr.args)
        try:
            return state.fluents[key]
        except KeyError:
            raise PddlSemanticError("unknown fluent", fluent_to_str(key)) from None
    if isinstance(expr, BinOp):
        l = eval_expr(expr.lhs, state)
        r = eval_expr(expr.rhs, state)
        if expr.op == "+":
            return l + r
        if expr.op == "-":
            return l - r
        return l * r
    raise PddlSemanticError("not a numeric expression", str(expr))


def _eval_atom_args(args, state):
    return tuple(eval_expr(a, state) if isinstance(a, (FluentRef, BinOp)) else a
                 for a in args)


def eval_lit(lit, state):
    atom = (lit.pred,) + _eval_atom_args(lit.args, state)
    return (atom in state.facts) == lit.positive


_CMP_FNS = {
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_cond_item(c, state):
    if isinstance(c, Lit):
        return eval_lit(c, state)
    if isinstance(c, Cmp):
        return _CMP_FNS[c.op](eval_expr(c.lhs, state), eval_expr(c.rhs, state))
    return (c.a == c.b) == c.positive


def holds(cond, state):
    """True iff every item of a ground conjunction holds in ``state``."""
    return all(eval_cond_item(c, state) for c in cond)


def failing_item(cond, state):
    for c in cond:
        if not eval_cond_item(c, state):
            return c
    return None


def satisfies(s: State, g: GoalSpec) -> bool:
    """Goal test: every literal/comparison of ``g`` holds in ``s``."""
    return holds(g.literals, s)


def available_actions(s: State, dom: DomainDef, objs: dict) -> list:
    """Ground actions whose preconditions hold in ``s``.

    Order is deterministic: lexicographic by schema name, then arguments.
    """
    out = []
    for schema in dom.operators:  # already sorted by name
        for args in _typed_tuples(dom, schema, objs):
            ga = ground_action(dom, schema, args)
            if holds(ga.precond, s):
                out.append(ga)
    return out


def reachable_states(init: State, dom: DomainDef, objs: dict, bound=None):
    """Breadth-first enumeration of the reachable state space.

    Raises PddlSemanticError when more than ``bound`` states are found.
    """
    from collections import deque

    seen = {init.key(): init}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        for a in available_actions(s, dom, objs):
            nxt = apply(s, a)
            k = nxt.key()
            if k not in seen:
                if bound is not None and len(seen) >= bound:
                    raise PddlSemanticError(
                        f"state space exceeds bound {bound}")
                seen[k] = nxt
                queue.append(nxt)
    return list(seen.values())


def apply(s: State, a: GroundAction) -> State:
    """Apply ``a`` to ``s``; raises PreconditionError if not applicable."""
    fail = failing_item(a.precond, s)
    if fail is not None:
        raise PreconditionError(str(a), cond_to_str(fail))
    adds = {(l.pred,) + _eval_atom_args(l.args, s) for l in a.effects.adds}
    dels = {(l.pred,) + _eval_atom_args(l.args, s) for l in a.effects.dels}
    overlap = adds & dels
    if overlap:
        raise PddlSemanticError("add and delete lists overlap after grounding",
                                atom_to_str(next(iter(overlap))))
    facts = (s.facts - dels) | adds
    if a.effects.fluent_ops:
        fluents = dict(s.fluents)
        for fo in a.effects.fluent_ops:
            key = (fo.ref.name,) + _eval_atom_args(fo.ref.args, s)
            if key not in fluents:
                raise PddlSemanticError("assignment to unknown fluent",
                                        fluent_to_str(key))
            val = eval_expr(fo.expr, s)  # RHS reads the pre-transition state
            if fo.op == "assign":
                fluents[key] = val
            elif fo.op == "increase":
                fluents[key] += val
            else:
                fluents[key] -= val
    else:
        fluents = s.fluents
    return State(facts, fluents)


# ---------------------------------------------------------------------------
# Pretty printing (round-trips through the parser)
# ---------------------------------------------------------------------------

def atom_to_str(atom):
    return "(" + " ".join(str(a) for a in atom) + ")"


def str_to_atom(s):
    parts = s.strip("() \t").split()
    return tuple(int(p) if _is_int(p) else p for p in parts)


def fluent_to_str(key):
    return atom_to_str(key)


def expr_to_str(e):
    if isinstance(e, int):
        return str(e)
    if isinstance(e, FluentRef):
        return atom_to_str((e.name,) + tuple(
            expr_to_str(a) if isinstance(a, (FluentRef, BinOp)) else str(a)
            for a in e.args))
    return f"({e.op} {expr_to_str(e.lhs)} {expr_to_str(e.rhs)})"


def _term_to_str(t):
    if isinstance(t, (FluentRef, BinOp)):
        return expr_to_str(t)
    return str(t)


def cond_to_str(c):
    if isinstance(c, Lit):
        body = "(" + " ".join([c.pred] + [_term_to_str(a) for a in c.args]) + ")"
        return body if c.positive else f"(not {body})"
    if isinstance(c, Cmp):
        return f"({c.op} {expr_to_str(c.lhs)} {expr_to_str(c.rhs)})"
    body = f"(= {_term_to_str(c.a)} {_term_to_str(c.b)})"
    return body if c.positive else f"(not {body})"


def _conj_to_str(cond):
    if not cond:
        return "(and)"
    if len(cond) == 1:
        return cond_to_str(cond[0])
    return "(and " + " ".join(cond_to_str(c) for c in cond) + ")"


def _effects_to_str(eff):
    parts = [cond_to_str(Lit(l.pred, l.args)) for l in eff.adds]
    parts += [f"(not {cond_to_str(Lit(l.pred, l.args))})" for l in eff.dels]
    parts += [f"({fo.op} {expr_to_str(fo.ref)} {expr_to_str(fo.expr)})"
              for fo in eff.fluent_ops]
    if not parts:
        return "(and)"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def _typed_list_str(pairs):
    return " ".join(f"{n} - {t}" for n, t in pairs)


def domain_to_str(dom: DomainDef) -> str:
    lines = [f"(define (domain {dom.name})"]
    lines.append("  (:requirements :strips :typing :equality"
                 " :negative-preconditions :fluents)")
    user_types = [(t, p) for t, p in dom.types.items() if t != ROOT_TYPE]
    if user_types:
        lines.append("  (:types " + _typed_list_str(user_types) + ")")
    if dom.predicates:
        decls = []
        for pname, ptypes in sorted(dom.predicates.items()):
            ps = " ".join(f"?a{i} - {t}" for i, t in enumerate(ptypes))
            decls.append(f"({pname}{' ' + ps if ps else ''})")
        lines.append("  (:predicates " + " ".join(decls) + ")")
    if dom.functions:
        decls = []
        for fname, ftypes in sorted(dom.functions.items()):
            ps = " ".join(f"?a{i} - {t}" for i, t in enumerate(ftypes))
            decls.append(f"({fname}{' ' + ps if ps else ''})")
        lines.append("  (:functions " + " ".join(decls) + ")")
    for op in dom.operators:
        lines.append(f"  (:action {op.name}")
        lines.append("    :parameters (" + _typed_list_str(op.params) + ")")
        lines.append("    :precondition " + _conj_to_str(op.precond))
        lines.append("    :effect " + _effects_to_str(op.effects) + ")")
    lines.append(")")
    return "\n".join(lines)


def problem_to_str(prob: ProblemDef) -> str:
    lines = [f"(define (problem {prob.name})",
             f"  (:domain {prob.domain_name})"]
    if prob.objects:
        lines.append("  (:objects " + _typed_list_str(sorted(prob.objects.items()))
                     + ")")
    init_parts = [atom_to_str(a) for a in sorted(prob.init.facts, key=atom_to_str)]
    init_parts += [f"(= {fluent_to_str(k)} {v})"
                   for k, v in sorted(prob.init.fluents.items())]
    lines.append("  (:init " + " ".join(init_parts) + ")")
    if len(prob.goals) == 1 and prob.goals[0].label == "goal":
        lines.append("  (:goal " + _conj_to_str(prob.goals[0].literals) + ")")
    else:
        entries = " ".join(f"({g.label} {_conj_to_str(g.literals)})"
                           for g in prob.goals)
        lines.append("  (:goals " + entries + ")")
    lines.append(")")
    return "\n".join(lines)


def parse_action(text: str, dom: DomainDef, objs: dict) -> GroundAction:
    """Parse an action string like ``(stack a b)`` back to a GroundAction."""
    parts = text.strip().strip("()").split()
    if not parts:
        raise PddlSemanticError("empty action string")
    name = parts[0].lower()
    if name == "noop":
        return NOOP
    schema = None
    for op in dom.operators:
        if op.name == name:
            schema = op
            break
    if schema is None:
        raise PddlSemanticError("unknown operator", name)
    args = tuple(p.lower() for p in parts[1:])
    if len(args) != len(schema.params):
        raise PddlSemanticError("wrong argument count for operator", name)
    for a in args:
        if a not in objs:
            raise PddlSemanticError("unknown object", a)
    return ground_action(dom, schema, args)
