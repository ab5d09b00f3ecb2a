"""
博弈上的模态公式：抽象语法、解析与打印

Grammar (keywords are case-insensitive)::

    formula := imp ('<->' imp)*
    imp     := or ('->' imp)?
    or      := and ('|' and)*
    and     := unary ('&' unary)*
    unary   := '!' unary | 'box' unary | 'dia' unary | 'dia_c' unary | primary
    primary := '(' formula ')' | 'true' | 'false' | 'RAT' | 'KS'
             | 'omn' '(' <k> ')' | 'play' '(' <label>, ... ')'
             | 'play_<n>' '(' <label> ')'

play_<n> 中的玩家从 1 开始编号。策略标签按博弈解析；没有匹配的标签时，
裸整数按策略下标处理。不是标识符形式的标签要用双引号括起来
（play_1("go left")）；含双引号的标签只能写成下标，打印时也会退回下标。
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from games.core import Game, StrategyProfile
from games.exceptions import FormulaSyntaxError


class Op(Enum):
    TRUE = 'true'
    RAT = 'RAT'
    KSIGMA = 'KS'
    OMN = 'omn'
    PLAY = 'play'
    PLAY_I = 'play_i'
    NOT = '!'
    AND = '&'
    OR = '|'
    IMPLIES = '->'
    IFF = '<->'
    BOX = 'box'
    DIAMOND = 'dia'
    DIAMOND_C = 'dia_c'


ATOMS = {Op.TRUE, Op.RAT, Op.KSIGMA, Op.OMN, Op.PLAY, Op.PLAY_I}
MODALITIES = {Op.BOX, Op.DIAMOND, Op.DIAMOND_C}
BINARY = {Op.AND, Op.OR, Op.IMPLIES, Op.IFF}


@dataclass(frozen=True)
class Formula:
    op: Op
    args: Tuple['Formula', ...] = ()
    level: Optional[int] = None
    profile: Optional[StrategyProfile] = None
    player: Optional[int] = None
    strategy: Optional[int] = None

    def __post_init__(self):
        if self.op is Op.OMN and (self.level is None or self.level < 1):
            raise ValueError(f"omn level must be >= 1, got {self.level}")

    def __str__(self):
        return format_formula(self)


TRUE = Formula(Op.TRUE)
RAT = Formula(Op.RAT)
KSIGMA = Formula(Op.KSIGMA)


def omn(k: int) -> Formula:
    return Formula(Op.OMN, level=k)


def play(profile) -> Formula:
    return Formula(Op.PLAY, profile=tuple(profile))


def play_i(player: int, strategy: int) -> Formula:
    return Formula(Op.PLAY_I, player=player, strategy=strategy)


def neg(a: Formula) -> Formula:
    return Formula(Op.NOT, (a,))


def conj(*parts: Formula) -> Formula:
    result = parts[0]
    for part in parts[1:]:
        result = Formula(Op.AND, (result, part))
    return result


def disj(a: Formula, b: Formula) -> Formula:
    return Formula(Op.OR, (a, b))


def implies(a: Formula, b: Formula) -> Formula:
    return Formula(Op.IMPLIES, (a, b))


def iff(a: Formula, b: Formula) -> Formula:
    return Formula(Op.IFF, (a, b))


def box(a: Formula) -> Formula:
    return Formula(Op.BOX, (a,))


def dia(a: Formula) -> Formula:
    return Formula(Op.DIAMOND, (a,))


def dia_c(a: Formula) -> Formula:
    return Formula(Op.DIAMOND_C, (a,))


def expand_derived(formula: Formula) -> Formula:
    """把最外层的 OR / IMPLIES / IFF 改写为 NOT 和 AND"""
    if formula.op is Op.OR:
        a, b = formula.args
        return neg(conj(neg(a), neg(b)))
    if formula.op is Op.IMPLIES:
        a, b = formula.args
        return disj(neg(a), b)
    if formula.op is Op.IFF:
        a, b = formula.args
        return conj(implies(a, b), implies(b, a))
    return formula


# --- 解析 ---------------------------------------------------------------

_TOKEN_RE = re.compile(r'\s*(?:(<->|->|[&|!(),])|([A-Za-z_][A-Za-z0-9_]*)|(\d+)|"([^"]*)")')
_BARE_LABEL_RE = re.compile(r'[A-Za-z_][A-Za-z0-9_]*|\d+')
_PLAY_I_RE = re.compile(r'^play_(\d+)$', re.IGNORECASE)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'op', 'name', 'number', 'label', 'end'
    text: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == '':
            break
        match = _TOKEN_RE.match(text, position)
        if match is None:
            start = len(text) - len(text[position:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        op, name, number, quoted = match.groups()
        start = match.start(match.lastindex)
        if op is not None:
            tokens.append(_Token('op', op, start))
        elif name is not None:
            tokens.append(_Token('name', name, start))
        elif number is not None:
            tokens.append(_Token('number', number, start))
        else:
            tokens.append(_Token('label', quoted, start - 1))
        position = match.end()
    tokens.append(_Token('end', '', len(text)))
    return tokens


def resolve_strategy(game: Optional[Game], player: int, text: str, position: int) -> int:
    if game is not None:
        if not 0 <= player < game.player_count:
            raise FormulaSyntaxError(f"unknown player {player + 1}", position)
        labels = game.strategies[player]
        if text in labels:
            return labels.index(text)
    if text.isdigit():
        index = int(text)
        if game is None or index < game.strategy_counts[player]:
            return index
    raise FormulaSyntaxError(f"unknown strategy {text!r} for player {player + 1}", position)


class _Parser:
    def __init__(self, text: str, game: Optional[Game]):
        self.tokens = _tokenize(text)
        self.index = 0
        self.game = game

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.current
        if token.kind != 'end':
            self.index += 1
        return token

    def accept(self, text: str) -> bool:
        if self.current.kind == 'op' and self.current.text == text:
            self.advance()
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            found = self.current.text or 'end of input'
            raise FormulaSyntaxError(f"expected {text!r}, found {found!r}", self.current.position)

    def parse(self) -> Formula:
        formula = self.formula()
        if self.current.kind != 'end':
            raise FormulaSyntaxError(f"unexpected {self.current.text!r}", self.current.position)
        return formula

    def formula(self) -> Formula:
        result = self.implication()
        while self.accept('<->'):
            result = iff(result, self.implication())
        return result

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.accept('->'):
            return implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        result = self.conjunction()
        while self.accept('|'):
            result = disj(result, self.conjunction())
        return result

    def conjunction(self) -> Formula:
        result = self.unary()
        while self.accept('&'):
            result = conj(result, self.unary())
        return result

    def unary(self) -> Formula:
        if self.accept('!'):
            return neg(self.unary())
        token = self.current
        if token.kind == 'name':
            keyword = token.text.lower()
            if keyword in ('box', 'dia', 'dia_c'):
                self.advance()
                operand = self.unary()
                return {'box': box, 'dia': dia, 'dia_c': dia_c}[keyword](operand)
        return self.primary()

    def primary(self) -> Formula:
        token = self.current
        if self.accept('('):
            inner = self.formula()
            self.expect(')')
            return inner
        if token.kind != 'name':
            found = token.text or 'end of input'
            raise FormulaSyntaxError(f"expected a formula, found {found!r}", token.position)

        self.advance()
        keyword = token.text.lower()
        if keyword == 'true':
            return TRUE
        if keyword == 'false':
            return neg(TRUE)
        if keyword == 'rat':
            return RAT
        if keyword == 'ks':
            return KSIGMA
        if keyword == 'omn':
            self.expect('(')
            number = self.advance()
            if number.kind != 'number' or int(number.text) < 1:
                raise FormulaSyntaxError("omn needs a level k >= 1", number.position)
            self.expect(')')
            return omn(int(number.text))
        if keyword == 'play':
            self.expect('(')
            labels = [self.label()]
            while self.accept(','):
                labels.append(self.label())
            self.expect(')')
            if self.game is not None and len(labels) != self.game.player_count:
                raise FormulaSyntaxError(
                    f"play needs {self.game.player_count} strategies, got {len(labels)}", token.position
                )
            return play(resolve_strategy(self.game, i, text, pos) for i, (text, pos) in enumerate(labels))
        match = _PLAY_I_RE.match(token.text)
        if match:
            player = int(match.group(1)) - 1
            if player < 0:
                raise FormulaSyntaxError("players are numbered from 1", token.position)
            self.expect('(')
            text, pos = self.label()
            self.expect(')')
            return play_i(player, resolve_strategy(self.game, player, text, pos))
        raise FormulaSyntaxError(f"unknown name {token.text!r}", token.position)

    def label(self) -> Tuple[str, int]:
        token = self.advance()
        if token.kind not in ('name', 'number', 'label'):
            raise FormulaSyntaxError("expected a strategy label", token.position)
        return token.text, token.position


def parse_formula(text: str, game: Optional[Game] = None) -> Formula:
    return _Parser(text, game).parse()


_WORLD_RE = re.compile(r'^\s*\((?P<labels>[^)]*)\)\s*@\s*(?P<level>\d+)\s*$')


def parse_world(text: str, game: Game):
    """'(B,X)@2' -> World((1, 0), 2)"""
    from .structure import World

    match = _WORLD_RE.match(text)
    if match is None:
        raise FormulaSyntaxError("expected a world literal like (A,X)@2", 0)
    offset = match.start('labels')
    labels = match.group('labels').split(',')
    if len(labels) != game.player_count:
        raise FormulaSyntaxError(f"world needs {game.player_count} strategies, got {len(labels)}", offset)
    profile = []
    for player, label in enumerate(labels):
        profile.append(resolve_strategy(game, player, label.strip(), offset))
        offset += len(label) + 1
    return World(tuple(profile), int(match.group('level')))


# --- 打印 ---------------------------------------------------------------

_PRECEDENCE = {Op.IFF: 1, Op.IMPLIES: 2, Op.OR: 3, Op.AND: 4}
_UNARY_PRECEDENCE = 5
_ATOM_PRECEDENCE = 6


def _precedence(formula: Formula) -> int:
    if formula.op in _PRECEDENCE:
        return _PRECEDENCE[formula.op]
    if formula.op in ATOMS:
        return _ATOM_PRECEDENCE
    return _UNARY_PRECEDENCE


def _label(game: Optional[Game], player: int, strategy: int) -> str:
    if game is None:
        return str(strategy)
    label = game.strategies[player][strategy]
    if _BARE_LABEL_RE.fullmatch(label):
        return label
    if '"' in label:
        return str(strategy)
    return f'"{label}"'


def format_formula(formula: Formula, game: Optional[Game] = None) -> str:
    """用最少的括号打印，且能解析回同一棵语法树"""
    op = formula.op
    if op is Op.TRUE:
        return 'true'
    if op is Op.RAT:
        return 'RAT'
    if op is Op.KSIGMA:
        return 'KS'
    if op is Op.OMN:
        return f"omn({formula.level})"
    if op is Op.PLAY:
        return 'play(' + ','.join(_label(game, i, s) for i, s in enumerate(formula.profile)) + ')'
    if op is Op.PLAY_I:
        return f"play_{formula.player + 1}({_label(game, formula.player, formula.strategy)})"
    if op in MODALITIES:
        return f"{op.value}({format_formula(formula.args[0], game)})"
    if op is Op.NOT:
        inner = formula.args[0]
        text = format_formula(inner, game)
        return '!' + (text if _precedence(inner) >= _UNARY_PRECEDENCE else f"({text})")

    mine = _PRECEDENCE[op]
    left, right = formula.args
    if op is Op.IMPLIES:
        # 右结合
        left_ok, right_ok = _precedence(left) > mine, _precedence(right) >= mine
    else:
        left_ok, right_ok = _precedence(left) >= mine, _precedence(right) > mine
    left_text = format_formula(left, game)
    right_text = format_formula(right, game)
    if not left_ok:
        left_text = f"({left_text})"
    if not right_ok:
        right_text = f"({right_text})"
    return f"{left_text} {op.value} {right_text}"
