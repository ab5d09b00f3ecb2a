"""
严格序数偏好（无平局）的有限标准型博弈

博弈保存为形状 ``(player_count, *strategy_counts)`` 的整数收益张量，
``payoffs[i][profile]`` 是玩家 i 在 ``profile`` 处的序数收益。策略组合是
每个玩家一个策略下标的元组，所有语义运算都基于下标，标签只用于显示。
"""

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from .exceptions import GameError, GameFormatError, UsageError

logger = logging.getLogger(__name__)

PlayerId = int
StrategyProfile = Tuple[int, ...]

_INT64 = np.iinfo(np.int64)


@dataclass(frozen=True, eq=False)
class Game:
    """不可变的标准型博弈"""

    payoffs: np.ndarray
    players: Tuple[str, ...]
    strategies: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        tensor = np.array(self.payoffs, dtype=np.int64, copy=True)
        tensor.setflags(write=False)
        object.__setattr__(self, 'payoffs', tensor)

        if not self.players:
            raise GameFormatError("a game needs at least one player")
        if len(self.strategies) != len(self.players):
            raise GameFormatError(
                f"{len(self.players)} players but {len(self.strategies)} strategy lists"
            )
        expected = (len(self.players),) + tuple(len(labels) for labels in self.strategies)
        if any(len(labels) == 0 for labels in self.strategies):
            raise GameFormatError("every player needs at least one strategy")
        if tensor.shape != expected:
            raise GameFormatError(f"payoff tensor has shape {tensor.shape}, expected {expected}")

    @property
    def player_count(self) -> int:
        return len(self.players)

    @property
    def strategy_counts(self) -> Tuple[int, ...]:
        return tuple(len(labels) for labels in self.strategies)

    @property
    def profile_count(self) -> int:
        return int(np.prod(self.strategy_counts))

    @cached_property
    def profiles(self) -> Tuple[StrategyProfile, ...]:
        return tuple(itertools.product(*(range(count) for count in self.strategy_counts)))

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.players == other.players
            and self.strategies == other.strategies
            and np.array_equal(self.payoffs, other.payoffs)
        )

    def __hash__(self):
        return hash((self.players, self.strategies, self.payoffs.tobytes()))

    def __repr__(self):
        shape = 'x'.join(str(count) for count in self.strategy_counts)
        return f"<Game {shape} players={list(self.players)}>"


@dataclass(frozen=True)
class Violation:
    """同一玩家在多个策略组合处取到的相同收益"""

    kind: str
    player: PlayerId
    value: int
    profiles: Tuple[StrategyProfile, ...]


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return 'ok'
        parts = [
            f"player {v.player} repeats {v.value} at {', '.join(map(str, v.profiles))}"
            for v in self.violations
        ]
        return '; '.join(parts)


def build_game(
    payoffs,
    players: Optional[Sequence[str]] = None,
    strategies: Optional[Sequence[Sequence[str]]] = None,
) -> Game:
    """
    由收益张量构建博弈，缺省的标签自动补齐

    Args:
        payoffs: 形状为 (player_count, *strategy_counts) 的数组
        players: 玩家标签，默认 P1, P2, ...
        strategies: 每个玩家的策略标签，默认 S1, S2, ...

    Returns:
        Game
    """
    try:
        tensor = np.asarray(payoffs, dtype=np.int64)
    except (OverflowError, TypeError, ValueError) as e:
        raise GameFormatError(f"payoffs are not a 64-bit integer tensor: {e}") from None
    if tensor.ndim < 2:
        raise GameFormatError("payoff tensor needs a player axis and one axis per player")
    player_count = tensor.shape[0]
    if players is None:
        players = [f"P{i + 1}" for i in range(player_count)]
    if strategies is None:
        strategies = [[f"S{j + 1}" for j in range(count)] for count in tensor.shape[1:]]
    return Game(
        payoffs=tensor,
        players=tuple(players),
        strategies=tuple(tuple(labels) for labels in strategies),
    )


def validate_game(game: Game) -> ValidationReport:
    """找出每个玩家在多个策略组合处重复取到的收益值"""
    violations: List[Violation] = []
    for player in range(game.player_count):
        by_value: Dict[int, List[StrategyProfile]] = {}
        for profile in game.profiles:
            by_value.setdefault(int(game.payoffs[player][profile]), []).append(profile)
        for value in sorted(by_value):
            if len(by_value[value]) > 1:
                violations.append(Violation(
                    kind='duplicate_payoff',
                    player=player,
                    value=value,
                    profiles=tuple(by_value[value]),
                ))
    return ValidationReport(violations=tuple(violations))


def check_profile(game: Game, profile: Sequence[int]) -> StrategyProfile:
    profile = tuple(int(choice) for choice in profile)
    if len(profile) != game.player_count:
        raise UsageError(f"profile {profile} has {len(profile)} choices for {game.player_count} players")
    for player, (choice, count) in enumerate(zip(profile, game.strategy_counts)):
        if not 0 <= choice < count:
            raise UsageError(f"strategy {choice} out of range for player {player}")
    return profile


def check_player(game: Game, player: PlayerId) -> PlayerId:
    if not 0 <= player < game.player_count:
        raise UsageError(f"player {player} out of range")
    return player


def payoff(game: Game, profile: Sequence[int], player: PlayerId) -> int:
    profile = check_profile(game, profile)
    check_player(game, player)
    return int(game.payoffs[player][profile])


def enumerate_profiles(game: Game) -> List[StrategyProfile]:
    """按 (玩家 0 的策略, 玩家 1 的策略, ...) 字典序列出全部策略组合"""
    return list(game.profiles)


def _check_seed(seed: int):
    if seed < 0:
        raise GameError(f"seed must be non-negative, got {seed}")


def generate_random_game(seed: int, strategy_counts: Sequence[int]) -> Game:
    """
    随机无平局博弈：每个玩家的收益是 0..|Σ|-1 的一个随机排列（由 seed 决定），
    按枚举顺序铺到各策略组合上
    """
    counts = tuple(int(count) for count in strategy_counts)
    if not counts or any(count < 1 for count in counts):
        raise GameError(f"invalid strategy counts {list(counts)}")
    _check_seed(seed)
    rng = np.random.default_rng(seed)
    total = int(np.prod(counts))
    payoffs = np.stack([rng.permutation(total).reshape(counts) for _ in counts])
    return build_game(payoffs)


def generate_random_symmetric_game(seed: int, n_strategies: int) -> Game:
    """随机对称两人博弈，u2(a, b) = u1(b, a)"""
    if n_strategies < 1:
        raise GameError(f"invalid strategy count {n_strategies}")
    _check_seed(seed)
    rng = np.random.default_rng(seed)
    retries = getattr(settings, 'PTE_SYMMETRIC_RETRIES', 100)
    labels = [f"S{j + 1}" for j in range(n_strategies)]
    for _ in range(retries):
        row = rng.permutation(n_strategies * n_strategies).reshape(n_strategies, n_strategies)
        game = build_game(np.stack([row, row.T]), strategies=[labels, labels])
        if validate_game(game).ok:
            return game
    raise GameError(f"no symmetric no-ties game found for seed {seed} after {retries} draws")


def is_symmetric(game: Game) -> bool:
    if game.player_count != 2:
        return False
    first, second = game.strategy_counts
    return first == second and np.array_equal(game.payoffs[1], game.payoffs[0].T)


def parse_shape(text: str) -> Tuple[int, ...]:
    """'3x3' -> (3, 3)"""
    try:
        counts = tuple(int(part) for part in text.lower().split('x'))
    except ValueError:
        raise GameError(f"invalid shape {text!r}, expected e.g. 2x3") from None
    if any(count < 1 for count in counts):
        raise GameError(f"invalid shape {text!r}")
    return counts


def _string_list(value, what: str) -> List[str]:
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise GameFormatError(f"{what} must be an array of strings")
    return value


def parse_game(text: str) -> Game:
    """
    解析 JSON 格式的博弈

    Args:
        text: 包含 "players"、"strategies" 和 "payoffs" 的 JSON 对象

    Returns:
        Game（存在平局不会导致解析失败，见 load_game）
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFormatError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None

    if not isinstance(data, dict):
        raise GameFormatError("game file must contain a JSON object")
    for key in ('players', 'strategies', 'payoffs'):
        if key not in data:
            raise GameFormatError(f"missing key {key!r}")

    players = _string_list(data['players'], 'players')
    if not players:
        raise GameFormatError("players list is empty")

    strategies = data['strategies']
    if not isinstance(strategies, list) or len(strategies) != len(players):
        raise GameFormatError(f"strategies must hold one array per player ({len(players)})")
    strategies = [_string_list(labels, f"strategies of {players[i]}") for i, labels in enumerate(strategies)]
    for i, labels in enumerate(strategies):
        if not labels:
            raise GameFormatError(f"player {players[i]} has no strategies")

    counts = tuple(len(labels) for labels in strategies)
    total = int(np.prod(counts))
    payoffs = data['payoffs']
    if not isinstance(payoffs, list) or len(payoffs) != len(players):
        raise GameFormatError(f"payoffs must hold one array per player ({len(players)})")
    rows = []
    for i, row in enumerate(payoffs):
        if not isinstance(row, list):
            raise GameFormatError(f"payoffs of {players[i]} must be an array")
        if len(row) != total:
            raise GameFormatError(
                f"payoffs of {players[i]} have {len(row)} entries, expected {total} for shape "
                + 'x'.join(map(str, counts))
            )
        for value in row:
            if isinstance(value, bool) or not isinstance(value, int):
                raise GameFormatError(f"payoff {value!r} of {players[i]} is not an integer")
            if not _INT64.min <= value <= _INT64.max:
                raise GameFormatError(f"payoff {value} of {players[i]} does not fit in 64 bits")
        rows.append(np.array(row, dtype=np.int64).reshape(counts))

    return build_game(np.stack(rows), players=players, strategies=strategies)


def load_game(text: str) -> Tuple[Game, ValidationReport]:
    """解析博弈并附带无平局校验结果"""
    game = parse_game(text)
    report = validate_game(game)
    if not report.ok:
        logger.warning(f"loaded game violates no-ties: {report.summary()}")
    return game, report


def serialize_game(game: Game) -> str:
    data = {
        'players': list(game.players),
        'strategies': [list(labels) for labels in game.strategies],
        'payoffs': [game.payoffs[i].ravel().tolist() for i in range(game.player_count)],
    }
    return json.dumps(data, indent=2) + '\n'


def game_digest(game: Game) -> str:
    length = getattr(settings, 'PTE_DIGEST_LENGTH', 12)
    return hashlib.sha1(serialize_game(game).encode('utf-8')).hexdigest()[:length]


def format_profile(game: Game, profile: Sequence[int]) -> str:
    """(1, 0) -> '(B,X)'"""
    return '(' + ','.join(game.strategies[i][s] for i, s in enumerate(profile)) + ')'


def format_profiles(game: Game, profiles: Iterable[Sequence[int]]) -> str:
    return '{' + ', '.join(format_profile(game, p) for p in sorted(profiles)) + '}'
