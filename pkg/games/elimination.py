"""
迭代剔除非个体理性的策略组合

S_0 是全部策略组合。S_k 保留 S_{k-1} 中那些对每个玩家而言收益都不低于
（只在 S_{k-1} 上计算的）maximin 值的组合。不动点处若只剩一个组合，它就是
完全透明均衡（PTE）。
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from .core import (
    Game,
    PlayerId,
    StrategyProfile,
    check_player,
    check_profile,
    format_profile,
    format_profiles,
    is_symmetric,
    serialize_game,
    validate_game,
)
from .exceptions import NotSymmetricError, TiesViolationError, UsageError

logger = logging.getLogger(__name__)


class Diverged(Enum):
    """在空集上取 maximin 时的标记"""

    DIVERGED = 'diverged'

    def __str__(self):
        return self.value


DIVERGED = Diverged.DIVERGED

Threshold = Union[int, Diverged]


@dataclass(frozen=True)
class LevelSet:
    level: int
    members: FrozenSet[StrategyProfile]
    # 满足阈值但不在上一层中的策略组合
    outside_previous: FrozenSet[StrategyProfile] = field(default_factory=frozenset)

    def __contains__(self, profile) -> bool:
        return tuple(profile) in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MaximinThresholds:
    level: int
    values: Tuple[Threshold, ...]

    @property
    def diverged(self) -> bool:
        return any(value is DIVERGED for value in self.values)


class OutcomeKind(Enum):
    PTE = 'PTE'
    NONE = 'NONE'
    MULTIPLE = 'MULTIPLE'


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    profiles: FrozenSet[StrategyProfile] = field(default_factory=frozenset)

    @property
    def profile(self) -> Optional[StrategyProfile]:
        if self.kind is OutcomeKind.PTE:
            return next(iter(self.profiles))
        return None

    @classmethod
    def from_fixpoint(cls, members: FrozenSet[StrategyProfile]) -> 'Outcome':
        if not members:
            return cls(OutcomeKind.NONE)
        if len(members) == 1:
            return cls(OutcomeKind.PTE, members)
        return cls(OutcomeKind.MULTIPLE, members)

    def describe(self, game: Game) -> str:
        if self.kind is OutcomeKind.PTE:
            return f"PTE {format_profile(game, self.profile)}"
        if self.kind is OutcomeKind.NONE:
            return 'NONE'
        return f"MULTIPLE {format_profiles(game, self.profiles)}"


@dataclass(frozen=True)
class LevelTrace:
    """
    S_0, S_1, ... 直到确认不动点的那一层（或第一个空层）。
    thresholds[k] 是构建 S_k 时用的 maximin 值，thresholds[0] 为 None。
    """

    game: Game
    levels: Tuple[LevelSet, ...]
    thresholds: Tuple[Optional[MaximinThresholds], ...]
    fixpoint_level: int
    outcome: Outcome

    @property
    def fixpoint_set(self) -> FrozenSet[StrategyProfile]:
        return level_set(self, self.fixpoint_level).members

    @property
    def nesting_audit(self) -> List[Tuple[int, FrozenSet[StrategyProfile]]]:
        return [(ls.level, ls.outside_previous) for ls in self.levels if ls.outside_previous]


@dataclass(frozen=True)
class ComparisonReport:
    outcome: Outcome
    pure_nash: FrozenSet[StrategyProfile]
    individually_rational: FrozenSet[StrategyProfile]
    pareto_optimal: FrozenSet[StrategyProfile]
    hofstadter: Optional[StrategyProfile] = None


def survivor_mask(game: Game, members: Iterable[StrategyProfile]) -> np.ndarray:
    mask = np.zeros(game.strategy_counts, dtype=bool)
    for profile in members:
        mask[profile] = True
    return mask


def _members(surviving) -> FrozenSet[StrategyProfile]:
    if isinstance(surviving, LevelSet):
        return surviving.members
    return frozenset(tuple(p) for p in surviving)


def _row_minima(game: Game, mask: np.ndarray, player: PlayerId) -> Tuple[np.ndarray, np.ndarray]:
    """对玩家的每个策略：掩码内组合的最小收益，以及是否存在这样的组合"""
    count = game.strategy_counts[player]
    values = np.moveaxis(game.payoffs[player], player, 0).reshape(count, -1)
    rows = np.moveaxis(mask, player, 0).reshape(count, -1)
    ceiling = np.iinfo(np.int64).max
    return np.where(rows, values, ceiling).min(axis=1), rows.any(axis=1)


def maximin_threshold(game: Game, surviving, player: PlayerId) -> Threshold:
    """
    在 `surviving` 中出现的该玩家策略上，取“使用该策略的幸存组合的最小收益”的最大值

    Args:
        game: 博弈
        surviving: 代表 S_{k-1} 的 LevelSet（或策略组合的可迭代对象）
        player: 玩家下标

    Returns:
        序数阈值；`surviving` 为空时返回 DIVERGED
    """
    check_player(game, player)
    members = _members(surviving)
    if not members:
        return DIVERGED
    minima, present = _row_minima(game, survivor_mask(game, members), player)
    return int(minima[present].max())


def maximin_thresholds(game: Game, previous: LevelSet) -> MaximinThresholds:
    values = tuple(maximin_threshold(game, previous, i) for i in range(game.player_count))
    return MaximinThresholds(level=previous.level + 1, values=values)


def _step(game: Game, previous: LevelSet) -> Tuple[LevelSet, MaximinThresholds]:
    thresholds = maximin_thresholds(game, previous)
    level = previous.level + 1
    if thresholds.diverged:
        return LevelSet(level, frozenset()), thresholds

    bounds = np.array(thresholds.values, dtype=np.int64).reshape((-1,) + (1,) * game.player_count)
    meets = np.all(game.payoffs >= bounds, axis=0)
    members = frozenset(p for p in previous.members if meets[p])
    outside = frozenset(p for p in game.profiles if meets[p] and p not in previous.members)
    if outside:
        logger.warning(
            f"level {level}: profiles {sorted(outside)} meet the thresholds outside S_{level - 1}\n"
            f"{serialize_game(game)}"
        )
    logger.debug(f"level {level}: thresholds={thresholds.values} survivors={len(members)}")
    return LevelSet(level, members, outside), thresholds


def eliminate_step(game: Game, previous: LevelSet) -> LevelSet:
    """由 S_{k-1} 计算 S_k（结果与 S_{k-1} 取交集）"""
    return _step(game, previous)[0]


def initial_level(game: Game) -> LevelSet:
    return LevelSet(0, frozenset(game.profiles))


def compute_trace(game: Game) -> LevelTrace:
    """
    从 S_0 开始反复执行 eliminate_step，直到集合不再变化或变为空集

    不动点层是满足 S_{k+1} = S_k 的最小 k >= 1；出现空层时取第一个空层。
    """
    report = validate_game(game)
    if not report.ok:
        raise TiesViolationError(report)

    levels: List[LevelSet] = [initial_level(game)]
    thresholds: List[Optional[MaximinThresholds]] = [None]
    fixpoint_level = None
    for k in range(1, game.profile_count + 2):
        current, used = _step(game, levels[-1])
        previous = levels[-1]
        levels.append(current)
        thresholds.append(used)
        if not current.members:
            fixpoint_level = k
            break
        if current.members == previous.members:
            fixpoint_level = max(1, k - 1)
            break
    if fixpoint_level is None:
        # 严格缩小最多持续 |Σ| 轮
        raise AssertionError(f"elimination did not settle within {game.profile_count} rounds")

    final = levels[min(fixpoint_level, len(levels) - 1)].members
    outcome = Outcome.from_fixpoint(final)
    if outcome.kind is OutcomeKind.MULTIPLE:
        logger.warning(
            f"several profiles survive at the fixpoint: {sorted(final)}\n{serialize_game(game)}"
        )
    return LevelTrace(
        game=game,
        levels=tuple(levels),
        thresholds=tuple(thresholds),
        fixpoint_level=fixpoint_level,
        outcome=outcome,
    )


def level_set(trace: LevelTrace, k: int) -> LevelSet:
    """任意 k >= 0 的 S_k；超出 trace 的层重复最后一层"""
    if k < 0:
        raise UsageError(f"level {k} is negative")
    if k < len(trace.levels):
        return trace.levels[k]
    return LevelSet(k, trace.levels[-1].members)


def compute_pte(game: Game) -> Outcome:
    return compute_trace(game).outcome


def is_level_k_ir(game: Game, profile, k: int, trace: Optional[LevelTrace] = None) -> bool:
    profile = check_profile(game, profile)
    if k < 0:
        raise UsageError(f"level {k} is negative")
    if k == 0:
        return True
    trace = trace or compute_trace(game)
    return profile in level_set(trace, k).members


def pure_nash(game: Game) -> FrozenSet[StrategyProfile]:
    """任何玩家单方面改变策略都无法获益的策略组合"""
    stable = np.ones(game.strategy_counts, dtype=bool)
    for i in range(game.player_count):
        best = game.payoffs[i].max(axis=i, keepdims=True)
        stable &= game.payoffs[i] == best
    return frozenset(p for p in game.profiles if stable[p])


def is_pareto_optimal(game: Game, profile) -> bool:
    profile = check_profile(game, profile)
    flat = game.payoffs.reshape(game.player_count, -1)
    here = game.payoffs[(slice(None),) + profile].reshape(-1, 1)
    diff = flat - here
    dominated = np.all(diff >= 0, axis=0) & np.any(diff > 0, axis=0)
    return not bool(dominated.any())


def pareto_optimal_set(game: Game) -> FrozenSet[StrategyProfile]:
    return frozenset(p for p in game.profiles if is_pareto_optimal(game, p))


def classic_individually_rational(game: Game) -> FrozenSet[StrategyProfile]:
    """在整个 Σ 上弱帕累托占优于普通 maximin 值向量的策略组合"""
    everything = np.ones(game.strategy_counts, dtype=bool)
    bounds = []
    for i in range(game.player_count):
        minima, _ = _row_minima(game, everything, i)
        bounds.append(int(minima.max()))
    bounds = np.array(bounds, dtype=np.int64).reshape((-1,) + (1,) * game.player_count)
    meets = np.all(game.payoffs >= bounds, axis=0)
    return frozenset(p for p in game.profiles if meets[p])


def hofstadter_profile(game: Game) -> StrategyProfile:
    """对称两人博弈中使 u1(s, s) 最大的对角组合 (s, s)"""
    if not is_symmetric(game):
        raise NotSymmetricError("Hofstadter profile needs a symmetric two-player game")
    report = validate_game(game)
    if not report.ok:
        raise TiesViolationError(report)
    best = int(np.argmax(np.diagonal(game.payoffs[0])))
    return (best, best)


def compare(game: Game) -> ComparisonReport:
    trace = compute_trace(game)
    return ComparisonReport(
        outcome=trace.outcome,
        pure_nash=pure_nash(game),
        individually_rational=level_set(trace, 1).members,
        pareto_optimal=pareto_optimal_set(game),
        hofstadter=hofstadter_profile(game) if is_symmetric(game) else None,
    )


def _threshold_text(thresholds: Optional[MaximinThresholds]) -> str:
    if thresholds is None:
        return '-'
    return '(' + ','.join(str(value) for value in thresholds.values) + ')'


def format_trace(trace: LevelTrace) -> str:
    """每层一行，最后一行是结果"""
    game = trace.game
    lines = [
        f"{ls.level} | thresholds={_threshold_text(th)} | survivors={format_profiles(game, ls.members)}"
        for ls, th in zip(trace.levels, trace.thresholds)
    ]
    outcome = trace.outcome
    if outcome.kind is OutcomeKind.PTE:
        lines.append(f"outcome=PTE {format_profile(game, outcome.profile)}")
    elif outcome.kind is OutcomeKind.NONE:
        lines.append('outcome=NONE')
    else:
        lines.append(f"outcome=MULTIPLE {format_profiles(game, outcome.profiles)}")
    return '\n'.join(lines) + '\n'


def outcome_to_dict(game: Game, outcome: Outcome) -> Dict:
    return {
        'kind': outcome.kind.value,
        'profiles': [format_profile(game, p) for p in sorted(outcome.profiles)],
    }


def trace_to_dict(trace: LevelTrace) -> Dict:
    game = trace.game
    return {
        'levels': [
            {
                'level': ls.level,
                'thresholds': None if th is None else [
                    None if value is DIVERGED else value for value in th.values
                ],
                'survivors': [format_profile(game, p) for p in sorted(ls.members)],
            }
            for ls, th in zip(trace.levels, trace.thresholds)
        ],
        'fixpoint_level': trace.fixpoint_level,
        'outcome': outcome_to_dict(game, trace.outcome),
    }
