"""
无平局博弈的规范 Kripke 结构

世界是网格 Σ × {0..max_level} 上的 (profile, level) 对。当且仅当层级至少
为 1 且策略组合在该层是 k 层个体理性的，世界才是逻辑可能的（属于 Λ）；
若层级还至少为 2，则它是正常世界（属于 Ξ）。第 0 层的世界都逻辑不可能。
认知可达关系是相等关系，逻辑可达关系为 w L w' 当且仅当 w' ∈ Λ 或 w ∉ Ξ，
最近状态函数 f 在低一层中为偏离的玩家选取最坏情形。
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from django.conf import settings

from games.core import Game, PlayerId, StrategyProfile, check_player, format_profile
from games.elimination import LevelTrace, compute_trace, level_set
from games.exceptions import GameError, UsageError

logger = logging.getLogger(__name__)

AUTO = 'auto'


@dataclass(frozen=True, order=True)
class World:
    profile: StrategyProfile
    level: int


class WorldClass(Enum):
    IMPOSSIBLE = 'IMPOSSIBLE'
    NONNORMAL_POSSIBLE = 'NONNORMAL_POSSIBLE'
    NORMAL = 'NORMAL'


@dataclass(frozen=True)
class ImpossibleValuation:
    """逻辑不可能世界上手工指定的原子取值"""

    played: StrategyProfile
    omn_level: int
    rat: bool = True
    ksigma: bool = True

    def play(self, profile: StrategyProfile) -> bool:
        return self.played == profile

    def play_i(self, player: PlayerId, strategy: int) -> bool:
        return self.played[player] == strategy

    def omn(self, k: int) -> bool:
        return self.omn_level == k


ClosestKey = Tuple[World, PlayerId, int]


@dataclass(frozen=True)
class CanonicalStructure:
    game: Game
    max_level: int
    trace: LevelTrace
    classes: Mapping[World, WorldClass]
    closest: Mapping[ClosestKey, World]
    valuation: Mapping[World, ImpossibleValuation]
    # 相等关系之外额外的 K_i 对；规范结构中为空
    epistemic_links: FrozenSet[Tuple[World, World]] = field(default_factory=frozenset)

    @cached_property
    def worlds(self) -> Tuple[World, ...]:
        return tuple(sorted(self.classes, key=lambda w: (w.level, w.profile)))

    @cached_property
    def possible_worlds(self) -> Tuple[World, ...]:
        return tuple(w for w in self.worlds if self.classes[w] is not WorldClass.IMPOSSIBLE)

    @cached_property
    def normal_worlds(self) -> Tuple[World, ...]:
        return tuple(w for w in self.worlds if self.classes[w] is WorldClass.NORMAL)

    @cached_property
    def _possible_set(self) -> FrozenSet[World]:
        return frozenset(self.possible_worlds)

    @cached_property
    def _normal_set(self) -> FrozenSet[World]:
        return frozenset(self.normal_worlds)

    def reaches(self, w: World, w2: World) -> bool:
        """不做参数检查的逻辑可达判断（所有玩家的 L_i 相同）"""
        return w2 in self._possible_set or w not in self._normal_set

    @cached_property
    def _by_profile(self) -> Dict[StrategyProfile, Tuple[World, ...]]:
        grouped: Dict[StrategyProfile, List[World]] = {}
        for w in self.worlds:
            grouped.setdefault(w.profile, []).append(w)
        return {profile: tuple(ws) for profile, ws in grouped.items()}

    def worlds_with_profile(self, profile: StrategyProfile) -> Tuple[World, ...]:
        return self._by_profile.get(tuple(profile), ())

    def __contains__(self, w) -> bool:
        return w in self.classes

    def class_of(self, w: World) -> WorldClass:
        try:
            return self.classes[w]
        except KeyError:
            raise UsageError(f"world {w} is outside the structure (max level {self.max_level})") from None

    def is_possible(self, w: World) -> bool:
        return self.class_of(w) is not WorldClass.IMPOSSIBLE

    def is_normal(self, w: World) -> bool:
        return self.class_of(w) is WorldClass.NORMAL

    def epistemic_successors(self, w: World) -> Tuple[World, ...]:
        linked = sorted(b for a, b in self.epistemic_links if a == w and b != w)
        return (w,) + tuple(linked)

    def describe(self, w: World) -> str:
        return f"{format_profile(self.game, w.profile)}@{w.level}"


def level_of(w: World) -> int:
    return w.level


def profile_of(w: World) -> StrategyProfile:
    return w.profile


def _with_choice(profile: StrategyProfile, player: PlayerId, strategy: int) -> StrategyProfile:
    return profile[:player] + (strategy,) + profile[player + 1:]


def _closest(game: Game, trace: LevelTrace, w: World, player: PlayerId, strategy: int) -> World:
    """按最坏情形最近状态定义，返回第一个匹配的分支"""
    if w.level == 0:
        return World(_with_choice(w.profile, player, strategy), 0)
    if w.profile[player] == strategy:
        return w

    below = level_set(trace, w.level - 1).members
    candidates = [p for p in below if p[player] == strategy]
    if not candidates:
        return World(_with_choice(w.profile, player, strategy), w.level - 1)

    utilities = [int(game.payoffs[player][p]) for p in candidates]
    worst = min(utilities)
    if utilities.count(worst) > 1:
        logger.error(f"closest state of {w} for player {player} -> {strategy} is not unique")
        raise GameError(f"argmin over S_{w.level - 1} is not unique; the game has ties")
    return World(candidates[utilities.index(worst)], w.level - 1)


def _world_class(trace: LevelTrace, profile: StrategyProfile, level: int) -> WorldClass:
    if level == 0 or profile not in level_set(trace, level).members:
        return WorldClass.IMPOSSIBLE
    if level == 1:
        return WorldClass.NONNORMAL_POSSIBLE
    return WorldClass.NORMAL


def build_canonical(
    game: Game,
    max_level: Union[int, str] = AUTO,
    trace: Optional[LevelTrace] = None,
) -> CanonicalStructure:
    """
    构建博弈的规范结构

    Args:
        game: 合法的无平局博弈
        max_level: 保留的最高层级；AUTO 表示不动点层加 PTE_AUTO_LEVEL_MARGIN
        trace: 预先计算好的 `game` 淘汰过程

    Returns:
        已列表化最近状态函数的 CanonicalStructure
    """
    trace = trace or compute_trace(game)
    if max_level == AUTO:
        max_level = trace.fixpoint_level + getattr(settings, 'PTE_AUTO_LEVEL_MARGIN', 2)
    if not isinstance(max_level, int) or max_level < 0:
        raise UsageError(f"invalid max level {max_level!r}")

    classes = {
        World(profile, level): _world_class(trace, profile, level)
        for level in range(max_level + 1)
        for profile in game.profiles
    }
    closest = {
        (w, player, strategy): _closest(game, trace, w, player, strategy)
        for w in classes
        for player in range(game.player_count)
        for strategy in range(game.strategy_counts[player])
    }
    valuation = {
        w: ImpossibleValuation(played=w.profile, omn_level=w.level)
        for w, world_class in classes.items()
        if world_class is WorldClass.IMPOSSIBLE
    }
    logger.debug(f"canonical structure: {len(classes)} worlds up to level {max_level}")
    return CanonicalStructure(
        game=game,
        max_level=max_level,
        trace=trace,
        classes=MappingProxyType(classes),
        closest=MappingProxyType(closest),
        valuation=MappingProxyType(valuation),
    )


def logically_accessible(structure: CanonicalStructure, w: World, w2: World, agent: PlayerId) -> bool:
    """w L_i w' 当且仅当 w' ∈ Λ 或 w ∉ Ξ（对所有玩家相同）"""
    check_player(structure.game, agent)
    for world in (w, w2):
        structure.class_of(world)  # 不在结构中时抛出 UsageError
    return structure.reaches(w, w2)


def epistemically_accessible(structure: CanonicalStructure, w: World, w2: World, agent: PlayerId) -> bool:
    check_player(structure.game, agent)
    return w == w2 or (w, w2) in structure.epistemic_links


def closest_state(structure: CanonicalStructure, w: World, agent: PlayerId, strategy: int) -> World:
    try:
        return structure.closest[(w, agent, strategy)]
    except KeyError:
        raise UsageError(f"no closest state for {w}, player {agent}, strategy {strategy}") from None
