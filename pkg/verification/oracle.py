"""
暴力计算各层集合

k 层个体理性的另一份独立实现，只依赖收益查询：每一轮都重新扫描整个策略组合
网格，除上一层外不保留任何状态。与 games.elimination 不共享代码，仅用于交叉验证。
"""

import itertools
from dataclasses import dataclass
from typing import FrozenSet, List, Tuple

from games.core import Game, StrategyProfile, payoff


@dataclass(frozen=True)
class OracleLevelSets:
    levels: Tuple[FrozenSet[StrategyProfile], ...]
    fixpoint_level: int

    def level(self, k: int) -> FrozenSet[StrategyProfile]:
        """S_k；超出已计算层级后集合不再变化"""
        if k < len(self.levels):
            return self.levels[k]
        return self.levels[-1]


def _all_profiles(game: Game) -> List[StrategyProfile]:
    return list(itertools.product(*(range(n) for n in game.strategy_counts)))


def _threshold(game: Game, previous: FrozenSet[StrategyProfile], player: int):
    best = None
    for own in range(game.strategy_counts[player]):
        worst = None
        for profile in _all_profiles(game):
            if profile in previous and profile[player] == own:
                value = payoff(game, profile, player)
                if worst is None or value < worst:
                    worst = value
        if worst is not None and (best is None or worst > best):
            best = worst
    return best


def oracle_level_sets(game: Game) -> OracleLevelSets:
    """
    朴素地计算 S_0 .. S_{fixpoint+1}

    不动点层是满足 S_{k+1} = S_k 的最小 k >= 1，或第一个空层。
    """
    levels = [frozenset(_all_profiles(game))]
    while True:
        previous = levels[-1]
        thresholds = [_threshold(game, previous, i) for i in range(game.player_count)]
        current = set()
        for profile in _all_profiles(game):
            if profile not in previous:
                continue
            if any(t is None for t in thresholds):
                continue
            if all(payoff(game, profile, i) >= thresholds[i] for i in range(game.player_count)):
                current.add(profile)
        levels.append(frozenset(current))
        k = len(levels) - 1
        if not current:
            return OracleLevelSets(tuple(levels), k)
        if levels[k] == levels[k - 1] and k >= 2:
            return OracleLevelSets(tuple(levels), k - 1)
        if k > game.profile_count + 1:
            raise AssertionError(f"oracle did not settle within {game.profile_count} rounds")
