"""
测试、文档和 data/games 中用到的具名博弈
"""

from .core import Game, build_game


def reference_game() -> Game:
    """两轮淘汰，PTE 为 (B,X)"""
    # 行 A、B，列 X、Y
    return build_game(
        [[[3, 0], [1, 2]],
         [[0, 3], [2, 1]]],
        players=['P1', 'P2'],
        strategies=[['A', 'B'], ['X', 'Y']],
    )


def prisoners_dilemma() -> Game:
    return build_game(
        [[[2, 0], [3, 1]],
         [[2, 3], [0, 1]]],
        players=['P1', 'P2'],
        strategies=[['C', 'D'], ['C', 'D']],
    )


def no_equilibrium_game() -> Game:
    """S_1 = {(A,X),(B,Y)}，两人偏好交叉，因此 S_2 为空"""
    return build_game(
        [[[3, 0], [1, 2]],
         [[2, 1], [0, 3]]],
        players=['P1', 'P2'],
        strategies=[['A', 'B'], ['X', 'Y']],
    )


def trivial_game() -> Game:
    """两个玩家，各只有一个策略"""
    return build_game([[[0]], [[0]]], players=['P1', 'P2'], strategies=[['A'], ['X']])


def single_player_game() -> Game:
    return build_game([[0]], players=['P1'], strategies=[['only']])


def tied_game() -> Game:
    """P1 在 (A,Y) 和 (B,X) 处收益都是 1"""
    return build_game(
        [[[3, 1], [1, 2]],
         [[0, 3], [2, 1]]],
        players=['P1', 'P2'],
        strategies=[['A', 'B'], ['X', 'Y']],
    )
