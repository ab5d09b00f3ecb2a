"""
规范结构上的模型检测

按世界的类别分三种情况：

* 不可能世界：原子取手工赋值，只按 NOT/AND 组合，所有模态都按非正规处理；
* 非正常的可能世界：原子和联结词按真实含义求值，但 box 恒假，两种 diamond 恒真；
* 正常世界：在逻辑可达关系上使用完整语义。
"""

from typing import Dict, Tuple

from games.exceptions import UsageError

from .formulas import Formula, Op, expand_derived, neg
from .structure import (
    CanonicalStructure,
    World,
    WorldClass,
    closest_state,
    epistemically_accessible,
)


class EvalContext:
    """在不可变结构上的一次求值会话"""

    def __init__(self, structure: CanonicalStructure, memoize: bool = True):
        self.structure = structure
        self.memoize = memoize
        self._formulas: Dict[Tuple[World, Formula], bool] = {}
        self._omniscience: Dict[Tuple[World, int], bool] = {}

    def agents(self):
        return range(self.structure.game.player_count)


def evaluate(ctx: EvalContext, w: World, formula: Formula) -> bool:
    """`formula` 在世界 `w` 上的真值"""
    key = (w, formula)
    if ctx.memoize and key in ctx._formulas:
        return ctx._formulas[key]
    result = _evaluate(ctx, w, formula)
    if ctx.memoize:
        ctx._formulas[key] = result
    return result


def _evaluate(ctx: EvalContext, w: World, formula: Formula) -> bool:
    op = formula.op
    if op in (Op.OR, Op.IMPLIES, Op.IFF):
        return evaluate(ctx, w, expand_derived(formula))
    if op is Op.NOT:
        return not evaluate(ctx, w, formula.args[0])
    if op is Op.AND:
        return all(evaluate(ctx, w, part) for part in formula.args)
    if op is Op.BOX:
        return necessity(ctx, w, formula.args[0])
    if op is Op.DIAMOND:
        return possibility(ctx, w, formula.args[0])
    if op is Op.DIAMOND_C:
        return counterfactual_possibility(ctx, w, formula.args[0])
    return _atom(ctx, w, formula)


def _atom(ctx: EvalContext, w: World, formula: Formula) -> bool:
    structure = ctx.structure
    op = formula.op
    if op is Op.TRUE:
        return True

    if structure.class_of(w) is WorldClass.IMPOSSIBLE:
        valuation = structure.valuation[w]
        if op is Op.RAT:
            return valuation.rat
        if op is Op.KSIGMA:
            return valuation.ksigma
        if op is Op.OMN:
            return valuation.omn(formula.level)
        if op is Op.PLAY:
            return valuation.play(formula.profile)
        if op is Op.PLAY_I:
            return valuation.play_i(formula.player, formula.strategy)
        raise UsageError(f"unknown atom {op}")

    if op is Op.RAT:
        return eval_rat(ctx, w)
    if op is Op.KSIGMA:
        return eval_knowledge(ctx, w)
    if op is Op.OMN:
        return eval_omniscience(ctx, w, formula.level)
    if op is Op.PLAY:
        return w.profile == formula.profile
    if op is Op.PLAY_I:
        return w.profile[formula.player] == formula.strategy
    raise UsageError(f"unknown atom {op}")


def eval_rat(ctx: EvalContext, w: World) -> bool:
    """
    没有哪个逻辑可达的偏离能让偏离者严格获益
    通向逻辑不可达世界的偏离不计入
    """
    structure = ctx.structure
    if structure.class_of(w) is WorldClass.IMPOSSIBLE:
        return structure.valuation[w].rat
    payoffs = structure.game.payoffs
    for i in ctx.agents():
        current = payoffs[i][w.profile]
        for strategy in range(structure.game.strategy_counts[i]):
            target = closest_state(structure, w, i, strategy)
            if structure.reaches(w, target) and payoffs[i][target.profile] > current:
                return False
    return True


def eval_knowledge(ctx: EvalContext, w: World) -> bool:
    """每个玩家认知可达的世界都与 w 的策略组合相同"""
    structure = ctx.structure
    if structure.class_of(w) is WorldClass.IMPOSSIBLE:
        return structure.valuation[w].ksigma
    for i in ctx.agents():
        for other in structure.epistemic_successors(w):
            if epistemically_accessible(structure, w, other, i) and other.profile != w.profile:
                return False
    return True


def eval_omniscience(ctx: EvalContext, w: World, k: int) -> bool:
    """
    k 层逻辑全知，按递归定义计算

    第 1 层恰好是非正常的可能世界。k >= 2 时世界必须是正常的，每个偏离都要
    到达满足 k-1 层全知的世界，并且对所有玩家都要逻辑可达某个策略组合相同、
    满足 k-1 层全知的世界。
    """
    if k < 1:
        raise UsageError(f"omniscience level must be >= 1, got {k}")
    key = (w, k)
    if ctx.memoize and key in ctx._omniscience:
        return ctx._omniscience[key]
    result = _omniscience(ctx, w, k)
    if ctx.memoize:
        ctx._omniscience[key] = result
    return result


def _omniscience(ctx: EvalContext, w: World, k: int) -> bool:
    structure = ctx.structure
    world_class = structure.class_of(w)
    if world_class is WorldClass.IMPOSSIBLE:
        return structure.valuation[w].omn(k)
    if k == 1:
        return world_class is WorldClass.NONNORMAL_POSSIBLE
    if world_class is not WorldClass.NORMAL:
        return False

    game = structure.game
    for i in ctx.agents():
        for strategy in range(game.strategy_counts[i]):
            if strategy == w.profile[i]:
                continue
            if not eval_omniscience(ctx, closest_state(structure, w, i, strategy), k - 1):
                return False

    return any(
        structure.reaches(w, other)
        and eval_omniscience(ctx, other, k - 1)
        for other in structure.worlds_with_profile(w.profile)
    )


def necessity(ctx: EvalContext, w: World, formula: Formula) -> bool:
    """Box：对每个玩家，在所有逻辑可达世界上都为真"""
    structure = ctx.structure
    if not structure.is_normal(w):
        return False
    return all(
        evaluate(ctx, other, formula)
        for other in structure.worlds
        if structure.reaches(w, other)
    )


def possibility(ctx: EvalContext, w: World, formula: Formula) -> bool:
    if not ctx.structure.is_normal(w):
        return True
    return not necessity(ctx, w, neg(formula))


def counterfactual_possibility(ctx: EvalContext, w: World, formula: Formula) -> bool:
    """
    存在玩家 i 的某个偏离 s' != σ_i(w)，其最近状态对某个玩家 j 逻辑可达，
    且满足 `formula`
    """
    structure = ctx.structure
    if not structure.is_normal(w):
        return True
    game = structure.game
    for i in ctx.agents():
        for strategy in range(game.strategy_counts[i]):
            if strategy == w.profile[i]:
                continue
            target = closest_state(structure, w, i, strategy)
            if structure.reaches(w, target) and evaluate(ctx, target, formula):
                return True
    return False
