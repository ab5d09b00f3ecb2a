"""
对规范结构相关结论的机械检查

每个检查返回一个 CheckResult，其中的反例记录博弈摘要、涉及的世界或策略组合
以及出错原因。性质不成立时不抛异常，只有输入非法时才抛出。
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Set, Tuple

from games.core import Game, format_profile, format_profiles, game_digest, is_symmetric
from games.elimination import (
    LevelTrace,
    OutcomeKind,
    classic_individually_rational,
    compute_trace,
    hofstadter_profile,
    is_level_k_ir,
    is_pareto_optimal,
    level_set,
)
from kripke.evaluation import (
    EvalContext,
    eval_knowledge,
    eval_omniscience,
    eval_rat,
    evaluate,
    necessity,
)
from kripke.formulas import KSIGMA, RAT, Formula, box, conj, dia_c, omn, play, play_i
from kripke.structure import (
    AUTO,
    CanonicalStructure,
    World,
    WorldClass,
    build_canonical,
    closest_state,
    epistemically_accessible,
)

from .oracle import OracleLevelSets, oracle_level_sets

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Counterexample:
    digest: str
    location: str
    detail: str

    def __str__(self):
        return f"[{self.digest}] {self.location}: {self.detail}"


@dataclass(frozen=True)
class CheckResult:
    name: str
    counterexamples: Tuple[Counterexample, ...] = ()
    notes: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.counterexamples


class _Findings:
    """收集单个博弈上单项检查的反例和备注"""

    def __init__(self, name: str, game: Game):
        self.name = name
        self.game = game
        self.digest = game_digest(game)
        self.counterexamples: List[Counterexample] = []
        self.notes: List[str] = []

    def fail(self, location: str, detail: str):
        self.counterexamples.append(Counterexample(self.digest, location, detail))

    def note(self, text: str):
        if text not in self.notes:
            self.notes.append(text)

    def result(self) -> CheckResult:
        for counterexample in self.counterexamples:
            logger.warning(f"{self.name} failed: {counterexample}")
        return CheckResult(self.name, tuple(self.counterexamples), tuple(self.notes))


def _where(structure: CanonicalStructure, w: World) -> str:
    return structure.describe(w)


def _deviation(structure: CanonicalStructure, w: World, player: int, strategy: int) -> str:
    game = structure.game
    return f"{structure.describe(w)} {game.players[player]}->{game.strategies[player][strategy]}"


def _deviations(structure: CanonicalStructure, w: World):
    game = structure.game
    for i in range(game.player_count):
        for strategy in range(game.strategy_counts[i]):
            if strategy != w.profile[i]:
                yield i, strategy


def _has_deviations(game: Game) -> bool:
    return any(count > 1 for count in game.strategy_counts)


# --- 引理检查 ----------------------------------------------------------

def check_lemma_cascading(structure: CanonicalStructure) -> CheckResult:
    """
    偏离恰好下降一层；在可能世界上，偏离反事实可能当且仅当其最近状态在低一层中幸存
    """
    findings = _Findings('lemma_cascading', structure.game)
    ctx = EvalContext(structure)
    trace = structure.trace
    for w in structure.worlds:
        if w.level < 1:
            continue
        for i, strategy in _deviations(structure, w):
            target = closest_state(structure, w, i, strategy)
            if target.level != w.level - 1:
                findings.fail(_deviation(structure, w, i, strategy),
                              f"closest state {structure.describe(target)} is not on level {w.level - 1}")
            if not structure.is_possible(w):
                continue
            possible = evaluate(ctx, w, dia_c(play_i(i, strategy)))
            survived = target.profile in level_set(trace, w.level - 1).members
            if possible != survived:
                findings.fail(_deviation(structure, w, i, strategy),
                              f"dia_c(play_{i + 1}) is {possible} but survival on level "
                              f"{w.level - 1} is {survived}")
    return findings.result()


def check_lemma_omniscience(structure: CanonicalStructure) -> CheckResult:
    """按递归定义，第 k >= 1 层的每个世界都满足 OMN(k)"""
    findings = _Findings('lemma_omniscience', structure.game)
    ctx = EvalContext(structure)
    for w in structure.worlds:
        if w.level >= 1 and not eval_omniscience(ctx, w, w.level):
            findings.fail(_where(structure, w), f"omn({w.level}) does not hold")

    if not _has_deviations(structure.game):
        findings.note('no player can deviate; the level shortcut for omn(k) is not cross-checked')
        return findings.result()
    # 交叉验证：可能世界上 omn(k) 恰好在自身层级成立
    for w in structure.possible_worlds:
        for k in range(1, structure.max_level + 1):
            if k != w.level and eval_omniscience(ctx, w, k):
                findings.fail(_where(structure, w), f"omn({k}) holds off the world's level")
    return findings.result()


def check_lemma_necessary_rationality(structure: CanonicalStructure) -> CheckResult:
    """所有世界满足 RAT，所有正常世界满足 box RAT"""
    findings = _Findings('lemma_necessary_rationality', structure.game)
    ctx = EvalContext(structure)
    for w in structure.worlds:
        if not eval_rat(ctx, w):
            findings.fail(_where(structure, w), 'RAT does not hold')
    for w in structure.normal_worlds:
        if not necessity(ctx, w, RAT):
            findings.fail(_where(structure, w), 'box(RAT) does not hold')
    return findings.result()


def check_lemma_necessary_knowledge(structure: CanonicalStructure) -> CheckResult:
    """所有世界满足 K(σ)，所有正常世界满足 box K(σ)"""
    findings = _Findings('lemma_necessary_knowledge', structure.game)
    ctx = EvalContext(structure)
    for w in structure.worlds:
        if not eval_knowledge(ctx, w):
            findings.fail(_where(structure, w), 'KS does not hold')
    for w in structure.normal_worlds:
        if not necessity(ctx, w, KSIGMA):
            findings.fail(_where(structure, w), 'box(KS) does not hold')
    return findings.result()


def check_lemma_agent_decisions(structure: CanonicalStructure) -> CheckResult:
    """play(σ(w)) 在所有世界上成立，包括不可能世界"""
    findings = _Findings('lemma_agent_decisions', structure.game)
    ctx = EvalContext(structure)
    for w in structure.worlds:
        if not evaluate(ctx, w, play(w.profile)):
            findings.fail(_where(structure, w), 'play of its own profile does not hold')
    return findings.result()


def _witness_formula(k: int, boxed: bool) -> Formula:
    base = conj(RAT, KSIGMA)
    return conj(box(base) if boxed else base, omn(k))


def check_full_support_restricted(
    structure: CanonicalStructure,
    game: Optional[Game] = None,
    oracle: Optional[OracleLevelSets] = None,
) -> CheckResult:
    """
    刻画结论所依赖的那部分 full support

    第 0 层：处处满足 RAT 和 KS，正常世界满足 box(RAT & KS)，每个策略组合有一个
    第 0 层世界，S_1 的每个组合有一个可能世界。
    第 k >= 1 层（k 至多为不动点层加 1）：S_k 的每个组合都有一个可能世界作为见证，
    满足 play、RAT & KS（k >= 2 时加 box）和 omn(k)。
    所有结构上的 support 无法枚举，这里不做。
    """
    game = game or structure.game
    oracle = oracle or oracle_level_sets(game)
    findings = _Findings('full_support_restricted', game)
    ctx = EvalContext(structure)
    base = conj(RAT, KSIGMA)

    for w in structure.worlds:
        if not evaluate(ctx, w, base):
            findings.fail(_where(structure, w), 'RAT & KS does not hold')
    for w in structure.normal_worlds:
        if not evaluate(ctx, w, box(base)):
            findings.fail(_where(structure, w), 'box(RAT & KS) does not hold')

    for profile in game.profiles:
        if World(profile, 0) not in structure:
            findings.fail(format_profile(game, profile), 'no level-0 world plays this profile')
    covered = {w.profile for w in structure.possible_worlds}
    for profile in sorted(oracle.level(1)):
        if profile not in covered:
            findings.fail(format_profile(game, profile), 'no possible world plays this S_1 profile')
    uncovered = [p for p in game.profiles if p not in covered]
    if uncovered:
        findings.note('level-0 coverage holds over all worlds; over possible worlds only S_1 profiles are covered')

    horizon = oracle.fixpoint_level + 1
    if structure.max_level < horizon:
        findings.note(f"structure stops at level {structure.max_level}, below the needed level {horizon}")
    for k in range(1, horizon + 1):
        for profile in sorted(oracle.level(k)):
            literal = _witness_formula(k, boxed=k >= 2)
            witnessed = any(
                evaluate(ctx, w, conj(play(profile), literal))
                for w in structure.possible_worlds
                if w.profile == profile
            )
            if not witnessed:
                findings.fail(f"{format_profile(game, profile)} on level {k}",
                              f"no possible world satisfies {literal}")
            elif k == 1:
                boxed = any(
                    evaluate(ctx, w, conj(play(profile), _witness_formula(1, boxed=True)))
                    for w in structure.possible_worlds
                    if w.profile == profile
                )
                if not boxed:
                    findings.note('level-1 witnesses satisfy RAT & KS but not box(RAT & KS), '
                                  'since level-1 worlds are non-normal')
    return findings.result()


# --- 刻画定理 --------------------------------------------

def _theorem_formula(k: int) -> Formula:
    if k == 1:
        return conj(RAT, KSIGMA, omn(1))
    return conj(box(RAT), box(KSIGMA), omn(k))


def _structure_through(game: Game, k: int, structure: Optional[CanonicalStructure], trace=None):
    if structure is not None and structure.max_level >= k:
        return structure
    structure = build_canonical(game, AUTO, trace)
    if structure.max_level < k:
        structure = build_canonical(game, k, structure.trace)
    return structure


def characterized_profiles(structure: CanonicalStructure, k: int,
                           ctx: Optional[EvalContext] = None) -> FrozenSet:
    """满足第 k 层公式的可能世界上所采用的策略组合"""
    ctx = ctx or EvalContext(structure)
    formula = _theorem_formula(k)
    return frozenset(
        w.profile for w in structure.possible_worlds
        if evaluate(ctx, w, conj(play(w.profile), formula))
    )


def verify_theorem_level(
    game: Game,
    k: int,
    structure: Optional[CanonicalStructure] = None,
    oracle: Optional[OracleLevelSets] = None,
) -> CheckResult:
    """
    S_k 等于满足 RAT & KS & omn(1)（k = 1）或 box(RAT) & box(KS) & omn(k)（k >= 2）
    的可能世界上的策略组合集合
    """
    if k < 1:
        raise ValueError(f"theorem level must be >= 1, got {k}")
    findings = _Findings(f'theorem_level_{k}', game)
    structure = _structure_through(game, k, structure)
    expected = (oracle or oracle_level_sets(game)).level(k)
    found = characterized_profiles(structure, k)
    for profile in sorted(expected - found):
        findings.fail(f"{format_profile(game, profile)} on level {k}", 'in S_k but no world satisfies the formula')
    for profile in sorted(found - expected):
        findings.fail(f"{format_profile(game, profile)} on level {k}", 'satisfies the formula but is not in S_k')
    return findings.result()


def verify_pte_characterization(
    game: Game,
    structure: Optional[CanonicalStructure] = None,
    trace: Optional[LevelTrace] = None,
) -> CheckResult:
    """
    淘汰结果等于第 1..fixpoint+1 每一层刻画出的策略组合。
    不动点之后 S_k 不再变化，所以这些层代表了所有 k。
    """
    findings = _Findings('pte_characterization', game)
    trace = trace or compute_trace(game)
    horizon = trace.fixpoint_level + 1
    structure = _structure_through(game, horizon, structure, trace)
    ctx = EvalContext(structure)

    survivors: Optional[Set] = None
    for k in range(1, horizon + 1):
        level_profiles = characterized_profiles(structure, k, ctx)
        survivors = set(level_profiles) if survivors is None else survivors & level_profiles

    expected = set(trace.outcome.profiles)
    if survivors != expected:
        findings.fail(
            'outcome',
            f"elimination gives {trace.outcome.describe(game)} but the characterized "
            f"intersection is {format_profiles(game, survivors)}",
        )
    findings.note("certified through level fixpoint+1; S_k is constant beyond the fixpoint")
    return findings.result()


# --- 框架检查 -----------------------------------------------------

def check_frame_conditions(structure: CanonicalStructure) -> CheckResult:
    """世界分类、Λ 成员关系、可达关系形状以及 f 的一致性"""
    game = structure.game
    findings = _Findings('frame_conditions', game)

    for w in structure.worlds:
        world_class = structure.class_of(w)
        if world_class is WorldClass.NORMAL and w.level < 2:
            findings.fail(_where(structure, w), 'normal world below level 2')
        if w.level == 0 and world_class is not WorldClass.IMPOSSIBLE:
            findings.fail(_where(structure, w), 'level-0 world is not impossible')
        in_lambda = w.level >= 1 and is_level_k_ir(game, w.profile, w.level, structure.trace)
        if in_lambda != structure.is_possible(w):
            findings.fail(_where(structure, w), f"possible={structure.is_possible(w)} but level-k IR={in_lambda}")

    agents = range(game.player_count)
    for w in structure.possible_worlds:
        for other in structure.possible_worlds:
            if not structure.reaches(w, other):
                findings.fail(f"{_where(structure, w)} -> {_where(structure, other)}",
                              'logical accessibility is not total on possible worlds')
    for w in structure.worlds:
        if structure.is_normal(w):
            continue
        for other in structure.worlds:
            if not structure.reaches(w, other):
                findings.fail(f"{_where(structure, w)} -> {_where(structure, other)}",
                              'non-normal world does not reach every world')

    links = {(a, b) for a, b in structure.epistemic_links if a != b}
    for w in structure.worlds:
        if not all(epistemically_accessible(structure, w, w, i) for i in agents):
            findings.fail(_where(structure, w), 'epistemic accessibility is not reflexive')
    for a, b in sorted(links):
        if (b, a) not in links:
            findings.fail(f"{_where(structure, a)} -> {_where(structure, b)}", 'epistemic link is not symmetric')
        for c, d in links:
            if c == b and d != a and (a, d) not in links:
                findings.fail(f"{_where(structure, a)} -> {_where(structure, d)}",
                              'epistemic accessibility is not transitive')

    for w in structure.worlds:
        for i in agents:
            for strategy in range(game.strategy_counts[i]):
                if closest_state(structure, w, i, strategy).profile[i] != strategy:
                    findings.fail(_deviation(structure, w, i, strategy), 'closest state ignores the deviation')
    return findings.result()


def check_epistemic_omniscience(structure: CanonicalStructure) -> CheckResult:
    """
    对每个由 K 连接的 (w, w')，检查知识与逻辑之间的四个条件：策略组合相同、
    逻辑后继相同、最近状态相互连接、最近状态的可达性保持。(w, w) 四条都满足。
    """
    game = structure.game
    findings = _Findings('epistemic_omniscience', game)
    agents = range(game.player_count)
    for w in structure.worlds:
        for other in structure.epistemic_successors(w):
            if other == w:
                continue
            linked_by = [i for i in agents if epistemically_accessible(structure, w, other, i)]
            if not linked_by:
                continue
            pair = f"{_where(structure, w)} ~ {_where(structure, other)}"
            if w.profile != other.profile:
                findings.fail(pair, 'linked worlds play different profiles')
            # 所有玩家的 L 相同；正常性相同则后继相同
            if structure.is_normal(w) != structure.is_normal(other):
                for third in structure.worlds:
                    if structure.reaches(w, third) and not structure.reaches(other, third):
                        findings.fail(pair, f"{_where(structure, third)} is reachable from one side only")
            for j in agents:
                for strategy in range(game.strategy_counts[j]):
                    here = closest_state(structure, w, j, strategy)
                    there = closest_state(structure, other, j, strategy)
                    if not all(epistemically_accessible(structure, here, there, i) for i in linked_by):
                        findings.fail(pair, f"closest states for {game.players[j]} are not linked")
                    if structure.reaches(w, here) and not structure.reaches(w, there):
                        findings.fail(pair, f"closest state for {game.players[j]} loses accessibility")
    return findings.result()


def check_no_iterated_necessity(structure: CanonicalStructure) -> CheckResult:
    """存在非正常的可能世界时，正常世界不满足 box(box(RAT)) 或 box(box(KS))"""
    findings = _Findings('no_iterated_necessity', structure.game)
    nonnormal = [w for w in structure.possible_worlds if not structure.is_normal(w)]
    if not nonnormal:
        findings.note('no non-normal possible world; nothing to check')
        return findings.result()
    ctx = EvalContext(structure)
    for w in structure.normal_worlds:
        for formula in (box(box(RAT)), box(box(KSIGMA))):
            if evaluate(ctx, w, formula):
                findings.fail(_where(structure, w), f"{formula} holds")
    return findings.result()


# --- 淘汰过程的性质 -----------------------------------------------

def check_elimination_properties(
    game: Game,
    trace: Optional[LevelTrace] = None,
    oracle: Optional[OracleLevelSets] = None,
) -> CheckResult:
    """
    与 oracle 一致、逐层嵌套、阈值单调、必然终止、第 1 层与经典个体理性一致、
    PTE 帕累托最优以及不动点处唯一
    """
    findings = _Findings('elimination_properties', game)
    trace = trace or compute_trace(game)
    oracle = oracle or oracle_level_sets(game)

    if oracle.fixpoint_level != trace.fixpoint_level:
        findings.fail('fixpoint', f"oracle level {oracle.fixpoint_level}, elimination level {trace.fixpoint_level}")
    for k in range(trace.fixpoint_level + 2):
        if level_set(trace, k).members != oracle.level(k):
            findings.fail(f"S_{k}", f"elimination {format_profiles(game, level_set(trace, k).members)} "
                                    f"vs oracle {format_profiles(game, oracle.level(k))}")

    for level, outside in trace.nesting_audit:
        findings.fail(f"S_{level}", f"meets the thresholds outside S_{level - 1}: {format_profiles(game, outside)}")

    used = [th for th in trace.thresholds if th is not None and not th.diverged]
    for earlier, later in zip(used, used[1:]):
        for i, (a, b) in enumerate(zip(earlier.values, later.values)):
            if b < a:
                findings.fail(f"thresholds {earlier.level}->{later.level}",
                              f"{game.players[i]} drops from {a} to {b}")
    if any(th is not None and th.diverged and level_set(trace, th.level - 1).members
           for th in trace.thresholds):
        findings.fail('thresholds', 'diverged over a nonempty level')

    if trace.fixpoint_level > game.profile_count:
        findings.fail('fixpoint', f"level {trace.fixpoint_level} exceeds |Σ| = {game.profile_count}")

    classic = classic_individually_rational(game)
    if level_set(trace, 1).members != classic:
        findings.fail('S_1', f"classic individually rational set is {format_profiles(game, classic)}")

    outcome = trace.outcome
    if outcome.kind is OutcomeKind.PTE and not is_pareto_optimal(game, outcome.profile):
        findings.fail(format_profile(game, outcome.profile), 'PTE is not Pareto optimal')
    if outcome.kind is OutcomeKind.MULTIPLE:
        findings.fail('outcome', f"several profiles survive at the fixpoint: {format_profiles(game, outcome.profiles)}")
    return findings.result()


def check_hofstadter(game: Game, trace: Optional[LevelTrace] = None) -> CheckResult:
    """在有 PTE 的对称两人博弈中，PTE 就是最优的对角组合"""
    findings = _Findings('hofstadter', game)
    if not is_symmetric(game):
        findings.note('not a symmetric two-player game; skipped')
        return findings.result()
    trace = trace or compute_trace(game)
    if trace.outcome.kind is not OutcomeKind.PTE:
        findings.note('no PTE; skipped')
        return findings.result()
    diagonal = hofstadter_profile(game)
    if trace.outcome.profile != diagonal:
        findings.fail(format_profile(game, trace.outcome.profile),
                      f"Hofstadter profile is {format_profile(game, diagonal)}")
    return findings.result()


STRUCTURE_CHECKS = (
    check_frame_conditions,
    check_lemma_cascading,
    check_lemma_omniscience,
    check_lemma_necessary_rationality,
    check_lemma_necessary_knowledge,
    check_lemma_agent_decisions,
    check_epistemic_omniscience,
    check_no_iterated_necessity,
)


# 与 run_game_checks 的顺序一致；theorem_level_k 按 k 排在 theorem_level 的位置
CHECK_ORDER = (
    'elimination_properties',
    'frame_conditions',
    'lemma_cascading',
    'lemma_omniscience',
    'lemma_necessary_rationality',
    'lemma_necessary_knowledge',
    'lemma_agent_decisions',
    'epistemic_omniscience',
    'no_iterated_necessity',
    'full_support_restricted',
    'theorem_level',
    'pte_characterization',
    'hofstadter',
)


def check_rank(name: str) -> Tuple[int, int]:
    base, _, level = name.rpartition('_')
    if base == 'theorem_level' and level.isdigit():
        return CHECK_ORDER.index(base), int(level)
    if name in CHECK_ORDER:
        return CHECK_ORDER.index(name), 0
    return len(CHECK_ORDER), 0


def check_structure(structure: CanonicalStructure) -> List[CheckResult]:
    """在一个结构上执行全部结构层检查，外加 full support"""
    results = [check(structure) for check in STRUCTURE_CHECKS]
    results.append(check_full_support_restricted(structure))
    return results


def run_game_checks(game: Game, trace: Optional[LevelTrace] = None) -> List[CheckResult]:
    """按固定顺序对一个合法无平局博弈执行全部检查"""
    trace = trace or compute_trace(game)
    oracle = oracle_level_sets(game)
    structure = build_canonical(game, AUTO, trace)

    results = [check_elimination_properties(game, trace, oracle)]
    results.extend(check(structure) for check in STRUCTURE_CHECKS)
    results.append(check_full_support_restricted(structure, game, oracle))
    for k in range(1, trace.fixpoint_level + 2):
        results.append(verify_theorem_level(game, k, structure, oracle))
    results.append(verify_pte_characterization(game, structure, trace))
    results.append(check_hofstadter(game, trace))
    return results
