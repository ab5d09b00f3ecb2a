"""
基于随机种子生成博弈的批量验证

种子 s 使用形状 shapes[s % len(shapes)]，这样一个种子区间能覆盖所有形状，
而每个种子只生成一个博弈。各博弈独立检查（可选进程池），结果按种子顺序合并，
报告与进程数无关。
"""

import logging
import re
from collections import Counter, OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import django
from django.conf import settings

from games.core import (
    game_digest,
    generate_random_game,
    generate_random_symmetric_game,
    parse_shape,
    serialize_game,
)
from games.elimination import OutcomeKind, compute_trace
from games.exceptions import GameError, UsageError

from .checks import CheckResult, Counterexample, check_hofstadter, check_rank, run_game_checks

logger = logging.getLogger(__name__)

_RANGE_RE = re.compile(r'^\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$')


def parse_seed_range(text: str) -> range:
    """'0..999'（含两端）或单个种子；b < a 的 'a..b' 为空区间"""
    match = _RANGE_RE.match(text)
    if match is None:
        raise UsageError(f"invalid seed range {text!r}, expected <first>..<last>")
    first = int(match.group(1))
    last = int(match.group(2)) if match.group(2) is not None else first
    return range(first, last + 1)


@dataclass(frozen=True)
class GameReport:
    """单个生成博弈的结果和各项检查结果"""

    seed: int
    shape: str
    digest: str
    outcome: str
    game_text: str
    results: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)


@dataclass
class SweepReport:
    label: str
    games: int = 0
    results: Dict[str, CheckResult] = field(default_factory=OrderedDict)
    note_counts: Dict[str, Counter] = field(default_factory=dict)
    outcomes: Counter = field(default_factory=Counter)
    none_seeds: List[Tuple[str, int]] = field(default_factory=list)
    failing_games: Dict[str, str] = field(default_factory=OrderedDict)
    skipped: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results.values())

    @property
    def failure_count(self) -> int:
        return sum(len(result.counterexamples) for result in self.results.values())

    def merge(self, report: GameReport):
        self.games += 1
        self.outcomes[report.outcome] += 1
        if report.outcome == OutcomeKind.NONE.value:
            self.none_seeds.append((report.shape, report.seed))
        for result in report.results:
            self._merge_result(report, result)
        if not report.passed:
            self.failing_games.setdefault(report.digest, report.game_text)

    def _merge_result(self, report: GameReport, result: CheckResult):
        located = tuple(
            Counterexample(c.digest, f"seed={report.seed} shape={report.shape} {c.location}", c.detail)
            for c in result.counterexamples
        )
        previous = self.results.get(result.name)
        if previous is None:
            previous = CheckResult(result.name)
            self.results[result.name] = previous
            self.results = OrderedDict(sorted(self.results.items(), key=lambda item: check_rank(item[0])))
        self.results[result.name] = CheckResult(result.name, previous.counterexamples + located)
        counts = self.note_counts.setdefault(result.name, Counter())
        counts.update(result.notes)


def _init_worker():
    django.setup()


def check_seed(seed: int, shape: str) -> GameReport:
    game = generate_random_game(seed, parse_shape(shape))
    trace = compute_trace(game)
    results = run_game_checks(game, trace)
    return GameReport(
        seed=seed,
        shape=shape,
        digest=game_digest(game),
        outcome=trace.outcome.kind.value,
        game_text=serialize_game(game),
        results=tuple(results),
    )


def _check_task(task: Tuple[int, str]) -> GameReport:
    return check_seed(*task)


def _run(tasks: List, worker, workers: int):
    if workers <= 1 or len(tasks) < 2:
        return map(worker, tasks)
    executor = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker)
    try:
        # map 保持提交顺序，即种子顺序
        return list(executor.map(worker, tasks, chunksize=max(1, len(tasks) // (workers * 4))))
    finally:
        executor.shutdown()


def run_sweep(
    seeds: Sequence[int],
    shapes: Optional[Sequence[str]] = None,
    workers: Optional[int] = None,
) -> SweepReport:
    """
    每个种子生成一个博弈并执行全部检查

    Args:
        seeds: 种子区间；空区间视为通过
        shapes: 按种子轮换使用的形状，默认 PTE_SWEEP_SHAPES
        workers: 进程数，默认 PTE_SWEEP_WORKERS

    Returns:
        SweepReport，反例按检查项、按种子顺序合并
    """
    shapes = list(shapes or getattr(settings, 'PTE_SWEEP_SHAPES', ['2x2']))
    for shape in shapes:
        parse_shape(shape)
    workers = workers or getattr(settings, 'PTE_SWEEP_WORKERS', 1)
    tasks = [(seed, shapes[seed % len(shapes)]) for seed in seeds]
    logger.info(f"sweep over {len(tasks)} games, shapes {shapes}, {workers} worker(s)")

    report = SweepReport(label=f"seeds {_describe_seeds(seeds)} shapes {','.join(shapes)}")
    for game_report in _run(tasks, _check_task, workers):
        report.merge(game_report)
    logger.info(f"sweep finished: {report.games} games, {report.failure_count} counterexamples")
    return report


def check_symmetric_seed(seed: int, size: int) -> Optional[GameReport]:
    try:
        game = generate_random_symmetric_game(seed, size)
    except GameError as e:
        logger.warning(f"symmetric seed {seed} size {size}: {e}")
        return None
    trace = compute_trace(game)
    return GameReport(
        seed=seed,
        shape=f"{size}x{size}",
        digest=game_digest(game),
        outcome=trace.outcome.kind.value,
        game_text=serialize_game(game),
        results=(check_hofstadter(game, trace),),
    )


def _symmetric_task(task: Tuple[int, int]) -> Optional[GameReport]:
    return check_symmetric_seed(*task)


def run_symmetric_sweep(
    seeds: Sequence[int],
    sizes: Optional[Sequence[int]] = None,
    workers: Optional[int] = None,
) -> SweepReport:
    """在随机对称博弈上检查与 Hofstadter 均衡的一致性；种子 s 使用 sizes[s % len(sizes)]"""
    sizes = list(sizes or getattr(settings, 'PTE_SYMMETRIC_SIZES', [2, 3, 4]))
    workers = workers or getattr(settings, 'PTE_SWEEP_WORKERS', 1)
    tasks = [(seed, sizes[seed % len(sizes)]) for seed in seeds]
    logger.info(f"symmetric sweep over {len(tasks)} games, sizes {sizes}")

    report = SweepReport(label=f"symmetric seeds {_describe_seeds(seeds)} sizes {','.join(map(str, sizes))}")
    for task, game_report in zip(tasks, _run(tasks, _symmetric_task, workers)):
        if game_report is None:
            report.skipped.append(f"seed={task[0]} size={task[1]}")
            continue
        report.merge(game_report)
    return report


def _describe_seeds(seeds: Sequence[int]) -> str:
    if not len(seeds):
        return 'none'
    return f"{seeds[0]}..{seeds[-1]}"


# --- 报告 -------------------------------------------------------------

def format_sweep(report: SweepReport) -> str:
    """每个检查项一行，然后是反例、备注和失败的博弈"""
    lines = [f"sweep {report.label}: {report.games} games"]
    outcomes = ', '.join(f"{kind}={report.outcomes[kind]}" for kind in sorted(report.outcomes))
    lines.append(f"outcomes: {outcomes or '-'}")
    for name, result in report.results.items():
        status = 'PASS' if result.passed else 'FAIL'
        lines.append(f"{status} {name} counterexamples={len(result.counterexamples)}")
        for counterexample in result.counterexamples:
            lines.append(f"  {counterexample}")
        for note, count in sorted(report.note_counts.get(name, Counter()).items()):
            lines.append(f"  note: {note} [{count} games]")
    if report.none_seeds:
        seeds = ', '.join(f"{shape}#{seed}" for shape, seed in report.none_seeds)
        lines.append(f"NONE outcomes: {seeds}")
    for skipped in report.skipped:
        lines.append(f"skipped: {skipped}")
    for digest, text in report.failing_games.items():
        lines.append(f"game {digest}:")
        lines.extend(f"  {line}" for line in text.splitlines())
    lines.append('result: ' + ('PASS' if report.passed else 'FAIL'))
    return '\n'.join(lines) + '\n'


def sweep_to_dict(report: SweepReport) -> Dict:
    return {
        'label': report.label,
        'games': report.games,
        'passed': report.passed,
        'outcomes': dict(sorted(report.outcomes.items())),
        'checks': [
            {
                'name': name,
                'passed': result.passed,
                'counterexamples': [
                    {'digest': c.digest, 'location': c.location, 'detail': c.detail}
                    for c in result.counterexamples
                ],
                'notes': dict(sorted(report.note_counts.get(name, Counter()).items())),
            }
            for name, result in report.results.items()
        ],
        'none_seeds': [{'shape': shape, 'seed': seed} for shape, seed in report.none_seeds],
        'skipped': list(report.skipped),
        'failing_games': dict(report.failing_games),
    }


def record_sweep(report: SweepReport):
    """保存本次批量验证及其反例，返回 SweepRun 记录"""
    from .models import CheckFailure, SweepRun

    run = SweepRun.objects.create(
        label=report.label,
        games=report.games,
        passed=report.passed,
        failure_count=report.failure_count,
        summary=sweep_to_dict(report),
    )
    CheckFailure.objects.bulk_create([
        CheckFailure(
            run=run,
            check_name=name,
            digest=counterexample.digest,
            location=counterexample.location,
            detail=counterexample.detail,
            game_text=report.failing_games.get(counterexample.digest, ''),
        )
        for name, result in report.results.items()
        for counterexample in result.counterexamples
    ])
    logger.info(f"recorded sweep run {run.pk}")
    return run
