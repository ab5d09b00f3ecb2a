import dataclasses
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from games.core import generate_random_game
from games.elimination import Outcome, OutcomeKind, compute_pte, compute_trace, level_set
from games.exceptions import UsageError
from games.fixtures import no_equilibrium_game, prisoners_dilemma, reference_game, trivial_game
from kripke.structure import ImpossibleValuation, World, WorldClass, build_canonical

from .checks import (
    CheckResult,
    Counterexample,
    characterized_profiles,
    check_elimination_properties,
    check_epistemic_omniscience,
    check_frame_conditions,
    check_full_support_restricted,
    check_hofstadter,
    check_lemma_agent_decisions,
    check_lemma_cascading,
    check_lemma_necessary_knowledge,
    check_lemma_necessary_rationality,
    check_lemma_omniscience,
    check_no_iterated_necessity,
    run_game_checks,
    verify_pte_characterization,
    verify_theorem_level,
)
from .models import CheckFailure, SweepRun
from .oracle import oracle_level_sets
from .sweep import (
    GameReport,
    SweepReport,
    format_sweep,
    parse_seed_range,
    record_sweep,
    run_sweep,
    run_symmetric_sweep,
    sweep_to_dict,
)

# 参考博弈的策略下标
A, B = 0, 1
X, Y = 0, 1
P1, P2 = 0, 1
C, D = 0, 1

GAMES_DIR = settings.BASE_DIR / 'data' / 'games'


def corrupted(structure, **tables):
    """复制 `structure` 并修改部分表；每个参数值是一个覆盖用的 dict"""
    changes = {}
    for name, overrides in tables.items():
        if name == 'epistemic_links':
            changes[name] = frozenset(overrides)
        else:
            changes[name] = {**getattr(structure, name), **overrides}
    return dataclasses.replace(structure, **changes)


class OracleTests(SimpleTestCase):
    def test_reference_levels(self):
        oracle = oracle_level_sets(reference_game())
        self.assertEqual(oracle.level(1), {(B, X), (B, Y)})
        self.assertEqual(oracle.level(2), {(B, X)})
        self.assertEqual(oracle.level(9), {(B, X)})
        self.assertEqual(oracle.fixpoint_level, 2)

    def test_trivial_levels(self):
        oracle = oracle_level_sets(trivial_game())
        for k in range(4):
            self.assertEqual(oracle.level(k), {(0, 0)})
        self.assertEqual(oracle.fixpoint_level, 1)

    def test_prisoners_dilemma_levels(self):
        oracle = oracle_level_sets(prisoners_dilemma())
        self.assertEqual(oracle.level(1), {(C, C), (D, D)})
        self.assertEqual(oracle.level(2), {(C, C)})

    def test_empty_fixpoint(self):
        oracle = oracle_level_sets(no_equilibrium_game())
        self.assertEqual(oracle.level(1), {(A, X), (B, Y)})
        self.assertEqual(oracle.level(2), frozenset())
        self.assertEqual(oracle.fixpoint_level, 2)

    def test_agrees_with_elimination(self):
        for shape in [(2, 2), (2, 3), (3, 3), (2, 2, 2)]:
            for seed in range(15):
                game = generate_random_game(seed, shape)
                trace = compute_trace(game)
                oracle = oracle_level_sets(game)
                with self.subTest(shape=shape, seed=seed):
                    self.assertEqual(oracle.fixpoint_level, trace.fixpoint_level)
                    for k in range(trace.fixpoint_level + 2):
                        self.assertEqual(oracle.level(k), level_set(trace, k).members)


class LemmaCheckTests(SimpleTestCase):
    def setUp(self):
        self.game = reference_game()
        self.structure = build_canonical(self.game)

    def assertPassed(self, result: CheckResult):
        self.assertTrue(result.passed, [str(c) for c in result.counterexamples])

    def test_all_lemmas_pass_on_named_games(self):
        checks = [
            check_lemma_cascading,
            check_lemma_omniscience,
            check_lemma_necessary_rationality,
            check_lemma_necessary_knowledge,
            check_lemma_agent_decisions,
            check_full_support_restricted,
            check_frame_conditions,
            check_epistemic_omniscience,
            check_no_iterated_necessity,
        ]
        for game in (reference_game(), prisoners_dilemma(), no_equilibrium_game(), trivial_game()):
            structure = build_canonical(game)
            for check in checks:
                with self.subTest(game=game, check=check.__name__):
                    self.assertPassed(check(structure))

    def test_omniscience_on_random_game(self):
        self.assertPassed(check_lemma_omniscience(build_canonical(generate_random_game(3, (3, 3)))))

    def test_cascading_detects_wrong_level(self):
        broken = corrupted(self.structure, closest={(World((B, X), 2), P1, A): World((A, X), 2)})
        result = check_lemma_cascading(broken)
        self.assertFalse(result.passed)
        self.assertEqual(result.counterexamples[0].location, '(B,X)@2 P1->A')

    def test_omniscience_detects_wrong_class(self):
        broken = corrupted(self.structure, classes={World((B, X), 2): WorldClass.NONNORMAL_POSSIBLE})
        result = check_lemma_omniscience(broken)
        self.assertFalse(result.passed)
        self.assertIn('(B,X)@2', [c.location for c in result.counterexamples])

    def test_rationality_detects_valuation(self):
        broken = corrupted(self.structure, valuation={
            World((A, X), 0): ImpossibleValuation(played=(A, X), omn_level=0, rat=False),
        })
        self.assertFalse(check_lemma_necessary_rationality(broken).passed)

    def test_rationality_detects_redirected_deviation(self):
        # u1(A,X) = 3 大于 u1(B,Y) = 2
        broken = corrupted(self.structure, closest={(World((B, Y), 1), P1, A): World((A, X), 0)})
        result = check_lemma_necessary_rationality(broken)
        self.assertFalse(result.passed)
        details = {(c.location, c.detail) for c in result.counterexamples}
        self.assertIn(('(B,Y)@1', 'RAT does not hold'), details)
        self.assertIn(('(B,X)@2', 'box(RAT) does not hold'), details)

    def test_knowledge_detects_foreign_link(self):
        broken = corrupted(self.structure, epistemic_links={(World((B, X), 2), World((B, Y), 1))})
        self.assertFalse(check_lemma_necessary_knowledge(broken).passed)
        self.assertFalse(check_epistemic_omniscience(broken).passed)
        self.assertFalse(check_frame_conditions(broken).passed)

    def test_agent_decisions_detect_valuation(self):
        broken = corrupted(self.structure, valuation={
            World((A, X), 0): ImpossibleValuation(played=(B, Y), omn_level=0),
        })
        result = check_lemma_agent_decisions(broken)
        self.assertFalse(result.passed)
        self.assertEqual(result.counterexamples[0].location, '(A,X)@0')

    def test_full_support_detects_truncation(self):
        result = check_full_support_restricted(build_canonical(self.game, 1))
        self.assertFalse(result.passed)
        self.assertIn('(B,X) on level 2', [c.location for c in result.counterexamples])

    def test_full_support_reports_coverage_readings(self):
        result = check_full_support_restricted(self.structure)
        self.assertTrue(result.passed)
        self.assertEqual(len(result.notes), 2)

    def test_frame_detects_ignored_deviation(self):
        broken = corrupted(self.structure, closest={(World((B, X), 2), P1, A): World((B, X), 1)})
        result = check_frame_conditions(broken)
        self.assertFalse(result.passed)
        self.assertIn('closest state ignores the deviation', [c.detail for c in result.counterexamples])

    def test_frame_detects_class_mismatch(self):
        broken = corrupted(self.structure, classes={World((B, Y), 2): WorldClass.NORMAL})
        self.assertFalse(check_frame_conditions(broken).passed)

    def test_no_iterated_necessity_without_possible_worlds(self):
        result = check_no_iterated_necessity(build_canonical(self.game, 0))
        self.assertTrue(result.passed)
        self.assertEqual(len(result.notes), 1)

    def test_no_iterated_necessity_reports_holding_formula(self):
        # 非正常世界上 box 恒假，且从每个正常世界都可达，
        # 改结构表无法让 box(box(RAT)) 成立，只能替换求值函数
        with mock.patch('verification.checks.evaluate', return_value=True):
            result = check_no_iterated_necessity(self.structure)
        self.assertFalse(result.passed)
        self.assertEqual(
            {c.location for c in result.counterexamples},
            {f"(B,X)@{k}" for k in range(2, 5)},
        )

    def test_counterexample_carries_digest(self):
        broken = corrupted(self.structure, closest={(World((B, X), 2), P1, A): World((A, X), 2)})
        counterexample = check_lemma_cascading(broken).counterexamples[0]
        self.assertEqual(len(counterexample.digest), settings.PTE_DIGEST_LENGTH)
        self.assertTrue(str(counterexample).startswith(f"[{counterexample.digest}] (B,X)@2"))


class TheoremCheckTests(SimpleTestCase):
    def test_reference_levels(self):
        game = reference_game()
        structure = build_canonical(game)
        self.assertEqual(characterized_profiles(structure, 1), {(B, X), (B, Y)})
        self.assertEqual(characterized_profiles(structure, 2), {(B, X)})
        self.assertTrue(verify_theorem_level(game, 1).passed)
        self.assertTrue(verify_theorem_level(game, 2).passed)
        self.assertEqual(verify_theorem_level(game, 2).name, 'theorem_level_2')

    def test_prisoners_dilemma(self):
        self.assertTrue(verify_theorem_level(prisoners_dilemma(), 2).passed)
        self.assertTrue(verify_pte_characterization(prisoners_dilemma()).passed)

    def test_structure_is_extended_when_too_short(self):
        game = reference_game()
        self.assertTrue(verify_theorem_level(game, 6, build_canonical(game, 2)).passed)

    def test_theorem_level_detects_wrong_class(self):
        # (B,Y)@2 不是第 2 层理性的；把它改成正常世界后各处的 box(RAT) 都不成立
        game = reference_game()
        broken = corrupted(build_canonical(game), classes={World((B, Y), 2): WorldClass.NORMAL})
        self.assertTrue(verify_theorem_level(game, 1, broken).passed)
        result = verify_theorem_level(game, 2, broken)
        self.assertFalse(result.passed)
        self.assertEqual(result.counterexamples[0].location, '(B,X) on level 2')

    def test_characterization_detects_wrong_class(self):
        game = reference_game()
        broken = corrupted(build_canonical(game), classes={World((B, Y), 2): WorldClass.NORMAL})
        result = verify_pte_characterization(game, broken)
        self.assertFalse(result.passed)
        self.assertEqual(result.counterexamples[0].location, 'outcome')
        self.assertIn('PTE (B,X)', result.counterexamples[0].detail)

    def test_invalid_level(self):
        with self.assertRaises(ValueError):
            verify_theorem_level(reference_game(), 0)

    def test_characterization(self):
        result = verify_pte_characterization(reference_game())
        self.assertTrue(result.passed)
        self.assertEqual(len(result.notes), 1)

    def test_characterization_without_equilibrium(self):
        game = no_equilibrium_game()
        self.assertIs(compute_pte(game).kind, OutcomeKind.NONE)
        self.assertTrue(verify_pte_characterization(game).passed)

    def test_seeded_none_game(self):
        found = None
        for seed in range(1000):
            game = generate_random_game(seed, (2, 2))
            if compute_pte(game).kind is OutcomeKind.NONE:
                found = game
                break
        self.assertIsNotNone(found)
        results = run_game_checks(found)
        self.assertTrue(all(result.passed for result in results), [r.name for r in results if not r.passed])


class PropertyCheckTests(SimpleTestCase):
    def test_elimination_properties(self):
        for game in (reference_game(), prisoners_dilemma(), no_equilibrium_game(), trivial_game()):
            with self.subTest(game=game):
                self.assertTrue(check_elimination_properties(game).passed)

    def test_hofstadter(self):
        self.assertTrue(check_hofstadter(prisoners_dilemma()).passed)
        skipped = check_hofstadter(reference_game())
        self.assertTrue(skipped.passed)
        self.assertEqual(skipped.notes, ('not a symmetric two-player game; skipped',))

    def test_elimination_properties_reject_multiple(self):
        game = reference_game()
        trace = compute_trace(game)
        several = dataclasses.replace(trace, outcome=Outcome(OutcomeKind.MULTIPLE, frozenset({(B, X), (B, Y)})))
        result = check_elimination_properties(game, several)
        self.assertFalse(result.passed)
        self.assertIn('outcome', [c.location for c in result.counterexamples])

    def test_elimination_properties_reject_nesting_hits(self):
        game = reference_game()
        trace = compute_trace(game)
        levels = list(trace.levels)
        levels[1] = dataclasses.replace(levels[1], outside_previous=frozenset({(A, X)}))
        result = check_elimination_properties(game, dataclasses.replace(trace, levels=tuple(levels)))
        self.assertFalse(result.passed)
        self.assertEqual([c.location for c in result.counterexamples], ['S_1'])

    def test_elimination_properties_compare_with_oracle(self):
        game = reference_game()
        trace = compute_trace(game)
        levels = list(trace.levels)
        levels[2] = dataclasses.replace(levels[2], members=frozenset({(B, X), (B, Y)}))
        result = check_elimination_properties(game, dataclasses.replace(trace, levels=tuple(levels)))
        self.assertIn('S_2', [c.location for c in result.counterexamples])

    def test_hofstadter_detects_other_equilibrium(self):
        game = prisoners_dilemma()
        trace = dataclasses.replace(compute_trace(game), outcome=Outcome(OutcomeKind.PTE, frozenset({(D, D)})))
        result = check_hofstadter(game, trace)
        self.assertFalse(result.passed)
        self.assertEqual(result.counterexamples[0].location, '(D,D)')
        self.assertEqual(result.counterexamples[0].detail, 'Hofstadter profile is (C,C)')

    def test_run_game_checks(self):
        results = run_game_checks(reference_game())
        names = [result.name for result in results]
        self.assertEqual(names[0], 'elimination_properties')
        self.assertIn('theorem_level_3', names)
        self.assertNotIn('theorem_level_4', names)
        self.assertEqual(names[-2:], ['pte_characterization', 'hofstadter'])
        self.assertTrue(all(result.passed for result in results))


class SweepTests(SimpleTestCase):
    def test_parse_seed_range(self):
        self.assertEqual(parse_seed_range('0..999'), range(0, 1000))
        self.assertEqual(parse_seed_range('5'), range(5, 6))
        self.assertEqual(len(parse_seed_range('5..4')), 0)
        with self.assertRaises(UsageError):
            parse_seed_range('a..b')

    def test_small_sweep_passes(self):
        report = run_sweep(range(0, 24), workers=1)
        self.assertEqual(report.games, 24)
        self.assertEqual(sum(report.outcomes.values()), 24)
        self.assertNotIn(OutcomeKind.MULTIPLE.value, report.outcomes)
        self.assertTrue(report.passed, format_sweep(report))
        self.assertIn('PASS lemma_cascading counterexamples=0', format_sweep(report))

    def test_empty_sweep_is_vacuous(self):
        report = run_sweep(range(0), ['2x2'], workers=1)
        self.assertEqual(report.games, 0)
        self.assertTrue(report.passed)
        self.assertTrue(format_sweep(report).endswith('result: PASS\n'))

    def test_shapes_cycle_over_seeds(self):
        report = run_sweep(range(0, 4), ['2x2', '3x3'], workers=1)
        self.assertEqual(report.label, 'seeds 0..3 shapes 2x2,3x3')

    def test_symmetric_sweep(self):
        report = run_symmetric_sweep(range(0, 30), [2, 3, 4], workers=1)
        self.assertEqual(report.games, 30)
        self.assertTrue(report.passed, format_sweep(report))

    def test_report_keeps_check_order(self):
        report = SweepReport(label='fixture')
        first = ('theorem_level_1', 'theorem_level_2', 'pte_characterization', 'hofstadter')
        second = ('elimination_properties', 'theorem_level_1', 'theorem_level_2', 'theorem_level_10',
                  'theorem_level_3', 'pte_characterization', 'hofstadter')
        for seed, names in enumerate((first, second)):
            report.merge(GameReport(seed=seed, shape='2x2', digest='abc', outcome='PTE', game_text='{}\n',
                                    results=tuple(CheckResult(name) for name in names)))
        self.assertEqual(list(report.results), [
            'elimination_properties', 'theorem_level_1', 'theorem_level_2', 'theorem_level_3',
            'theorem_level_10', 'pte_characterization', 'hofstadter',
        ])
        lines = format_sweep(report).splitlines()
        self.assertLess(lines.index('PASS theorem_level_10 counterexamples=0'),
                        lines.index('PASS hofstadter counterexamples=0'))

    def test_failures_are_merged_with_location(self):
        failing = CheckResult('lemma_cascading', (Counterexample('abc', '(B,X)@2 P1->A', 'wrong level'),))
        report = SweepReport(label='fixture')
        report.merge(GameReport(seed=7, shape='2x2', digest='abc', outcome='PTE',
                                game_text='{}\n', results=(failing, CheckResult('hofstadter'))))
        self.assertFalse(report.passed)
        self.assertEqual(report.failure_count, 1)
        self.assertEqual(report.results['lemma_cascading'].counterexamples[0].location,
                         'seed=7 shape=2x2 (B,X)@2 P1->A')
        data = sweep_to_dict(report)
        self.assertEqual(data['failing_games'], {'abc': '{}\n'})
        self.assertIn('FAIL lemma_cascading counterexamples=1', format_sweep(report))


class RecordSweepTests(TestCase):
    def test_record_failing_report(self):
        failing = CheckResult('lemma_omniscience', (Counterexample('abc', '(B,X)@2', 'omn(2) does not hold'),))
        report = SweepReport(label='fixture')
        report.merge(GameReport(seed=1, shape='2x2', digest='abc', outcome='PTE',
                                game_text='{}\n', results=(failing,)))
        run = record_sweep(report)
        self.assertFalse(run.passed)
        self.assertEqual(run.failure_count, 1)
        failure = CheckFailure.objects.get(run=run)
        self.assertEqual(failure.check_name, 'lemma_omniscience')
        self.assertEqual(failure.game_text, '{}\n')

    def test_verify_record(self):
        call_command('verify', '--seeds', '0..3', '--record', stdout=StringIO(), stderr=StringIO())
        run = SweepRun.objects.get()
        self.assertTrue(run.passed)
        self.assertEqual(run.games, 4)
        self.assertFalse(run.failures.exists())


class VerificationCommandTests(SimpleTestCase):
    reference = str(GAMES_DIR / 'reference.json')

    def test_verify_text(self):
        out = StringIO()
        call_command('verify', '--seeds', '0..7', '--shape', '2x2', '--shape', '2x3', stdout=out)
        self.assertIn('sweep seeds 0..7 shapes 2x2,2x3: 8 games', out.getvalue())
        self.assertTrue(out.getvalue().endswith('result: PASS\n'))

    def test_verify_report_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'sweep.txt'
            call_command('verify', '--seeds', '0..3', '--symmetric-seeds', '0..5', '--report', str(path),
                         stdout=StringIO(), stderr=StringIO())
            self.assertIn('result: PASS', path.read_text(encoding='utf-8'))
            summary = json.loads((Path(tmp) / 'sweep.summary.json').read_text(encoding='utf-8'))
        self.assertEqual(len(summary), 2)
        self.assertTrue(all(part['passed'] for part in summary))

    def test_verify_json_report_keeps_text(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'sweep.json'
            call_command('verify', '--seeds', '0..1', '--report', str(path), stdout=StringIO(), stderr=StringIO())
            self.assertTrue(path.read_text(encoding='utf-8').startswith('sweep seeds 0..1'))
            summary = json.loads((Path(tmp) / 'sweep.summary.json').read_text(encoding='utf-8'))
        self.assertEqual(summary[0]['games'], 2)

    def test_verify_bad_arguments(self):
        with self.assertRaises(CommandError):
            call_command('verify', '--seeds', 'zero', stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('verify', '--seeds', '0..1', '--shape', '3y3', stdout=StringIO())

    def test_check_lemmas(self):
        out = StringIO()
        call_command('check_lemmas', '--game', self.reference, stdout=out)
        self.assertIn('PASS lemma_cascading', out.getvalue())
        self.assertIn('PASS theorem_level_2', out.getvalue())

    def test_check_lemmas_truncated(self):
        out = StringIO()
        with self.assertRaises(SystemExit) as ctx:
            call_command('check_lemmas', '--game', self.reference, '--max-level', '1', stdout=out)
        self.assertEqual(ctx.exception.code, 2)
        self.assertIn('FAIL full_support_restricted', out.getvalue())

    def test_check_lemmas_json(self):
        out = StringIO()
        call_command('check_lemmas', '--game', self.reference, '--format', 'json', stdout=out)
        data = json.loads(out.getvalue())
        self.assertEqual(data['max_level'], 4)
        self.assertTrue(all(check['passed'] for check in data['checks']))
