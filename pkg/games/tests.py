import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .core import (
    build_game,
    check_profile,
    enumerate_profiles,
    format_profile,
    format_profiles,
    game_digest,
    generate_random_game,
    generate_random_symmetric_game,
    is_symmetric,
    load_game,
    parse_game,
    parse_shape,
    payoff,
    serialize_game,
    validate_game,
)
from .elimination import (
    DIVERGED,
    Outcome,
    OutcomeKind,
    classic_individually_rational,
    compare,
    compute_pte,
    compute_trace,
    eliminate_step,
    format_trace,
    hofstadter_profile,
    initial_level,
    is_level_k_ir,
    is_pareto_optimal,
    level_set,
    maximin_threshold,
    pareto_optimal_set,
    pure_nash,
    trace_to_dict,
)
from .exceptions import GameError, GameFormatError, NotSymmetricError, TiesViolationError, UsageError
from .fixtures import (
    no_equilibrium_game,
    prisoners_dilemma,
    reference_game,
    single_player_game,
    tied_game,
    trivial_game,
)

A, B = 0, 1
X, Y = 0, 1
C, D = 0, 1

GAMES_DIR = settings.BASE_DIR / 'data' / 'games'


class GameCoreTests(SimpleTestCase):
    def test_reference_payoffs(self):
        game = reference_game()
        self.assertEqual(game.strategy_counts, (2, 2))
        self.assertEqual(game.profile_count, 4)
        self.assertEqual(payoff(game, (A, X), 0), 3)
        self.assertEqual(payoff(game, (A, X), 1), 0)
        self.assertEqual(game.profiles, ((A, X), (A, Y), (B, X), (B, Y)))

    def test_enumeration_order(self):
        game = generate_random_game(2, (2, 3))
        profiles = enumerate_profiles(game)
        self.assertEqual(len(profiles), 6)
        self.assertEqual(profiles, sorted(profiles))
        self.assertEqual(profiles[:3], [(0, 0), (0, 1), (0, 2)])

    def test_payoffs_are_read_only(self):
        game = reference_game()
        with self.assertRaises(ValueError):
            game.payoffs[0, 0, 0] = 9

    def test_default_labels(self):
        game = build_game(np.zeros((3, 2, 1, 2), dtype=int))
        self.assertEqual(game.players, ('P1', 'P2', 'P3'))
        self.assertEqual(game.strategies[0], ('S1', 'S2'))

    def test_label_mismatch(self):
        with self.assertRaises(GameFormatError):
            build_game([[[0, 1]], [[1, 0]]], strategies=[['A'], ['X']])

    def test_check_profile(self):
        game = reference_game()
        self.assertEqual(check_profile(game, [1, 0]), (B, X))
        with self.assertRaises(UsageError):
            check_profile(game, (2, 0))
        with self.assertRaises(UsageError):
            check_profile(game, (0,))
        with self.assertRaises(UsageError):
            payoff(game, (A, X), 2)

    def test_validate(self):
        self.assertTrue(validate_game(reference_game()).ok)
        report = validate_game(tied_game())
        self.assertFalse(report.ok)
        violation = report.violations[0]
        self.assertEqual((violation.player, violation.value), (0, 1))
        self.assertEqual(violation.profiles, ((A, Y), (B, X)))
        self.assertIn('player 0 repeats 1', report.summary())

    def test_parse_reference_file(self):
        game, report = load_game((GAMES_DIR / 'reference.json').read_text(encoding='utf-8'))
        self.assertEqual(game, reference_game())
        self.assertTrue(report.ok)

    def test_load_tied_file_reports(self):
        with self.assertLogs('games.core', level='WARNING'):
            game, report = load_game((GAMES_DIR / 'tied.json').read_text(encoding='utf-8'))
        self.assertEqual(game, tied_game())
        self.assertFalse(report.ok)

    def test_serialize_parses_back(self):
        game = generate_random_game(5, (2, 3))
        self.assertEqual(parse_game(serialize_game(game)), game)

    def test_parse_errors(self):
        good = {'players': ['P1', 'P2'], 'strategies': [['A'], ['X', 'Y']], 'payoffs': [[0, 1], [1, 0]]}
        cases = [
            {**good, 'players': []},
            {k: v for k, v in good.items() if k != 'payoffs'},
            {**good, 'payoffs': [[0, 1, 2], [1, 0]]},
            {**good, 'payoffs': [[0, 1.5], [1, 0]]},
            {**good, 'payoffs': [[0, True], [1, 0]]},
            {**good, 'payoffs': [[0, 10 ** 23], [1, 0]]},
            {**good, 'payoffs': [[0, -2 ** 64], [1, 0]]},
            {**good, 'strategies': [['A'], []]},
            {**good, 'strategies': [['A']]},
        ]
        self.assertEqual(parse_game(json.dumps(good)).strategy_counts, (1, 2))
        for data in cases:
            with self.subTest(data=data):
                with self.assertRaises(GameFormatError):
                    parse_game(json.dumps(data))

    def test_json_error_position(self):
        with self.assertRaises(GameFormatError) as ctx:
            parse_game('{\n  "players": [\n}')
        self.assertEqual(ctx.exception.line, 3)

    def test_random_games(self):
        first = generate_random_game(42, (3, 3))
        self.assertEqual(first, generate_random_game(42, (3, 3)))
        self.assertNotEqual(first, generate_random_game(43, (3, 3)))
        self.assertTrue(validate_game(first).ok)
        self.assertEqual(generate_random_game(0, (2, 2, 2)).payoffs.shape, (3, 2, 2, 2))
        with self.assertRaises(GameError):
            generate_random_game(0, (0, 2))
        with self.assertRaises(GameError):
            generate_random_game(-1, (2, 2))
        with self.assertRaises(GameError):
            generate_random_symmetric_game(-1, 2)

    def test_build_game_rejects_oversized_payoffs(self):
        with self.assertRaises(GameFormatError):
            build_game([[[0, 10 ** 23]], [[1, 0]]])
        with self.assertRaises(GameFormatError):
            build_game([[[0, 1]], [[1]]])

    def test_random_symmetric_game(self):
        game = generate_random_symmetric_game(11, 3)
        self.assertTrue(is_symmetric(game))
        self.assertTrue(validate_game(game).ok)
        self.assertFalse(is_symmetric(reference_game()))
        self.assertTrue(is_symmetric(prisoners_dilemma()))

    def test_parse_shape(self):
        self.assertEqual(parse_shape('3x3'), (3, 3))
        self.assertEqual(parse_shape('2X2x2'), (2, 2, 2))
        for text in ['3y3', '0x2', '']:
            with self.subTest(text=text):
                with self.assertRaises(GameError):
                    parse_shape(text)

    def test_digest(self):
        digest = game_digest(reference_game())
        self.assertEqual(len(digest), settings.PTE_DIGEST_LENGTH)
        self.assertEqual(digest, game_digest(reference_game()))
        self.assertNotEqual(digest, game_digest(prisoners_dilemma()))

    def test_format_profiles(self):
        game = reference_game()
        self.assertEqual(format_profile(game, (B, X)), '(B,X)')
        self.assertEqual(format_profiles(game, [(B, Y), (A, X)]), '{(A,X), (B,Y)}')
        self.assertEqual(format_profiles(game, []), '{}')


class EliminationTests(SimpleTestCase):
    def test_maximin_thresholds(self):
        game = reference_game()
        s0 = initial_level(game)
        s1 = eliminate_step(game, s0)
        self.assertEqual(maximin_threshold(game, s0, 0), 1)
        self.assertEqual(maximin_threshold(game, s1, 1), 2)
        self.assertIs(maximin_threshold(game, [], 0), DIVERGED)
        with self.assertRaises(UsageError):
            maximin_threshold(game, s0, 2)

    def test_elimination_steps(self):
        game = reference_game()
        s1 = eliminate_step(game, initial_level(game))
        s2 = eliminate_step(game, s1)
        s3 = eliminate_step(game, s2)
        self.assertEqual(s1.level, 1)
        self.assertEqual(s1.members, {(B, X), (B, Y)})
        self.assertEqual(s2.members, {(B, X)})
        self.assertEqual(s3.members, {(B, X)})

    def test_reference_trace(self):
        trace = compute_trace(reference_game())
        self.assertEqual(trace.fixpoint_level, 2)
        self.assertEqual(trace.outcome, Outcome(OutcomeKind.PTE, frozenset({(B, X)})))
        self.assertEqual(trace.thresholds[1].values, (1, 1))
        self.assertEqual(trace.thresholds[2].values, (1, 2))
        self.assertEqual(trace.nesting_audit, [])
        self.assertEqual(trace.fixpoint_set, {(B, X)})

    def test_trivial_and_single_player(self):
        trace = compute_trace(trivial_game())
        self.assertEqual(trace.fixpoint_level, 1)
        self.assertEqual(trace.outcome.profile, (0, 0))
        self.assertEqual(compute_pte(single_player_game()).profile, (0,))

    def test_prisoners_dilemma(self):
        game = prisoners_dilemma()
        trace = compute_trace(game)
        self.assertEqual(level_set(trace, 1).members, {(C, C), (D, D)})
        self.assertEqual(trace.outcome.profile, (C, C))
        self.assertEqual(pure_nash(game), {(D, D)})
        self.assertTrue(is_pareto_optimal(game, (C, C)))
        self.assertFalse(is_pareto_optimal(game, (D, D)))
        self.assertEqual(pareto_optimal_set(game), {(C, C), (C, D), (D, C)})

    def test_no_equilibrium(self):
        trace = compute_trace(no_equilibrium_game())
        self.assertIs(trace.outcome.kind, OutcomeKind.NONE)
        self.assertIsNone(trace.outcome.profile)
        self.assertEqual(trace.fixpoint_level, 2)
        self.assertEqual(trace.thresholds[2].values, (3, 3))
        self.assertEqual(level_set(trace, 7).members, frozenset())

    def test_ties_rejected(self):
        with self.assertRaises(TiesViolationError) as ctx:
            compute_trace(tied_game())
        self.assertFalse(ctx.exception.report.ok)

    def test_level_k_ir(self):
        game = reference_game()
        self.assertTrue(is_level_k_ir(game, (B, Y), 1))
        self.assertFalse(is_level_k_ir(game, (B, Y), 2))
        self.assertTrue(is_level_k_ir(game, (A, X), 0))
        self.assertTrue(is_level_k_ir(game, (B, X), 50))
        with self.assertRaises(UsageError):
            is_level_k_ir(game, (A, X), -1)

    def test_level_set_beyond_trace(self):
        trace = compute_trace(reference_game())
        self.assertEqual(level_set(trace, 10).members, {(B, X)})
        self.assertEqual(level_set(trace, 10).level, 10)

    def test_classic_individual_rationality(self):
        for game in (reference_game(), prisoners_dilemma(), generate_random_game(8, (3, 3))):
            with self.subTest(game=game):
                self.assertEqual(classic_individually_rational(game), level_set(compute_trace(game), 1).members)

    def test_random_games_settle_and_nest(self):
        for seed in range(30):
            game = generate_random_game(seed, (3, 3))
            trace = compute_trace(game)
            with self.subTest(seed=seed):
                self.assertLessEqual(trace.fixpoint_level, game.profile_count)
                self.assertEqual(trace.nesting_audit, [])
                self.assertIsNot(trace.outcome.kind, OutcomeKind.MULTIPLE)
                for earlier, later in zip(trace.levels, trace.levels[1:]):
                    self.assertLessEqual(later.members, earlier.members)
                if trace.outcome.kind is OutcomeKind.PTE:
                    self.assertTrue(is_pareto_optimal(game, trace.outcome.profile))

    def test_hofstadter(self):
        self.assertEqual(hofstadter_profile(prisoners_dilemma()), (C, C))
        self.assertEqual(hofstadter_profile(build_game([[[5]], [[5]]])), (0, 0))
        game = generate_random_symmetric_game(11, 3)
        best = int(np.argmax(np.diagonal(game.payoffs[0])))
        self.assertEqual(hofstadter_profile(game), (best, best))
        with self.assertRaises(NotSymmetricError):
            hofstadter_profile(reference_game())
        with self.assertRaises(NotSymmetricError):
            hofstadter_profile(single_player_game())

    def test_compare(self):
        report = compare(prisoners_dilemma())
        self.assertEqual(report.outcome.profile, (C, C))
        self.assertEqual(report.pure_nash, {(D, D)})
        self.assertEqual(report.individually_rational, {(C, C), (D, D)})
        self.assertEqual(report.hofstadter, (C, C))
        self.assertIsNone(compare(reference_game()).hofstadter)

    def test_outcome_describe(self):
        game = reference_game()
        self.assertEqual(Outcome.from_fixpoint(frozenset({(B, X)})).describe(game), 'PTE (B,X)')
        self.assertEqual(Outcome.from_fixpoint(frozenset()).describe(game), 'NONE')
        multiple = Outcome.from_fixpoint(frozenset({(B, Y), (A, X)}))
        self.assertIs(multiple.kind, OutcomeKind.MULTIPLE)
        self.assertEqual(multiple.describe(game), 'MULTIPLE {(A,X), (B,Y)}')

    def test_format_trace(self):
        self.assertEqual(format_trace(compute_trace(reference_game())), (
            "0 | thresholds=- | survivors={(A,X), (A,Y), (B,X), (B,Y)}\n"
            "1 | thresholds=(1,1) | survivors={(B,X), (B,Y)}\n"
            "2 | thresholds=(1,2) | survivors={(B,X)}\n"
            "3 | thresholds=(1,2) | survivors={(B,X)}\n"
            "outcome=PTE (B,X)\n"
        ))
        self.assertTrue(format_trace(compute_trace(no_equilibrium_game())).endswith('outcome=NONE\n'))

    def test_trace_to_dict(self):
        data = trace_to_dict(compute_trace(reference_game()))
        self.assertEqual(data['fixpoint_level'], 2)
        self.assertIsNone(data['levels'][0]['thresholds'])
        self.assertEqual(data['levels'][2]['survivors'], ['(B,X)'])
        self.assertEqual(data['outcome'], {'kind': 'PTE', 'profiles': ['(B,X)']})


class GameCommandTests(SimpleTestCase):
    def game_file(self, name):
        return str(GAMES_DIR / f"{name}.json")

    def run_command(self, *args):
        out = StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()

    def test_solve(self):
        out = self.run_command('solve', '--game', self.game_file('reference'))
        self.assertEqual(out, 'PTE (B,X) [fixpoint level 2]\n')
        out = self.run_command('solve', '--game', self.game_file('trivial'))
        self.assertEqual(out, 'PTE (A,X) [fixpoint level 1]\n')

    def test_solve_json(self):
        data = json.loads(self.run_command('solve', '--game', self.game_file('prisoners_dilemma'), '--format', 'json'))
        self.assertEqual(data, {'fixpoint_level': 2, 'kind': 'PTE', 'profiles': ['(C,C)']})

    def test_solve_none_exits_2(self):
        out = StringIO()
        with self.assertRaises(SystemExit) as ctx:
            call_command('solve', '--game', self.game_file('no_equilibrium'), stdout=out)
        self.assertEqual(ctx.exception.code, 2)
        self.assertEqual(out.getvalue(), 'NONE [fixpoint level 2]\n')

    def test_solve_rejects_bad_input(self):
        with self.assertRaises(CommandError):
            self.run_command('solve', '--game', self.game_file('tied'))
        with self.assertRaises(CommandError):
            self.run_command('solve', '--game', self.game_file('missing'))

    def test_solve_rejects_oversized_payoff(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'huge.json'
            path.write_text(json.dumps({
                'players': ['P1', 'P2'],
                'strategies': [['A'], ['X', 'Y']],
                'payoffs': [[0, 99999999999999999999999], [1, 0]],
            }), encoding='utf-8')
            with self.assertRaisesMessage(CommandError, 'does not fit in 64 bits'):
                self.run_command('solve', '--game', str(path))

    def test_trace(self):
        out = self.run_command('trace', '--game', self.game_file('reference'))
        self.assertEqual(out, format_trace(compute_trace(reference_game())))

    def test_compare(self):
        out = self.run_command('compare', '--game', self.game_file('prisoners_dilemma'))
        lines = out.splitlines()
        self.assertIn('PTE=(C,C)', lines)
        self.assertIn('Nash={(D,D)}', lines)
        self.assertIn('S1={(C,C), (D,D)}', lines)
        self.assertIn('Hofstadter=(C,C)', lines)

    def test_compare_without_symmetry(self):
        out = self.run_command('compare', '--game', self.game_file('reference'))
        self.assertNotIn('Hofstadter', out)

    def test_generate(self):
        out = self.run_command('generate', '--seed', '3', '--shape', '3x3')
        self.assertEqual(parse_game(out), generate_random_game(3, (3, 3)))
        out = self.run_command('generate', '--seed', '11', '--symmetric', '3')
        self.assertTrue(is_symmetric(parse_game(out)))

    def test_generate_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'game.json'
            self.run_command('generate', '--seed', '1', '--shape', '2x2', '--output', str(path))
            self.assertEqual(parse_game(path.read_text(encoding='utf-8')), generate_random_game(1, (2, 2)))

    def test_generate_bad_arguments(self):
        with self.assertRaises(CommandError):
            self.run_command('generate', '--seed', '1', '--shape', '2y2')
        with self.assertRaises(CommandError):
            self.run_command('generate', '--seed', '1', '--shape', '2x2', '--symmetric', '2')
        with self.assertRaisesMessage(CommandError, 'seed must be non-negative'):
            self.run_command('generate', '--seed=-1', '--shape', '2x2')
        with self.assertRaisesMessage(CommandError, 'seed must be non-negative'):
            self.run_command('generate', '--seed=-1', '--symmetric', '2')

    def test_identical_runs_are_identical(self):
        first = self.run_command('trace', '--game', self.game_file('prisoners_dilemma'), '--format', 'json')
        second = self.run_command('trace', '--game', self.game_file('prisoners_dilemma'), '--format', 'json')
        self.assertEqual(first, second)
