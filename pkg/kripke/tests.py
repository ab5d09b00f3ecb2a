import dataclasses
from io import StringIO

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from games.exceptions import FormulaSyntaxError, TiesViolationError, UsageError
from games.fixtures import prisoners_dilemma, reference_game, tied_game, trivial_game

from .evaluation import (
    EvalContext,
    eval_knowledge,
    eval_omniscience,
    eval_rat,
    evaluate,
    necessity,
    possibility,
)
from .export import export_structure
from .formulas import (
    KSIGMA,
    RAT,
    TRUE,
    box,
    conj,
    dia,
    dia_c,
    disj,
    format_formula,
    iff,
    implies,
    neg,
    omn,
    parse_formula,
    parse_world,
    play,
    play_i,
)
from .structure import (
    World,
    WorldClass,
    build_canonical,
    closest_state,
    epistemically_accessible,
    level_of,
    logically_accessible,
    profile_of,
)

# 参考博弈的策略下标
A, B = 0, 1
X, Y = 0, 1
P1, P2 = 0, 1

GAMES_DIR = settings.BASE_DIR / 'data' / 'games'


class CanonicalStructureTests(SimpleTestCase):
    def setUp(self):
        self.game = reference_game()
        self.structure = build_canonical(self.game)

    def test_auto_level_is_fixpoint_plus_margin(self):
        self.assertEqual(self.structure.max_level, 4)
        self.assertEqual(len(self.structure.worlds), 4 * 5)

    def test_explicit_level(self):
        self.assertEqual(build_canonical(self.game, 2).max_level, 2)
        with self.assertRaises(UsageError):
            build_canonical(self.game, -1)

    def test_possible_worlds(self):
        expected = {World((B, X), k) for k in range(1, 5)} | {World((B, Y), 1)}
        self.assertEqual(set(self.structure.possible_worlds), expected)
        self.assertEqual(
            set(self.structure.normal_worlds),
            {World((B, X), k) for k in range(2, 5)},
        )

    def test_world_classes(self):
        for profile in self.game.profiles:
            self.assertIs(self.structure.class_of(World(profile, 0)), WorldClass.IMPOSSIBLE)
        self.assertIs(self.structure.class_of(World((B, Y), 1)), WorldClass.NONNORMAL_POSSIBLE)
        self.assertIs(self.structure.class_of(World((B, X), 1)), WorldClass.NONNORMAL_POSSIBLE)
        self.assertIs(self.structure.class_of(World((A, X), 1)), WorldClass.IMPOSSIBLE)
        self.assertIs(self.structure.class_of(World((B, X), 3)), WorldClass.NORMAL)
        self.assertIs(self.structure.class_of(World((B, Y), 2)), WorldClass.IMPOSSIBLE)

    def test_world_outside_structure(self):
        self.assertNotIn(World((B, X), 5), self.structure)
        with self.assertRaises(UsageError):
            self.structure.class_of(World((B, X), 5))

    def test_projections(self):
        w = World((A, Y), 3)
        self.assertEqual(level_of(w), 3)
        self.assertEqual(profile_of(w), (A, Y))

    def test_logical_accessibility(self):
        normal = World((B, X), 2)
        self.assertTrue(logically_accessible(self.structure, normal, World((B, Y), 1), P1))
        self.assertFalse(logically_accessible(self.structure, normal, World((A, X), 1), P1))
        self.assertTrue(logically_accessible(self.structure, World((B, Y), 1), World((A, X), 0), P2))
        self.assertTrue(logically_accessible(self.structure, World((A, X), 0), World((A, Y), 0), P2))

    def test_reaches_matches_logical_accessibility(self):
        for w in self.structure.worlds:
            for other in self.structure.worlds:
                expected = self.structure.is_possible(other) or not self.structure.is_normal(w)
                self.assertEqual(self.structure.reaches(w, other), expected)
                self.assertEqual(logically_accessible(self.structure, w, other, P2), expected)

    def test_logical_accessibility_checks_worlds(self):
        outside = World((B, X), 9)
        with self.assertRaises(UsageError):
            logically_accessible(self.structure, outside, World((B, X), 2), P1)
        with self.assertRaises(UsageError):
            logically_accessible(self.structure, World((B, X), 2), outside, P1)

    def test_epistemic_accessibility_is_equality(self):
        w = World((B, X), 2)
        self.assertTrue(epistemically_accessible(self.structure, w, w, P1))
        self.assertFalse(epistemically_accessible(self.structure, w, World((B, X), 3), P1))

    def test_unknown_agent(self):
        w = World((B, X), 2)
        with self.assertRaises(UsageError):
            logically_accessible(self.structure, w, w, 2)

    def test_closest_state_cases(self):
        s = self.structure
        # 第 0 层：直接替换
        self.assertEqual(closest_state(s, World((B, Y), 0), P1, A), World((A, Y), 0))
        # 自身策略：世界本身
        self.assertEqual(closest_state(s, World((B, X), 2), P1, B), World((B, X), 2))
        # 第 1 层没有 (A, .) 幸存：在低一层直接替换
        self.assertEqual(closest_state(s, World((B, X), 2), P1, A), World((A, X), 1))
        # 在 S_0 的 (., X) 中取对 P2 最坏的
        self.assertEqual(closest_state(s, World((B, Y), 1), P2, X), World((A, X), 0))
        self.assertEqual(closest_state(s, World((B, X), 2), P2, Y), World((B, Y), 1))

    def test_closest_state_keeps_the_deviation(self):
        s = self.structure
        for w in s.worlds:
            for i in range(self.game.player_count):
                for strategy in range(self.game.strategy_counts[i]):
                    target = closest_state(s, w, i, strategy)
                    self.assertEqual(target.profile[i], strategy)
                    if w.level >= 1 and strategy != w.profile[i]:
                        self.assertEqual(target.level, w.level - 1)

    def test_bad_closest_key(self):
        with self.assertRaises(UsageError):
            closest_state(self.structure, World((B, X), 2), P1, 5)

    def test_rejects_ties(self):
        with self.assertRaises(TiesViolationError):
            build_canonical(tied_game())

    def test_trivial_game(self):
        structure = build_canonical(trivial_game())
        self.assertEqual(structure.max_level, 3)
        self.assertIs(structure.class_of(World((0, 0), 1)), WorldClass.NONNORMAL_POSSIBLE)
        self.assertIs(structure.class_of(World((0, 0), 3)), WorldClass.NORMAL)


class EvaluationTests(SimpleTestCase):
    def setUp(self):
        self.game = reference_game()
        self.structure = build_canonical(self.game)
        self.ctx = EvalContext(self.structure)

    def test_theorem_formula_at_pte_world(self):
        formula = conj(play((B, X)), box(RAT), box(KSIGMA), omn(2))
        self.assertTrue(evaluate(self.ctx, World((B, X), 2), formula))

    def test_rationality(self):
        self.assertTrue(eval_rat(self.ctx, World((B, X), 2)))
        self.assertTrue(eval_rat(self.ctx, World((B, Y), 1)))
        self.assertTrue(eval_rat(self.ctx, World((A, X), 0)))

    def test_rationality_fails_on_improving_deviation(self):
        # 从非正常世界出发，每个偏离都可达
        corrupted = dataclasses.replace(
            self.structure,
            closest={**self.structure.closest, (World((B, Y), 1), P1, A): World((A, X), 0)},
        )
        self.assertFalse(eval_rat(EvalContext(corrupted), World((B, Y), 1)))

    def test_knowledge(self):
        for w in self.structure.worlds:
            self.assertTrue(eval_knowledge(self.ctx, w))

    def test_knowledge_fails_with_foreign_link(self):
        linked = dataclasses.replace(
            self.structure,
            epistemic_links=frozenset({(World((B, X), 2), World((B, Y), 1))}),
        )
        self.assertFalse(eval_knowledge(EvalContext(linked), World((B, X), 2)))
        self.assertTrue(eval_knowledge(EvalContext(linked), World((B, Y), 1)))

    def test_omniscience_levels(self):
        self.assertTrue(eval_omniscience(self.ctx, World((B, Y), 1), 1))
        self.assertTrue(eval_omniscience(self.ctx, World((B, X), 2), 2))
        self.assertFalse(eval_omniscience(self.ctx, World((B, X), 2), 3))
        self.assertFalse(eval_omniscience(self.ctx, World((B, X), 2), 1))
        self.assertTrue(eval_omniscience(self.ctx, World((B, X), 4), 4))
        with self.assertRaises(UsageError):
            eval_omniscience(self.ctx, World((B, X), 2), 0)

    def test_non_normal_modalities(self):
        w = World((B, Y), 1)
        self.assertFalse(evaluate(self.ctx, w, box(TRUE)))
        self.assertTrue(evaluate(self.ctx, w, dia(neg(TRUE))))
        self.assertTrue(evaluate(self.ctx, w, dia_c(neg(TRUE))))
        self.assertFalse(necessity(self.ctx, w, TRUE))
        self.assertTrue(possibility(self.ctx, w, neg(TRUE)))

    def test_normal_modalities(self):
        w = World((B, X), 2)
        self.assertTrue(necessity(self.ctx, w, RAT))
        self.assertFalse(necessity(self.ctx, w, play((B, X))))
        self.assertTrue(possibility(self.ctx, w, play((B, Y))))
        self.assertFalse(possibility(self.ctx, w, play((A, X))))

    def test_counterfactual_possibility(self):
        w = World((B, X), 2)
        self.assertTrue(evaluate(self.ctx, w, dia_c(play_i(P2, Y))))
        self.assertFalse(evaluate(self.ctx, w, dia_c(play_i(P1, A))))

    def test_impossible_world_atoms(self):
        w = World((A, X), 1)
        self.assertTrue(evaluate(self.ctx, w, RAT))
        self.assertTrue(evaluate(self.ctx, w, KSIGMA))
        self.assertTrue(evaluate(self.ctx, w, play((A, X))))
        self.assertFalse(evaluate(self.ctx, w, play((B, X))))
        self.assertTrue(evaluate(self.ctx, w, play_i(P2, X)))
        self.assertTrue(evaluate(self.ctx, w, omn(1)))
        self.assertFalse(evaluate(self.ctx, w, omn(2)))
        self.assertFalse(evaluate(self.ctx, w, box(TRUE)))
        self.assertTrue(evaluate(self.ctx, w, neg(play((B, Y)))))

    def test_no_iterated_necessity(self):
        for w in self.structure.normal_worlds:
            self.assertTrue(evaluate(self.ctx, w, box(RAT)))
            self.assertFalse(evaluate(self.ctx, w, box(box(RAT))))

    def test_derived_connectives(self):
        a, b = play((B, X)), RAT
        for w in self.structure.possible_worlds:
            self.assertEqual(
                evaluate(self.ctx, w, disj(a, b)),
                evaluate(self.ctx, w, neg(conj(neg(a), neg(b)))),
            )
            self.assertEqual(
                evaluate(self.ctx, w, implies(a, b)),
                evaluate(self.ctx, w, disj(neg(a), b)),
            )
            self.assertEqual(
                evaluate(self.ctx, w, iff(a, omn(1))),
                evaluate(self.ctx, w, a) == evaluate(self.ctx, w, omn(1)),
            )

    def test_memoized_matches_uncached(self):
        formulas = [
            RAT, box(RAT), box(KSIGMA), omn(1), omn(2), omn(3),
            dia_c(play_i(P1, A)), dia(play((B, Y))), box(box(RAT)),
        ]
        for game in (reference_game(), prisoners_dilemma()):
            structure = build_canonical(game)
            cached, plain = EvalContext(structure), EvalContext(structure, memoize=False)
            for w in structure.worlds:
                for formula in formulas:
                    self.assertEqual(evaluate(cached, w, formula), evaluate(plain, w, formula))


class FormulaTests(SimpleTestCase):
    def setUp(self):
        self.game = reference_game()

    def test_parse_theorem_formula(self):
        parsed = parse_formula('play(B,X) & box(RAT) & box(KS) & omn(2)', self.game)
        self.assertEqual(parsed, conj(play((B, X)), box(RAT), box(KSIGMA), omn(2)))

    def test_parse_counterfactual(self):
        self.assertEqual(parse_formula('dia_c(play_1(A))', self.game), dia_c(play_i(P1, A)))

    def test_parse_precedence(self):
        parsed = parse_formula('!RAT & KS | true -> omn(1) <-> false', self.game)
        expected = iff(implies(disj(conj(neg(RAT), KSIGMA), TRUE), omn(1)), neg(TRUE))
        self.assertEqual(parsed, expected)
        self.assertEqual(parse_formula('RAT -> KS -> true'), implies(RAT, implies(KSIGMA, TRUE)))

    def test_keywords_are_case_insensitive(self):
        self.assertEqual(parse_formula('BOX rat & Dia ks'), conj(box(RAT), dia(KSIGMA)))

    def test_strategy_indices_without_game(self):
        self.assertEqual(parse_formula('play(1,0)'), play((1, 0)))

    def test_quoted_strategy_labels(self):
        game = dataclasses.replace(self.game, strategies=(('go left', 'B'), ('X', 'say "y"')))
        self.assertEqual(parse_formula('play_1("go left")', game), play_i(P1, A))
        self.assertEqual(parse_formula('play("go left", 1)', game), play((A, Y)))
        self.assertEqual(format_formula(play((A, Y)), game), 'play("go left",1)')
        formula = conj(play((A, Y)), dia_c(play_i(P1, B)))
        self.assertEqual(parse_formula(format_formula(formula, game), game), formula)
        with self.assertRaises(FormulaSyntaxError):
            parse_formula('play_1("go left)', game)

    def test_syntax_errors(self):
        for text in ['box(', 'RAT &', 'omn(0)', 'play(B)', 'play_1(Z)', 'play_3(A)', 'foo', 'RAT $ KS']:
            with self.subTest(text=text):
                with self.assertRaises(FormulaSyntaxError):
                    parse_formula(text, self.game)

    def test_error_position(self):
        with self.assertRaises(FormulaSyntaxError) as ctx:
            parse_formula('RAT & $', self.game)
        self.assertEqual(ctx.exception.position, 6)

    def test_format_parses_back(self):
        formulas = [
            conj(play((B, X)), box(RAT), box(KSIGMA), omn(2)),
            neg(conj(RAT, KSIGMA)),
            implies(implies(RAT, KSIGMA), TRUE),
            disj(RAT, conj(KSIGMA, dia_c(play_i(P2, Y)))),
            iff(box(neg(RAT)), dia(omn(3))),
        ]
        for formula in formulas:
            with self.subTest(formula=format_formula(formula, self.game)):
                self.assertEqual(parse_formula(format_formula(formula, self.game), self.game), formula)

    def test_format_text(self):
        self.assertEqual(
            format_formula(conj(play((B, X)), box(RAT), omn(2)), self.game),
            'play(B,X) & box(RAT) & omn(2)',
        )

    def test_parse_world(self):
        self.assertEqual(parse_world('(B,X)@2', self.game), World((B, X), 2))
        self.assertEqual(parse_world(' ( A , Y ) @ 0', self.game), World((A, Y), 0))
        for text in ['(B,X)', '(B)@1', '(B,Q)@1', 'B,X@1']:
            with self.subTest(text=text):
                with self.assertRaises(FormulaSyntaxError):
                    parse_world(text, self.game)


class ExportTests(SimpleTestCase):
    def test_reference_graph(self):
        text = export_structure(build_canonical(reference_game()))
        self.assertTrue(text.startswith('digraph canonical {'))
        self.assertTrue(text.endswith('}\n'))
        self.assertIn('label="(B,X),2,NORMAL"', text)
        self.assertIn('label="(B,Y),1,NONNORMAL_POSSIBLE"', text)
        self.assertIn('label="(A,X),0,IMPOSSIBLE"', text)
        self.assertIn('w_1_0_2 -> w_0_0_1 [label="f:P1→A"];', text)

    def test_output_is_stable(self):
        game = reference_game()
        self.assertEqual(export_structure(build_canonical(game)), export_structure(build_canonical(game)))


class KripkeCommandTests(SimpleTestCase):
    reference = str(GAMES_DIR / 'reference.json')

    def run_command(self, *args):
        out = StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()

    def test_eval_true(self):
        out = self.run_command('eval', '--game', self.reference, '--formula', 'box(RAT)', '--world', '(B,X)@2')
        self.assertEqual(out.strip(), 'true')

    def test_eval_false_exits_2(self):
        out = StringIO()
        with self.assertRaises(SystemExit) as ctx:
            call_command('eval', '--game', self.reference, '--formula', 'box(true)',
                         '--world', '(B,Y)@1', stdout=out)
        self.assertEqual(ctx.exception.code, 2)
        self.assertEqual(out.getvalue().strip(), 'false')

    def test_eval_extends_auto_level(self):
        out = self.run_command('eval', '--game', self.reference, '--formula', 'omn(7)', '--world', '(B,X)@7')
        self.assertEqual(out.strip(), 'true')

    def test_eval_world_beyond_explicit_level(self):
        with self.assertRaises(CommandError):
            self.run_command('eval', '--game', self.reference, '--formula', 'RAT',
                             '--world', '(B,X)@3', '--max-level', '2')

    def test_eval_syntax_error(self):
        with self.assertRaises(CommandError):
            self.run_command('eval', '--game', self.reference, '--formula', 'box(', '--world', '(B,X)@2')

    def test_eval_json(self):
        out = self.run_command('eval', '--game', self.reference, '--formula', 'omn(2)',
                               '--world', '(B,X)@2', '--format', 'json')
        self.assertIn('"value": true', out)
        self.assertIn('"class": "NORMAL"', out)

    def test_export_structure(self):
        out = self.run_command('export_structure', '--game', self.reference, '--max-level', '2')
        self.assertIn('digraph canonical', out)
        self.assertNotIn(',3,', out)
