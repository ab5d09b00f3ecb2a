from django.core.management.base import CommandError

from games.cli import EXIT_FALSE, EXIT_OK, GameCommand
from games.elimination import compute_trace
from games.exceptions import FormulaSyntaxError, UsageError
from kripke.evaluation import EvalContext, evaluate
from kripke.formulas import format_formula, parse_formula, parse_world
from kripke.structure import AUTO, build_canonical


class Command(GameCommand):
    help = "Evaluate a modal formula at a world of the canonical structure."

    def add_arguments(self, parser):
        self.add_game_argument(parser)
        parser.add_argument('--formula', required=True, metavar='<text>',
                            help='Formula, e.g. "play(B,X) & box(RAT) & box(KS) & omn(2)"')
        parser.add_argument('--world', required=True, metavar='(<labels>)@<level>',
                            help='World literal, e.g. "(B,X)@2"')
        self.add_max_level_argument(parser)
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        game = self.read_game(options['game'])
        try:
            formula = parse_formula(options['formula'], game)
            world = parse_world(options['world'], game)
        except FormulaSyntaxError as e:
            raise CommandError(str(e))

        trace = compute_trace(game)
        max_level = options['max_level']
        if max_level == AUTO:
            structure = build_canonical(game, AUTO, trace)
            if world.level > structure.max_level:
                structure = build_canonical(game, world.level, trace)
        else:
            structure = build_canonical(game, max_level, trace)

        try:
            result = evaluate(EvalContext(structure), world, formula)
        except UsageError as e:
            raise CommandError(str(e))

        if options['format'] == 'json':
            self.write_json({
                'formula': format_formula(formula, game),
                'world': structure.describe(world),
                'class': structure.class_of(world).value,
                'max_level': structure.max_level,
                'value': result,
            })
        else:
            self.stdout.write('true' if result else 'false')

        self.finish(EXIT_OK if result else EXIT_FALSE)
